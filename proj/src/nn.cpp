#include "edde/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "edde/data.hpp"
#include "edde/error.hpp"
#include "edde/kernels.hpp"
#include "edde/random.hpp"

namespace edde::nn {

namespace {

constexpr double kProbFloor = 1e-12;

void affine(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out) {
    const std::size_t n_out = layer.bias.size();
    out.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double a = in[i];
        const auto w = layer.weights.row(i);
        for (std::size_t j = 0; j < n_out; ++j) out[j] += a * w[j];
    }
}

void activate(Activation act, std::vector<double>& v) {
    if (act == Activation::relu) {
        for (double& x : v) x = x > 0.0 ? x : 0.0;
    } else {
        for (double& x : v) x = std::tanh(x);
    }
}

void softmax_in_place(std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double& x : v) {
        x = std::exp(x - m);
        s += x;
    }
    for (double& x : v) x /= s;
}

// Derivative of the activation expressed through its output.
double activation_slope(Activation act, double out) {
    return act == Activation::relu ? (out > 0.0 ? 1.0 : 0.0) : 1.0 - out * out;
}

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation parse_activation(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ValidationError("unknown activation '" + name + "' (expected relu or tanh)");
}

void Architecture::validate() const {
    if (layer_sizes.size() < 2) throw ValidationError("architecture needs at least an input and an output layer");
    for (std::size_t i = 0; i < layer_sizes.size(); ++i)
        if (layer_sizes[i] == 0)
            throw ValidationError("architecture layer " + std::to_string(i) + " has zero width");
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

Network init_network(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    Network net{arch, {}, seed};
    net.layers.reserve(arch.weight_layers());
    for (std::size_t l = 0; l < arch.weight_layers(); ++l) {
        const std::size_t fan_in = arch.layer_sizes[l];
        const std::size_t fan_out = arch.layer_sizes[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Rng rng(derive_seed(seed, l));
        DenseLayer layer{Matrix(fan_in, fan_out), std::vector<double>(fan_out, 0.0)};
        for (double& w : layer.weights.flat()) w = rng.uniform(-limit, limit);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

Parameters zeros_like(const Network& net) {
    Parameters p;
    p.reserve(net.layers.size());
    for (const auto& l : net.layers)
        p.push_back({Matrix(l.weights.rows(), l.weights.cols()), std::vector<double>(l.bias.size(), 0.0)});
    return p;
}

void forward_trace(const Network& net, std::span<const double> x, Trace& trace) {
    if (x.size() != net.arch.inputs())
        throw ValidationError("forward: input has " + std::to_string(x.size()) + " features, network expects " +
                              std::to_string(net.arch.inputs()));
    const std::size_t n_layers = net.layers.size();
    trace.values.resize(n_layers + 1);
    trace.values[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < n_layers; ++l) {
        affine(net.layers[l], trace.values[l], trace.values[l + 1]);
        if (l + 1 < n_layers)
            activate(net.arch.activation, trace.values[l + 1]);
        else
            softmax_in_place(trace.values[l + 1]);
    }
}

std::vector<double> forward(const Network& net, std::span<const double> x) {
    Trace t;
    forward_trace(net, x, t);
    return std::move(t.values.back());
}

void sample_gradient(const Network& net, const Trace& trace, std::span<const double> output_grad,
                     Parameters& grad, std::vector<double>& scratch) {
    const auto& probs = trace.values.back();
    const std::size_t k = probs.size();
    if (output_grad.size() != k)
        throw ValidationError("backward: output gradient has length " + std::to_string(output_grad.size()) +
                              ", expected " + std::to_string(k));

    std::size_t widest = 0;
    for (std::size_t w : net.arch.layer_sizes) widest = std::max(widest, w);
    scratch.resize(2 * widest);
    double* delta = scratch.data();
    double* next = scratch.data() + widest;

    // Softmax Jacobian: dL/dz_c = h_c * (g_c - sum_j h_j g_j).
    double dot = 0.0;
    for (std::size_t c = 0; c < k; ++c) dot += probs[c] * output_grad[c];
    for (std::size_t c = 0; c < k; ++c) delta[c] = probs[c] * (output_grad[c] - dot);

    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const auto& in = trace.values[l];
        const auto& layer = net.layers[l];
        auto& g = grad[l];
        const std::size_t n_out = layer.bias.size();
        for (std::size_t i = 0; i < in.size(); ++i) {
            const double a = in[i];
            auto row = g.weights.row(i);
            for (std::size_t j = 0; j < n_out; ++j) row[j] = a * delta[j];
        }
        std::copy(delta, delta + n_out, g.bias.begin());
        if (l == 0) break;
        for (std::size_t i = 0; i < in.size(); ++i) {
            const auto w = layer.weights.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < n_out; ++j) s += w[j] * delta[j];
            next[i] = s * activation_slope(net.arch.activation, in[i]);
        }
        std::swap(delta, next);
    }
}

void add_in_place(Parameters& acc, const Parameters& g) {
    for (std::size_t l = 0; l < acc.size(); ++l) {
        auto dst = acc[l].weights.flat();
        auto src = g[l].weights.flat();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        for (std::size_t j = 0; j < acc[l].bias.size(); ++j) acc[l].bias[j] += g[l].bias[j];
    }
}

Parameters backward(const Network& net, const Matrix& inputs, const Matrix& output_grads) {
    if (inputs.rows() != output_grads.rows())
        throw ValidationError("backward: " + std::to_string(inputs.rows()) + " inputs but " +
                              std::to_string(output_grads.rows()) + " output gradients");
    if (output_grads.cols() != net.arch.classes())
        throw ValidationError("backward: output gradients must have one column per class");
    Parameters total = zeros_like(net);
    Parameters one = zeros_like(net);
    std::vector<double> scratch;
    Trace trace;
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        forward_trace(net, inputs.row(i), trace);
        sample_gradient(net, trace, output_grads.row(i), one, scratch);
        add_in_place(total, one);
    }
    return total;
}

void sgd_step(Network& net, const Parameters& grads, double lr, int epoch) {
    if (!(lr > 0.0)) throw ValidationError("sgd_step: learning rate must be positive");
    if (grads.size() != net.layers.size()) throw ValidationError("sgd_step: gradient layer count mismatch");
    for (std::size_t l = 0; l < grads.size(); ++l) {
        require_same_shape(grads[l].weights, net.layers[l].weights, "sgd_step");
        if (grads[l].bias.size() != net.layers[l].bias.size())
            throw ValidationError("sgd_step: bias gradient shape mismatch");
        for (double g : grads[l].weights.flat())
            if (!std::isfinite(g)) throw DivergenceError("non-finite gradient", epoch);
        for (double g : grads[l].bias)
            if (!std::isfinite(g)) throw DivergenceError("non-finite gradient", epoch);
    }
    for (std::size_t l = 0; l < grads.size(); ++l) {
        auto w = net.layers[l].weights.flat();
        auto gw = grads[l].weights.flat();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
        auto& b = net.layers[l].bias;
        for (std::size_t j = 0; j < b.size(); ++j) b[j] -= lr * grads[l].bias[j];
    }
}

// ---------------------------------------------------------------------------

std::string to_string(ScheduleKind k) { return k == ScheduleKind::step ? "step" : "cosine_cyclic"; }

ScheduleKind parse_schedule(const std::string& name) {
    if (name == "step") return ScheduleKind::step;
    if (name == "cosine_cyclic" || name == "cosine") return ScheduleKind::cosine_cyclic;
    throw ValidationError("unknown schedule '" + name + "' (expected step or cosine_cyclic)");
}

void LrSchedule::validate() const {
    if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw ValidationError("schedule: lr0 must be positive");
    if (total_epochs < 1) throw ValidationError("schedule: total_epochs must be positive");
    if (cycles < 1) throw ValidationError("schedule: cycles must be positive");
}

int LrSchedule::cycle_length() const { return (total_epochs + cycles - 1) / cycles; }

double lr_at(const LrSchedule& s, int epoch) {
    s.validate();
    if (epoch < 0 || epoch >= s.total_epochs)
        throw ValidationError("lr_at: epoch " + std::to_string(epoch) + " outside [0, " +
                              std::to_string(s.total_epochs) + ")");
    if (s.kind == ScheduleKind::step) {
        // Drops by 10x at 50% and 75% of training; integer comparisons avoid rounding at the boundary.
        if (2 * epoch < s.total_epochs) return s.lr0;
        if (4 * epoch < 3 * s.total_epochs) return s.lr0 / 10.0;
        return s.lr0 / 100.0;
    }
    const int len = s.cycle_length();
    const double phase = static_cast<double>(epoch % len) / static_cast<double>(len);
    return s.lr0 / 2.0 * (std::cos(std::numbers::pi * phase) + 1.0);
}

// ---------------------------------------------------------------------------

WeightedCrossEntropy::WeightedCrossEntropy(std::vector<double> weights) : weights_(std::move(weights)) {
    for (double w : weights_)
        if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("sample weights must be finite and nonnegative");
}

double WeightedCrossEntropy::evaluate(std::size_t index, std::span<const double> probs, int label,
                                      std::span<double> grad) const {
    if (index >= weights_.size()) throw ValidationError("sample index out of range for weight vector");
    const double w = weights_[index];
    const double p = std::max(probs[static_cast<std::size_t>(label)], kProbFloor);
    std::fill(grad.begin(), grad.end(), 0.0);
    grad[static_cast<std::size_t>(label)] = -w / p;
    return -w * std::log(p);
}

std::vector<double> uniform_weights(std::size_t n) {
    if (n == 0) throw ValidationError("uniform_weights: empty");
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

TrainLog train_epochs(Network& net, const data::Dataset& ds, const OutputLoss& loss, const TrainOptions& opt,
                      const EpochCallback& on_epoch) {
    TrainLog log;
    if (ds.size() == 0) throw ValidationError("train_epochs: empty dataset");
    if (ds.dims() != net.arch.inputs())
        throw ValidationError("train_epochs: dataset has " + std::to_string(ds.dims()) +
                              " features, network expects " + std::to_string(net.arch.inputs()));
    if (ds.k != net.arch.classes())
        throw ValidationError("train_epochs: dataset has " + std::to_string(ds.k) + " classes, network outputs " +
                              std::to_string(net.arch.classes()));
    if (opt.batch_size == 0) throw ValidationError("train_epochs: batch_size must be positive");
    if (opt.epochs <= 0) return log;
    opt.schedule.validate();

    const std::size_t n = ds.size();
    const std::size_t k = ds.k;
    std::vector<std::size_t> order(n);
    std::vector<nn::Trace> traces;
    kernels::GradientWorkspace ws;
    Parameters grad = zeros_like(net);
    Matrix out_grads;

    for (int e = 0; e < opt.epochs; ++e) {
        const int epoch = opt.first_epoch + e;
        const double lr = lr_at(opt.schedule, epoch);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(epoch)));
        rng.shuffle(std::span<std::size_t>(order));

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += opt.batch_size) {
            const std::size_t b = std::min(opt.batch_size, n - start);
            const std::span<const std::size_t> rows(order.data() + start, b);
            kernels::trace_rows(net, ds.features, rows, traces, opt.exec);

            if (out_grads.rows() != b) out_grads = Matrix(b, k);
            const double scale = static_cast<double>(n) / static_cast<double>(b);
            for (std::size_t s = 0; s < b; ++s) {
                const std::size_t idx = rows[s];
                auto g = out_grads.row(s);
                const double l = loss.evaluate(idx, traces[s].values.back(), ds.labels[idx], g);
                if (!std::isfinite(l)) throw DivergenceError("non-finite loss", epoch);
                epoch_loss += l;
                for (double& x : g) x *= scale;
            }
            kernels::gradient(net, std::span<const nn::Trace>(traces.data(), b), out_grads, ws, grad, opt.exec);
            sgd_step(net, grad, lr, epoch);
        }
        log.epoch_losses.push_back(epoch_loss);
        if (on_epoch) on_epoch(e, net, epoch_loss);
    }
    return log;
}

Matrix predict(const Network& net, const Matrix& features, Exec exec) {
    std::vector<std::size_t> rows(features.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Matrix out(features.rows(), net.arch.classes());
    kernels::forward_rows(net, features, rows, out, exec);
    return out;
}

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

double accuracy(const Matrix& probs, std::span<const int> labels) {
    if (probs.rows() != labels.size()) throw ValidationError("accuracy: row/label count mismatch");
    if (labels.empty()) throw ValidationError("accuracy: no samples");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (argmax(probs.row(i)) == static_cast<std::size_t>(labels[i])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace edde::nn
