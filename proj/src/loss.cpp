#include "edde/loss.hpp"

#include <algorithm>
#include <cmath>

#include "edde/error.hpp"

namespace edde::loss {

namespace {

void check_lengths(std::span<const double> h, std::span<const double> hp, std::span<const double> y) {
    if (h.size() != hp.size() || h.size() != y.size())
        throw ValidationError("edde loss: h, H_prev and y must have the same length (" + std::to_string(h.size()) +
                              ", " + std::to_string(hp.size()) + ", " + std::to_string(y.size()) + ")");
    if (h.empty()) throw ValidationError("edde loss: empty probability vector");
}

double distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        const double d = a[c] - b[c];
        s += d * d;
    }
    return std::sqrt(s);
}

// Shared by the scalar and batched entry points so they agree bit for bit.
double evaluate_into(std::span<const double> h, std::span<const double> hp, std::span<const double> y, double w,
                     double gamma, double norm_floor, std::span<double> grad) {
    const double norm = distance(h, hp);
    double ce = 0.0;
    for (std::size_t c = 0; c < h.size(); ++c)
        if (y[c] != 0.0) ce -= y[c] * std::log(std::max(h[c], kProbFloor));

    if (!grad.empty()) {
        const bool penalised = norm >= norm_floor;
        for (std::size_t c = 0; c < h.size(); ++c) {
            double g = -y[c] / std::max(h[c], kProbFloor);
            if (penalised) g -= gamma * (h[c] - hp[c]) / norm;
            grad[c] = w * g;
        }
    }
    return w * (ce - gamma * norm);
}

}  // namespace

double edde_loss(std::span<const double> h, std::span<const double> hp, std::span<const double> y, double w,
                 double gamma) {
    check_lengths(h, hp, y);
    return evaluate_into(h, hp, y, w, gamma, kNormFloor, {});
}

std::vector<double> edde_loss_grad(std::span<const double> h, std::span<const double> hp, std::span<const double> y,
                                   double w, double gamma, double norm_floor) {
    check_lengths(h, hp, y);
    std::vector<double> g(h.size());
    evaluate_into(h, hp, y, w, gamma, norm_floor, g);
    return g;
}

void EddeLossSpec::validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ValidationError("edde loss: gamma must be nonnegative");
    if (!(norm_floor > 0.0)) throw ValidationError("edde loss: norm_floor must be positive");
    if (ensemble_targets.rows() != sample_weights.size())
        throw ValidationError("edde loss: " + std::to_string(ensemble_targets.rows()) + " ensemble targets but " +
                              std::to_string(sample_weights.size()) + " sample weights");
    for (std::size_t i = 0; i < ensemble_targets.rows(); ++i) {
        double s = 0.0;
        for (double v : ensemble_targets.row(i)) {
            if (!(v >= 0.0)) throw ValidationError("edde loss: negative ensemble target");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-6)
            throw ValidationError("edde loss: ensemble target row " + std::to_string(i) + " is not a distribution");
    }
    double total = 0.0;
    for (double w : sample_weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("edde loss: sample weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("edde loss: sample weights must sum to 1");
}

BatchLoss batch_loss_and_grads(const EddeLossSpec& spec, const Matrix& h_batch, std::span<const int> labels,
                               std::span<const std::size_t> indices) {
    const std::size_t b = h_batch.rows();
    const std::size_t k = h_batch.cols();
    if (labels.size() != b || indices.size() != b)
        throw ValidationError("batch_loss_and_grads: batch, label and index counts differ");
    if (k != spec.ensemble_targets.cols()) throw ValidationError("batch_loss_and_grads: class count mismatch");
    if (b == 0) throw ValidationError("batch_loss_and_grads: empty batch");

    BatchLoss out{0.0, Matrix(b, k)};
    std::vector<double> y(k);
    double sum = 0.0;
    for (std::size_t s = 0; s < b; ++s) {
        const std::size_t idx = indices[s];
        if (idx >= spec.sample_weights.size())
            throw ValidationError("batch_loss_and_grads: sample index " + std::to_string(idx) + " out of range");
        if (labels[s] < 0 || static_cast<std::size_t>(labels[s]) >= k)
            throw ValidationError("batch_loss_and_grads: label out of range");
        std::fill(y.begin(), y.end(), 0.0);
        y[static_cast<std::size_t>(labels[s])] = 1.0;
        sum += evaluate_into(h_batch.row(s), spec.ensemble_targets.row(idx), y, spec.sample_weights[idx], spec.gamma,
                             spec.norm_floor, out.grads.row(s));
    }
    out.mean_loss = sum / static_cast<double>(b);
    return out;
}

EddeLoss::EddeLoss(EddeLossSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

double EddeLoss::evaluate(std::size_t index, std::span<const double> probs, int label, std::span<double> grad) const {
    if (index >= spec_.sample_weights.size()) throw ValidationError("edde loss: sample index out of range");
    const std::size_t k = probs.size();
    if (k != spec_.ensemble_targets.cols()) throw ValidationError("edde loss: class count mismatch");
    if (label < 0 || static_cast<std::size_t>(label) >= k) throw ValidationError("edde loss: label out of range");
    std::vector<double> y(k, 0.0);
    y[static_cast<std::size_t>(label)] = 1.0;
    return evaluate_into(probs, spec_.ensemble_targets.row(index), y, spec_.sample_weights[index], spec_.gamma,
                         spec_.norm_floor, grad);
}

}  // namespace edde::loss
