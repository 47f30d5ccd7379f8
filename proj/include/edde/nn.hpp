#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "edde/matrix.hpp"

namespace edde::data {
struct Dataset;
}

namespace edde::nn {

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation parse_activation(const std::string& name);

/// Layer widths from input to output; hidden layers use `activation`, the
/// output layer is always softmax.
struct Architecture {
    std::vector<std::size_t> layer_sizes;
    Activation activation = Activation::relu;

    void validate() const;
    std::size_t inputs() const { return layer_sizes.front(); }
    std::size_t classes() const { return layer_sizes.back(); }
    std::size_t weight_layers() const { return layer_sizes.size() - 1; }

    bool operator==(const Architecture&) const = default;
};

/// weights is fan_in x fan_out: z_j = sum_i a_i * weights(i, j) + bias_j.
struct DenseLayer {
    Matrix weights;
    std::vector<double> bias;

    bool operator==(const DenseLayer&) const = default;
};

using Parameters = std::vector<DenseLayer>;

struct Network {
    Architecture arch;
    Parameters layers;
    std::uint64_t seed = 0;

    std::size_t parameter_count() const;
};

/// Glorot-uniform weights, zero biases. Layer l draws from its own stream
/// derive_seed(seed, l), so a layer's initial values depend only on
/// (seed, l, shape).
Network init_network(const Architecture& arch, std::uint64_t seed);

/// All-zero parameter set shaped like `net`.
Parameters zeros_like(const Network& net);

/// Softmax output for a single input.
std::vector<double> forward(const Network& net, std::span<const double> x);

/// Post-activation values of every layer for one sample: values[0] is the
/// input, values.back() the softmax output.
struct Trace {
    std::vector<std::vector<double>> values;
};

void forward_trace(const Network& net, std::span<const double> x, Trace& trace);

/// Gradient of one sample, given dL/d(softmax output). Overwrites `grad`.
/// `scratch` avoids per-call allocation; any contents are ignored.
void sample_gradient(const Network& net, const Trace& trace, std::span<const double> output_grad,
                     Parameters& grad, std::vector<double>& scratch);

/// Sum of per-sample gradients over the rows of `inputs`, added in row order.
/// output_grads(i, c) = dL_i / dh_c(x_i); the softmax Jacobian is applied here.
Parameters backward(const Network& net, const Matrix& inputs, const Matrix& output_grads);

/// params -= lr * grads. Throws DivergenceError (carrying `epoch`) on a
/// non-finite gradient; the network is left untouched in that case.
void sgd_step(Network& net, const Parameters& grads, double lr, int epoch = -1);

void add_in_place(Parameters& acc, const Parameters& g);

// ---------------------------------------------------------------------------
// Learning-rate schedules

enum class ScheduleKind { step, cosine_cyclic };

std::string to_string(ScheduleKind k);
ScheduleKind parse_schedule(const std::string& name);

struct LrSchedule {
    ScheduleKind kind = ScheduleKind::step;
    double lr0 = 0.1;
    int total_epochs = 1;
    int cycles = 1;

    void validate() const;
    /// Epochs per cosine cycle, ceil(total_epochs / cycles).
    int cycle_length() const;
};

double lr_at(const LrSchedule& schedule, int epoch);

// ---------------------------------------------------------------------------
// Training

/// Loss plugged in at the softmax output. `index` is the sample's row in the
/// training dataset, which lets the loss look up per-sample weights or targets.
class OutputLoss {
public:
    virtual ~OutputLoss() = default;
    /// Returns the sample loss and writes dL/dh into `grad` (length k).
    virtual double evaluate(std::size_t index, std::span<const double> probs, int label,
                            std::span<double> grad) const = 0;
};

/// w_i * -ln h_y, with h_y floored at 1e-12.
class WeightedCrossEntropy final : public OutputLoss {
public:
    explicit WeightedCrossEntropy(std::vector<double> weights);

    double evaluate(std::size_t index, std::span<const double> probs, int label,
                    std::span<double> grad) const override;

private:
    std::vector<double> weights_;
};

std::vector<double> uniform_weights(std::size_t n);

enum class Exec { automatic, serial, parallel };

struct TrainOptions {
    LrSchedule schedule;
    int epochs = 1;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    /// Epoch offset into the schedule, used when a run is split into pieces.
    int first_epoch = 0;
    Exec exec = Exec::automatic;
};

/// Called after every epoch with the epoch index (relative to first_epoch 0),
/// the updated network and the epoch's training loss.
using EpochCallback = std::function<void(int epoch, const Network& net, double loss)>;

struct TrainLog {
    std::vector<double> epoch_losses;
};

/// Mini-batch SGD. Sample weights are expected to sum to one over the
/// dataset, so each step uses (N / batch) * sum of per-sample gradients and
/// the reported epoch loss is the sum of per-sample losses; with uniform
/// weights this is the usual batch-mean cross-entropy. Shuffling for epoch e
/// uses derive_seed(seed, e).
TrainLog train_epochs(Network& net, const data::Dataset& dataset, const OutputLoss& loss,
                      const TrainOptions& options, const EpochCallback& on_epoch = {});

/// Row-wise softmax outputs over a whole dataset.
Matrix predict(const Network& net, const Matrix& features, Exec exec = Exec::automatic);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> v);

double accuracy(const Matrix& probs, std::span<const int> labels);

}  // namespace edde::nn
