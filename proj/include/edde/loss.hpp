#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "edde/matrix.hpp"
#include "edde/nn.hpp"

namespace edde::loss {

inline constexpr double kNormFloor = 1e-12;
/// h_c is clamped here inside ln and division.
inline constexpr double kProbFloor = 1e-12;

/// w * ( -sum_c y_c ln h_c  -  gamma * ||h - H_prev||_2 ). Negative values are
/// legitimate for large gamma.
double edde_loss(std::span<const double> h, std::span<const double> h_prev_ensemble, std::span<const double> y,
                 double w, double gamma);

/// dL/dh_c = w * ( -y_c / h_c  -  gamma * (h_c - H_c) / ||h - H||_2 ). The
/// diversity part is taken as zero when ||h - H||_2 < norm_floor.
std::vector<double> edde_loss_grad(std::span<const double> h, std::span<const double> h_prev_ensemble,
                                   std::span<const double> y, double w, double gamma,
                                   double norm_floor = kNormFloor);

/// Everything the loss needs for one boosting round: the previous ensemble's
/// soft targets and the sample weights, both indexed by training row.
struct EddeLossSpec {
    double gamma = 0.0;
    Matrix ensemble_targets;            // N x k
    std::vector<double> sample_weights;  // N, sums to 1
    double norm_floor = kNormFloor;

    void validate() const;
};

struct BatchLoss {
    double mean_loss = 0.0;
    Matrix grads;  // one row per batch entry
};

/// Row s of h_batch is the network output for training sample indices[s]
/// with class labels[s].
BatchLoss batch_loss_and_grads(const EddeLossSpec& spec, const Matrix& h_batch, std::span<const int> labels,
                               std::span<const std::size_t> indices);

/// Adapter for nn::train_epochs.
class EddeLoss final : public nn::OutputLoss {
public:
    explicit EddeLoss(EddeLossSpec spec);

    double evaluate(std::size_t index, std::span<const double> probs, int label,
                    std::span<double> grad) const override;

    const EddeLossSpec& spec() const { return spec_; }

private:
    EddeLossSpec spec_;
};

}  // namespace edde::loss
