#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "edde/boosting.hpp"

namespace edde::baselines {

enum class Method { single, bagging, adaboost_m1, adaboost_nc, snapshot, bans };

std::string to_string(Method m);
Method parse_method(const std::string& name);

struct BaselineConfig {
    Method method = Method::single;
    int T = 5;
    int epochs_per_model = 10;
    /// Step schedule for every method except snapshot, which always runs
    /// cosine_cyclic with T cycles from the same lr0.
    nn::LrSchedule schedule;
    std::size_t batch_size = 64;
    double lambda_nc = 2.0;
    /// Weight of the hard-label term for BANs generations >= 2.
    double bans_label_mix = 0.0;
    std::uint64_t seed = 1;
    nn::Architecture arch;
    nn::Exec exec = nn::Exec::automatic;

    void validate() const;
};

/// Rounds carry alpha, losses and (for the AdaBoost variants) the sample
/// weights in force after the round.
using Result = boost::TrainResult;

Result train_single(const data::Dataset& ds, const BaselineConfig& cfg);
Result train_bagging(const data::Dataset& ds, const BaselineConfig& cfg);
Result train_adaboost_m1(const data::Dataset& ds, const BaselineConfig& cfg);
Result train_adaboost_nc(const data::Dataset& ds, const BaselineConfig& cfg);
Result train_snapshot(const data::Dataset& ds, const BaselineConfig& cfg);
Result train_bans(const data::Dataset& ds, const BaselineConfig& cfg);

/// Dispatches on cfg.method.
Result train(const data::Dataset& ds, const BaselineConfig& cfg);

/// n draws with replacement from 0..n-1.
std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed);

/// 1/2 ln((1 - eps) / eps) with eps clamped to [1e-10, 1 - 1e-10].
double m1_alpha(double eps);

/// Multiplicative AdaBoost step: w_i * exp(+alpha) if wrong, exp(-alpha) if
/// right, times (1 + |amb_i|)^lambda when `amb` is given; then normalized.
std::vector<double> adaboost_reweight(std::span<const double> w, std::span<const int> wrong, double alpha,
                                      std::span<const double> amb = {}, double lambda = 0.0);

/// Distillation loss against frozen per-sample soft targets:
/// w_i * ( -(1 - mix) sum_c q_c ln h_c - mix ln h_y ).
class SoftTargetLoss final : public nn::OutputLoss {
public:
    SoftTargetLoss(Matrix targets, std::vector<double> weights, double label_mix = 0.0);

    double evaluate(std::size_t index, std::span<const double> probs, int label,
                    std::span<double> grad) const override;

private:
    Matrix targets_;
    std::vector<double> weights_;
    double mix_;
};

}  // namespace edde::baselines
