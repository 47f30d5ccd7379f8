#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edde/data.hpp"
#include "edde/matrix.hpp"
#include "edde/metrics.hpp"
#include "edde/nn.hpp"
#include "edde/transfer.hpp"

namespace edde::boost {

struct Member {
    nn::Network net;
    double alpha = 1.0;
    /// 1-based round (or generation, cycle, bootstrap index) that produced it.
    int round = 1;
};

/// Weighted committee of networks sharing one architecture. Also carries
/// what is needed to evaluate it on raw data later (label names and the
/// training normalization statistics).
struct Ensemble {
    std::string method = "edde";
    std::vector<Member> members;
    double gamma = 0.0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::vector<int> skipped_rounds;
    std::vector<std::string> notes;
    std::vector<std::string> label_names;
    std::vector<double> feature_means;
    std::vector<double> feature_stds;

    const nn::Architecture& arch() const { return members.front().net.arch; }
    std::vector<double> alphas() const;
};

struct SampleWeights {
    std::vector<double> w;
    int round = 1;

    static SampleWeights uniform(std::size_t n);
};

/// 1 - ||h - H||_2 / sqrt(2).
double sample_sim(std::span<const double> h, std::span<const double> ensemble);
/// ||h - y||_2 / sqrt(2) with y one-hot.
double sample_bias(std::span<const double> h, std::span<const double> y);

/// Reweights from the round-1 weights: misclassified samples get
/// w1_i * exp(Sim_i + Bias_i), correct ones keep w1_i; then normalizes.
SampleWeights update_weights(const SampleWeights& w1, const Matrix& preds, std::span<const int> labels,
                             const Matrix& ensemble_preds);

/// 1/2 ln( sum_correct Sim_i W_i / sum_wrong Sim_i W_i ), both sums floored at 1e-10.
double model_alpha(const Matrix& preds, std::span<const int> labels, std::span<const double> sims,
                   const SampleWeights& weights);

/// #correct / max(#wrong, 1e-10).
double first_alpha(const Matrix& preds, std::span<const int> labels);

/// sum_t alpha_t h_t(x) / sum_t alpha_t.
std::vector<double> ensemble_predict(const Ensemble& ens, std::span<const double> x);
Matrix ensemble_predict(const Ensemble& ens, const Matrix& inputs, nn::Exec exec = nn::Exec::automatic);

/// Each member's softmax outputs on `inputs`, ids "h1", "h2", ...
std::vector<metrics::PredictionMatrix> member_predictions(const Ensemble& ens, const Matrix& inputs,
                                                          nn::Exec exec = nn::Exec::automatic);

struct EddeConfig {
    int T = 5;
    double gamma = 0.1;
    /// nullopt runs the beta search with `search` and fixes the result for all rounds.
    std::optional<double> beta = 0.5;
    int epochs_first = 20;
    int epochs_rest = 10;
    nn::LrSchedule schedule;  // total_epochs is set per member
    std::size_t batch_size = 64;
    std::uint64_t seed = 1;
    nn::Architecture arch;
    transfer::BetaSearchConfig search;
    /// With an automatic beta, keep the search's teacher as the first member
    /// instead of training a new one on the full set.
    bool reuse_search_teacher = true;
    nn::Exec exec = nn::Exec::automatic;

    void validate() const;
};

/// Diagnostics of one round; weights/sims/biases are per training sample
/// (round 1 has weights only).
struct RoundRecord {
    int round = 1;
    double alpha = 0.0;
    bool skipped = false;
    std::vector<double> epoch_losses;
    double seconds = 0.0;
    std::vector<double> weights;
    std::vector<double> sims;
    std::vector<double> biases;
};

struct TrainResult {
    Ensemble ensemble;
    std::vector<RoundRecord> rounds;
    std::optional<transfer::BetaSearchResult> search;
};

/// The full sequential pipeline. Rounds whose alpha is not positive are
/// recorded as skipped and kept out of the vote; they still advance the
/// sample weights and serve as the next round's transfer source.
TrainResult train_edde(const data::Dataset& ds, const EddeConfig& cfg);

}  // namespace edde::boost
