#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "edde/matrix.hpp"

namespace edde::metrics {

/// One model's softmax outputs on a dataset (N x k).
struct PredictionMatrix {
    Matrix soft_targets;
    std::string model_id;

    /// Rows must be nonnegative and sum to one within 1e-6.
    void validate() const;
};

struct DiversityReport {
    std::vector<std::string> model_ids;
    Matrix pairwise;  // T x T similarity
    /// Mean pairwise diversity; meaningless (and reported as n/a) when T == 1.
    double div_h = 0.0;
    double average_accuracy = 0.0;
    double ensemble_accuracy = 0.0;
    double increased_accuracy = 0.0;
    std::vector<double> model_accuracies;
    std::vector<double> alphas;

    std::size_t size() const { return model_ids.size(); }
};

/// (sqrt(2)/2) * mean over samples of ||p_i - q_i||_2, in [0, 1].
double pairwise_div(const PredictionMatrix& p, const PredictionMatrix& q);
double pairwise_sim(const PredictionMatrix& p, const PredictionMatrix& q);

/// Mean pairwise_div over all unordered pairs; needs at least two models.
double ensemble_div(std::span<const PredictionMatrix> preds);

/// Entry (j, k) = pairwise_sim(j, k); unit diagonal, symmetric.
Matrix similarity_matrix(std::span<const PredictionMatrix> preds);

/// Per-sample ambiguity 1/2 * sum_t alpha_t * (H - h_t) on the +1/-1
/// correct/incorrect encoding.
std::vector<double> amb_nc(std::span<const int> ensemble_correct, std::span<const std::vector<int>> model_correct,
                           std::span<const double> alphas);

/// Per-model accuracy, alpha-weighted ensemble accuracy and their gap, plus
/// the similarity matrix and div_h.
DiversityReport accuracy_summary(std::span<const PredictionMatrix> preds, std::span<const double> alphas,
                                 std::span<const int> labels);

struct BiasVariance {
    double bias = 0.0;
    double variance = 0.0;
};

/// bias: mean per-sample distance to the one-hot label over models and
/// samples; variance: ensemble_div.
BiasVariance bias_variance_report(std::span<const PredictionMatrix> preds, std::span<const int> labels);

// Serialization ------------------------------------------------------------

std::string to_json(const DiversityReport& r);
/// T x T similarity matrix with a header row of model ids.
void write_similarity_csv(const DiversityReport& r, const std::string& path);
/// Long format (model_a, model_b, similarity) for heatmap plotting.
void write_similarity_long_csv(const DiversityReport& r, const std::string& path);

}  // namespace edde::metrics
