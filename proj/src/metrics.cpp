#include "edde/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "edde/error.hpp"
#include "edde/kernels.hpp"
#include "edde/nn.hpp"

namespace edde::metrics {

namespace {

void check_conformable(std::span<const PredictionMatrix> preds, const char* what) {
    for (const auto& p : preds) require_same_shape(p.soft_targets, preds.front().soft_targets, what);
}

}  // namespace

void PredictionMatrix::validate() const {
    for (std::size_t i = 0; i < soft_targets.rows(); ++i) {
        double s = 0.0;
        for (double v : soft_targets.row(i)) {
            if (!(v >= 0.0)) throw ValidationError("prediction matrix '" + model_id + "': negative or NaN entry");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-6)
            throw ValidationError("prediction matrix '" + model_id + "': row " + std::to_string(i) +
                                  " does not sum to 1");
    }
}

double pairwise_div(const PredictionMatrix& p, const PredictionMatrix& q) {
    require_same_shape(p.soft_targets, q.soft_targets, "pairwise_div");
    // Divide by sqrt(2) rather than multiply by sqrt(2)/2 so the maximal case is exactly 1.
    return kernels::mean_row_distance(p.soft_targets, q.soft_targets) / std::numbers::sqrt2;
}

double pairwise_sim(const PredictionMatrix& p, const PredictionMatrix& q) { return 1.0 - pairwise_div(p, q); }

double ensemble_div(std::span<const PredictionMatrix> preds) {
    const std::size_t t = preds.size();
    if (t < 2) throw ValidationError("ensemble_div: needs at least two models");
    check_conformable(preds, "ensemble_div");
    double sum = 0.0;
    for (std::size_t j = 0; j < t; ++j)
        for (std::size_t k = j + 1; k < t; ++k) sum += pairwise_div(preds[j], preds[k]);
    return 2.0 * sum / (static_cast<double>(t) * static_cast<double>(t - 1));
}

Matrix similarity_matrix(std::span<const PredictionMatrix> preds) {
    const std::size_t t = preds.size();
    if (t == 0) throw ValidationError("similarity_matrix: no models");
    check_conformable(preds, "similarity_matrix");
    Matrix m(t, t, 1.0);
    for (std::size_t j = 0; j < t; ++j)
        for (std::size_t k = j + 1; k < t; ++k) m(j, k) = m(k, j) = pairwise_sim(preds[j], preds[k]);
    return m;
}

std::vector<double> amb_nc(std::span<const int> ensemble_correct, std::span<const std::vector<int>> model_correct,
                           std::span<const double> alphas) {
    if (model_correct.size() != alphas.size()) throw ValidationError("amb_nc: one alpha per model required");
    const std::size_t n = ensemble_correct.size();
    for (const auto& m : model_correct)
        if (m.size() != n) throw ValidationError("amb_nc: correctness vectors differ in length");
    std::vector<double> amb(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t t = 0; t < alphas.size(); ++t)
            s += alphas[t] * static_cast<double>(ensemble_correct[i] - model_correct[t][i]);
        amb[i] = 0.5 * s;
    }
    return amb;
}

DiversityReport accuracy_summary(std::span<const PredictionMatrix> preds, std::span<const double> alphas,
                                 std::span<const int> labels) {
    if (preds.empty()) throw ValidationError("accuracy_summary: no models");
    if (preds.size() != alphas.size()) throw ValidationError("accuracy_summary: one alpha per model required");
    check_conformable(preds, "accuracy_summary");
    const std::size_t k = preds.front().soft_targets.cols();
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= k) throw ValidationError("accuracy_summary: label out of range");

    DiversityReport r;
    std::vector<Matrix> mats;
    mats.reserve(preds.size());
    for (const auto& p : preds) {
        r.model_ids.push_back(p.model_id);
        r.model_accuracies.push_back(nn::accuracy(p.soft_targets, labels));
        mats.push_back(p.soft_targets);
    }
    r.alphas.assign(alphas.begin(), alphas.end());
    double sum = 0.0;
    for (double a : r.model_accuracies) sum += a;
    r.average_accuracy = sum / static_cast<double>(preds.size());
    r.ensemble_accuracy = nn::accuracy(kernels::combine(mats, alphas), labels);
    r.increased_accuracy = r.ensemble_accuracy - r.average_accuracy;
    r.pairwise = similarity_matrix(preds);
    r.div_h = preds.size() >= 2 ? ensemble_div(preds) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

BiasVariance bias_variance_report(std::span<const PredictionMatrix> preds, std::span<const int> labels) {
    if (preds.size() < 2) throw ValidationError("bias_variance_report: needs at least two models");
    check_conformable(preds, "bias_variance_report");
    const Matrix& first = preds.front().soft_targets;
    if (labels.size() != first.rows()) throw ValidationError("bias_variance_report: label count mismatch");
    if (labels.empty()) throw ValidationError("bias_variance_report: no samples");

    double total = 0.0;
    for (const auto& p : preds) {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const auto row = p.soft_targets.row(i);
            double s = 0.0;
            for (std::size_t c = 0; c < row.size(); ++c) {
                const double d = row[c] - (static_cast<int>(c) == labels[i] ? 1.0 : 0.0);
                s += d * d;
            }
            total += std::sqrt(s) / std::numbers::sqrt2;
        }
    }
    BiasVariance bv;
    bv.bias = total / (static_cast<double>(preds.size()) * static_cast<double>(labels.size()));
    bv.variance = ensemble_div(preds);
    return bv;
}

std::string to_json(const DiversityReport& r) {
    nlohmann::ordered_json j;
    j["models"] = r.model_ids;
    j["alphas"] = r.alphas;
    j["model_accuracies"] = r.model_accuracies;
    j["average_accuracy"] = r.average_accuracy;
    j["ensemble_accuracy"] = r.ensemble_accuracy;
    j["increased_accuracy"] = r.increased_accuracy;
    if (std::isnan(r.div_h))
        j["div_h"] = "n/a";
    else
        j["div_h"] = r.div_h;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t a = 0; a < r.pairwise.rows(); ++a) {
        const auto row = r.pairwise.row(a);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["pairwise_similarity"] = rows;
    return j.dump(2);
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out.precision(17);
    return out;
}

}  // namespace

void write_similarity_csv(const DiversityReport& r, const std::string& path) {
    auto out = open_out(path);
    out << "model";
    for (const auto& id : r.model_ids) out << ',' << id;
    out << '\n';
    for (std::size_t a = 0; a < r.size(); ++a) {
        out << r.model_ids[a];
        for (std::size_t b = 0; b < r.size(); ++b) out << ',' << r.pairwise(a, b);
        out << '\n';
    }
}

void write_similarity_long_csv(const DiversityReport& r, const std::string& path) {
    auto out = open_out(path);
    out << "model_a,model_b,similarity\n";
    for (std::size_t a = 0; a < r.size(); ++a)
        for (std::size_t b = 0; b < r.size(); ++b)
            out << r.model_ids[a] << ',' << r.model_ids[b] << ',' << r.pairwise(a, b) << '\n';
}

}  // namespace edde::metrics
