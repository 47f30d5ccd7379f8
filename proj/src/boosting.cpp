#include "edde/boosting.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <numbers>

#include "edde/error.hpp"
#include "edde/kernels.hpp"
#include "edde/loss.hpp"
#include "edde/seeds.hpp"

namespace edde::boost {

namespace {

constexpr double kMassFloor = 1e-10;

double distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ValidationError("probability vectors differ in length (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    double s = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        const double d = a[c] - b[c];
        s += d * d;
    }
    return std::sqrt(s);
}

bool correct(const Matrix& preds, std::span<const int> labels, std::size_t i) {
    return nn::argmax(preds.row(i)) == static_cast<std::size_t>(labels[i]);
}

void check_preds(const Matrix& preds, std::span<const int> labels, const char* what) {
    if (preds.rows() != labels.size())
        throw ValidationError(std::string(what) + ": " + std::to_string(preds.rows()) + " predictions for " +
                              std::to_string(labels.size()) + " labels");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= preds.cols())
            throw ValidationError(std::string(what) + ": label out of range");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<double> Ensemble::alphas() const {
    std::vector<double> a;
    a.reserve(members.size());
    for (const auto& m : members) a.push_back(m.alpha);
    return a;
}

SampleWeights SampleWeights::uniform(std::size_t n) { return {nn::uniform_weights(n), 1}; }

double sample_sim(std::span<const double> h, std::span<const double> ensemble) {
    return 1.0 - distance(h, ensemble) / std::numbers::sqrt2;
}

double sample_bias(std::span<const double> h, std::span<const double> y) {
    return distance(h, y) / std::numbers::sqrt2;
}

SampleWeights update_weights(const SampleWeights& w1, const Matrix& preds, std::span<const int> labels,
                             const Matrix& ensemble_preds) {
    check_preds(preds, labels, "update_weights");
    require_same_shape(preds, ensemble_preds, "update_weights");
    if (w1.w.size() != labels.size()) throw ValidationError("update_weights: weight vector length mismatch");

    const std::size_t k = preds.cols();
    std::vector<double> u(w1.w.size());
    std::vector<double> y(k);
    double z = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (correct(preds, labels, i)) {
            u[i] = w1.w[i];
        } else {
            std::fill(y.begin(), y.end(), 0.0);
            y[static_cast<std::size_t>(labels[i])] = 1.0;
            const double e = sample_sim(preds.row(i), ensemble_preds.row(i)) + sample_bias(preds.row(i), y);
            u[i] = w1.w[i] * std::exp(e);
        }
        z += u[i];
    }
    if (!(z > 0.0)) throw std::logic_error("update_weights: all sample weight mass vanished");
    for (double& v : u) v /= z;
    return {std::move(u), w1.round + 1};
}

double model_alpha(const Matrix& preds, std::span<const int> labels, std::span<const double> sims,
                   const SampleWeights& weights) {
    check_preds(preds, labels, "model_alpha");
    if (sims.size() != labels.size() || weights.w.size() != labels.size())
        throw ValidationError("model_alpha: similarity/weight length mismatch");
    double right = 0.0;
    double wrong = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double m = sims[i] * weights.w[i];
        if (correct(preds, labels, i))
            right += m;
        else
            wrong += m;
    }
    return 0.5 * std::log(std::max(right, kMassFloor) / std::max(wrong, kMassFloor));
}

double first_alpha(const Matrix& preds, std::span<const int> labels) {
    check_preds(preds, labels, "first_alpha");
    if (labels.empty()) throw ValidationError("first_alpha: no samples");
    double right = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (correct(preds, labels, i)) right += 1.0;
    const double wrong = static_cast<double>(labels.size()) - right;
    return right / std::max(wrong, kMassFloor);
}

std::vector<double> ensemble_predict(const Ensemble& ens, std::span<const double> x) {
    if (ens.members.empty()) throw ValidationError("ensemble_predict: empty ensemble");
    Matrix row(1, x.size());
    std::copy(x.begin(), x.end(), row.row(0).begin());
    const Matrix out = ensemble_predict(ens, row, nn::Exec::serial);
    return {out.row(0).begin(), out.row(0).end()};
}

Matrix ensemble_predict(const Ensemble& ens, const Matrix& inputs, nn::Exec exec) {
    if (ens.members.empty()) throw ValidationError("ensemble_predict: empty ensemble");
    std::vector<Matrix> preds;
    preds.reserve(ens.members.size());
    for (const auto& m : ens.members) preds.push_back(nn::predict(m.net, inputs, exec));
    return kernels::combine(preds, ens.alphas(), exec);
}

std::vector<metrics::PredictionMatrix> member_predictions(const Ensemble& ens, const Matrix& inputs, nn::Exec exec) {
    std::vector<metrics::PredictionMatrix> out;
    out.reserve(ens.members.size());
    for (std::size_t t = 0; t < ens.members.size(); ++t)
        out.push_back({nn::predict(ens.members[t].net, inputs, exec), "h" + std::to_string(ens.members[t].round)});
    return out;
}

void EddeConfig::validate() const {
    if (T < 1) throw ValidationError("edde: T must be at least 1");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ValidationError("edde: gamma must be nonnegative");
    if (beta && !(*beta >= 0.0 && *beta <= 1.0)) throw ValidationError("edde: beta must lie in [0, 1]");
    if (epochs_first < 1 || epochs_rest < 1) throw ValidationError("edde: epoch counts must be positive");
    if (batch_size == 0) throw ValidationError("edde: batch_size must be positive");
    arch.validate();
    nn::LrSchedule s = schedule;
    s.total_epochs = 1;
    s.validate();
    if (!beta) search.validate();
}

TrainResult train_edde(const data::Dataset& ds, const EddeConfig& cfg) {
    cfg.validate();
    ds.validate();
    if (cfg.arch.inputs() != ds.dims() || cfg.arch.classes() != ds.k)
        throw ValidationError("edde: architecture does not match the dataset (" + std::to_string(ds.dims()) +
                              " features, " + std::to_string(ds.k) + " classes)");

    const std::size_t n = ds.size();
    const Matrix& x = ds.features;
    const std::span<const int> labels = ds.labels;
    auto options = [&](int epochs, int member) {
        nn::TrainOptions o;
        o.schedule = cfg.schedule;
        o.schedule.total_epochs = epochs;
        o.epochs = epochs;
        o.batch_size = cfg.batch_size;
        o.seed = member_shuffle_seed(cfg.seed, member);
        o.exec = cfg.exec;
        return o;
    };

    TrainResult res;
    Ensemble& ens = res.ensemble;
    ens.method = "edde";
    ens.gamma = cfg.gamma;
    ens.seed = cfg.seed;
    ens.label_names = ds.label_names;
    ens.feature_means = ds.feature_means;
    ens.feature_stds = ds.feature_stds;

    // Round 1: plain weighted cross-entropy under uniform weights.
    auto start = std::chrono::steady_clock::now();
    const SampleWeights w1 = SampleWeights::uniform(n);
    RoundRecord first;
    nn::Network prev;
    double beta = cfg.beta.value_or(0.0);
    if (!cfg.beta) {
        transfer::TrainSettings ts{cfg.schedule, cfg.batch_size, cfg.seed, cfg.exec};
        res.search = transfer::beta_search(ds, cfg.arch, cfg.search, ts);
        beta = res.search->beta;
    }
    try {
        if (!cfg.beta && cfg.reuse_search_teacher) {
            prev = res.search->teacher;
            first.epoch_losses = res.search->teacher_losses;
        } else {
            prev = nn::init_network(cfg.arch, member_init_seed(cfg.seed, 1));
            first.epoch_losses =
                nn::train_epochs(prev, ds, nn::WeightedCrossEntropy(w1.w), options(cfg.epochs_first, 1)).epoch_losses;
        }
    } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " in round 1", e.epoch(), 1);
    }
    ens.beta = beta;

    std::vector<Matrix> vote_preds{nn::predict(prev, x, cfg.exec)};
    std::vector<double> vote_alphas{first_alpha(vote_preds.back(), labels)};
    ens.members.push_back({prev, vote_alphas.back(), 1});
    Matrix ensemble_preds = kernels::combine(vote_preds, vote_alphas, cfg.exec);
    first.round = 1;
    first.alpha = vote_alphas.back();
    first.weights = w1.w;
    first.seconds = seconds_since(start);
    res.rounds.push_back(std::move(first));

    SampleWeights w_prev = w1;
    std::vector<double> y(ds.k);
    for (int t = 2; t <= cfg.T; ++t) {
        start = std::chrono::steady_clock::now();
        RoundRecord rec;
        rec.round = t;

        nn::Network student = transfer::transfer_init(prev, {beta, member_init_seed(cfg.seed, t)});
        const loss::EddeLoss round_loss({cfg.gamma, ensemble_preds, w_prev.w, loss::kNormFloor});
        try {
            rec.epoch_losses = nn::train_epochs(student, ds, round_loss, options(cfg.epochs_rest, t)).epoch_losses;
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " in round " + std::to_string(t), e.epoch(), t);
        }

        const Matrix preds = nn::predict(student, x, cfg.exec);
        rec.sims.resize(n);
        rec.biases.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::fill(y.begin(), y.end(), 0.0);
            y[static_cast<std::size_t>(labels[i])] = 1.0;
            rec.sims[i] = sample_sim(preds.row(i), ensemble_preds.row(i));
            rec.biases[i] = sample_bias(preds.row(i), y);
        }
        SampleWeights w_t = update_weights(w1, preds, labels, ensemble_preds);
        w_t.round = t;
        rec.alpha = model_alpha(preds, labels, rec.sims, w_t);
        rec.weights = w_t.w;

        if (rec.alpha > 0.0 && std::isfinite(rec.alpha)) {
            ens.members.push_back({student, rec.alpha, t});
            vote_preds.push_back(preds);
            vote_alphas.push_back(rec.alpha);
            ensemble_preds = kernels::combine(vote_preds, vote_alphas, cfg.exec);
        } else {
            rec.skipped = true;
            ens.skipped_rounds.push_back(t);
        }
        w_prev = std::move(w_t);
        prev = std::move(student);
        rec.seconds = seconds_since(start);
        res.rounds.push_back(std::move(rec));
    }

    if (cfg.T > 1 && ens.members.size() == 1) {
        ens.notes.push_back("all rounds after the first were skipped; the ensemble is the first model alone");
        std::cerr << "warning: edde: every round after the first had a non-positive alpha\n";
    }
    return res;
}

}  // namespace edde::boost
