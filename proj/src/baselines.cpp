#include "edde/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>

#include "edde/error.hpp"
#include "edde/kernels.hpp"
#include "edde/random.hpp"
#include "edde/seeds.hpp"

namespace edde::baselines {

namespace {

constexpr double kProbFloor = 1e-12;
constexpr double kEpsFloor = 1e-10;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

nn::TrainOptions options(const BaselineConfig& cfg, int epochs, int member) {
    nn::TrainOptions o;
    o.schedule = cfg.schedule;
    o.schedule.total_epochs = epochs;
    o.epochs = epochs;
    o.batch_size = cfg.batch_size;
    o.seed = member_shuffle_seed(cfg.seed, member);
    o.exec = cfg.exec;
    return o;
}

boost::Ensemble empty_ensemble(const data::Dataset& ds, const BaselineConfig& cfg) {
    boost::Ensemble e;
    e.method = to_string(cfg.method);
    e.seed = cfg.seed;
    e.label_names = ds.label_names;
    e.feature_means = ds.feature_means;
    e.feature_stds = ds.feature_stds;
    return e;
}

void check(const data::Dataset& ds, const BaselineConfig& cfg) {
    cfg.validate();
    ds.validate();
    if (cfg.arch.inputs() != ds.dims() || cfg.arch.classes() != ds.k)
        throw ValidationError("baseline: architecture does not match the dataset (" + std::to_string(ds.dims()) +
                              " features, " + std::to_string(ds.k) + " classes)");
}

template <class F>
auto in_round(int round, F&& f) {
    try {
        return f();
    } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " in round " + std::to_string(round), e.epoch(), round);
    }
}

std::vector<int> wrong_flags(const Matrix& preds, std::span<const int> labels) {
    std::vector<int> wrong(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        wrong[i] = nn::argmax(preds.row(i)) != static_cast<std::size_t>(labels[i]);
    return wrong;
}

Result train_adaboost(const data::Dataset& ds, const BaselineConfig& cfg, bool nc) {
    check(ds, cfg);
    Result res;
    auto& ens = res.ensemble;
    ens = empty_ensemble(ds, cfg);
    if (nc) ens.notes.push_back("adaboost_nc weight update is a reconstruction (approximation)");
    ens.notes.push_back("sample weights enter the loss multiplicatively; no resampling");

    const std::size_t n = ds.size();
    std::vector<double> w = nn::uniform_weights(n);
    std::vector<Matrix> vote_preds;
    std::vector<double> vote_alphas;
    std::vector<std::vector<int>> member_correct;
    std::optional<nn::Network> fallback;

    for (int t = 1; t <= cfg.T; ++t) {
        const auto start = Clock::now();
        boost::RoundRecord rec;
        rec.round = t;
        nn::Network net = nn::init_network(cfg.arch, member_init_seed(cfg.seed, t));
        rec.epoch_losses = in_round(t, [&] {
            return nn::train_epochs(net, ds, nn::WeightedCrossEntropy(w), options(cfg, cfg.epochs_per_model, t))
                .epoch_losses;
        });
        const Matrix preds = nn::predict(net, ds.features, cfg.exec);
        const std::vector<int> wrong = wrong_flags(preds, ds.labels);
        double eps = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (wrong[i]) eps += w[i];
        if (t == 1) fallback = net;

        if (eps >= 0.5) {
            rec.skipped = true;
            ens.skipped_rounds.push_back(t);
        } else {
            rec.alpha = m1_alpha(eps);
            ens.members.push_back({std::move(net), rec.alpha, t});
            vote_preds.push_back(preds);
            vote_alphas.push_back(rec.alpha);
            if (nc) {
                std::vector<int> c(n);
                for (std::size_t i = 0; i < n; ++i) c[i] = wrong[i] ? -1 : 1;
                member_correct.push_back(std::move(c));
                const Matrix h = kernels::combine(vote_preds, vote_alphas, cfg.exec);
                const std::vector<int> h_wrong = wrong_flags(h, ds.labels);
                std::vector<int> h_correct(n);
                for (std::size_t i = 0; i < n; ++i) h_correct[i] = h_wrong[i] ? -1 : 1;
                const auto amb = metrics::amb_nc(h_correct, member_correct, vote_alphas);
                w = adaboost_reweight(w, wrong, rec.alpha, amb, cfg.lambda_nc);
            } else {
                w = adaboost_reweight(w, wrong, rec.alpha);
            }
        }
        rec.weights = w;
        rec.seconds = seconds_since(start);
        res.rounds.push_back(std::move(rec));
    }

    if (ens.members.empty()) {
        std::cerr << "warning: " << ens.method << ": every round had error >= 0.5; keeping the first model\n";
        ens.notes.push_back("all rounds skipped; single-member fallback to round 1");
        ens.members.push_back({std::move(*fallback), 1.0, 1});
    }
    return res;
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::single: return "single";
        case Method::bagging: return "bagging";
        case Method::adaboost_m1: return "adaboost_m1";
        case Method::adaboost_nc: return "adaboost_nc";
        case Method::snapshot: return "snapshot";
        case Method::bans: return "bans";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::single, Method::bagging, Method::adaboost_m1, Method::adaboost_nc, Method::snapshot,
                     Method::bans})
        if (to_string(m) == name) return m;
    throw ValidationError("unknown baseline method '" + name + "'");
}

void BaselineConfig::validate() const {
    if (T < 1) throw ValidationError("baseline: T must be at least 1");
    if (epochs_per_model < 1) throw ValidationError("baseline: epochs_per_model must be positive");
    if (batch_size == 0) throw ValidationError("baseline: batch_size must be positive");
    if (!(lambda_nc >= 0.0) || !std::isfinite(lambda_nc)) throw ValidationError("baseline: lambda_nc must be nonnegative");
    if (!(bans_label_mix >= 0.0 && bans_label_mix <= 1.0))
        throw ValidationError("baseline: bans_label_mix must lie in [0, 1]");
    arch.validate();
    nn::LrSchedule s = schedule;
    s.total_epochs = 1;
    s.validate();
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
    return idx;
}

double m1_alpha(double eps) {
    eps = std::clamp(eps, kEpsFloor, 1.0 - kEpsFloor);
    return 0.5 * std::log((1.0 - eps) / eps);
}

std::vector<double> adaboost_reweight(std::span<const double> w, std::span<const int> wrong, double alpha,
                                      std::span<const double> amb, double lambda) {
    if (wrong.size() != w.size() || (!amb.empty() && amb.size() != w.size()))
        throw ValidationError("adaboost_reweight: length mismatch");
    std::vector<double> out(w.size());
    double z = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        double v = w[i] * std::exp(wrong[i] ? alpha : -alpha);
        if (!amb.empty()) v *= std::pow(1.0 + std::abs(amb[i]), lambda);
        out[i] = v;
        z += v;
    }
    if (!(z > 0.0) || !std::isfinite(z)) throw std::logic_error("adaboost_reweight: degenerate weight mass");
    for (double& v : out) v /= z;
    return out;
}

SoftTargetLoss::SoftTargetLoss(Matrix targets, std::vector<double> weights, double label_mix)
    : targets_(std::move(targets)), weights_(std::move(weights)), mix_(label_mix) {
    if (targets_.rows() != weights_.size()) throw ValidationError("soft target loss: target/weight count mismatch");
    if (!(mix_ >= 0.0 && mix_ <= 1.0)) throw ValidationError("soft target loss: label_mix must lie in [0, 1]");
}

double SoftTargetLoss::evaluate(std::size_t index, std::span<const double> probs, int label,
                                std::span<double> grad) const {
    if (index >= weights_.size()) throw ValidationError("soft target loss: sample index out of range");
    if (probs.size() != targets_.cols()) throw ValidationError("soft target loss: class count mismatch");
    const auto q = targets_.row(index);
    const double w = weights_[index];
    double loss = 0.0;
    for (std::size_t c = 0; c < probs.size(); ++c) {
        const double p = std::max(probs[c], kProbFloor);
        double target = (1.0 - mix_) * q[c];
        if (static_cast<int>(c) == label) target += mix_;
        if (target != 0.0) loss -= target * std::log(p);
        grad[c] = -w * target / p;
    }
    return w * loss;
}

Result train_single(const data::Dataset& ds, const BaselineConfig& cfg) {
    check(ds, cfg);
    Result res;
    res.ensemble = empty_ensemble(ds, cfg);
    res.ensemble.method = "single";
    const auto start = Clock::now();
    boost::RoundRecord rec;
    nn::Network net = nn::init_network(cfg.arch, member_init_seed(cfg.seed, 1));
    rec.epoch_losses = in_round(1, [&] {
        return nn::train_epochs(net, ds, nn::WeightedCrossEntropy(nn::uniform_weights(ds.size())),
                                options(cfg, cfg.epochs_per_model, 1))
            .epoch_losses;
    });
    rec.alpha = 1.0;
    rec.seconds = seconds_since(start);
    res.ensemble.members.push_back({std::move(net), 1.0, 1});
    res.rounds.push_back(std::move(rec));
    return res;
}

Result train_bagging(const data::Dataset& ds, const BaselineConfig& cfg) {
    check(ds, cfg);
    Result res;
    res.ensemble = empty_ensemble(ds, cfg);
    for (int t = 1; t <= cfg.T; ++t) {
        const auto start = Clock::now();
        boost::RoundRecord rec;
        rec.round = t;
        const data::Dataset boot = ds.subset(bootstrap_indices(ds.size(), member_bootstrap_seed(cfg.seed, t)));
        nn::Network net = nn::init_network(cfg.arch, member_init_seed(cfg.seed, t));
        rec.epoch_losses = in_round(t, [&] {
            return nn::train_epochs(net, boot, nn::WeightedCrossEntropy(nn::uniform_weights(boot.size())),
                                    options(cfg, cfg.epochs_per_model, t))
                .epoch_losses;
        });
        rec.alpha = 1.0;
        rec.seconds = seconds_since(start);
        res.ensemble.members.push_back({std::move(net), 1.0, t});
        res.rounds.push_back(std::move(rec));
    }
    return res;
}

Result train_adaboost_m1(const data::Dataset& ds, const BaselineConfig& cfg) { return train_adaboost(ds, cfg, false); }

Result train_adaboost_nc(const data::Dataset& ds, const BaselineConfig& cfg) { return train_adaboost(ds, cfg, true); }

Result train_snapshot(const data::Dataset& ds, const BaselineConfig& cfg) {
    check(ds, cfg);
    Result res;
    res.ensemble = empty_ensemble(ds, cfg);
    nn::TrainOptions opt = options(cfg, cfg.T * cfg.epochs_per_model, 1);
    opt.schedule.kind = nn::ScheduleKind::cosine_cyclic;
    opt.schedule.cycles = cfg.T;
    const int cycle = opt.schedule.cycle_length();

    nn::Network net = nn::init_network(cfg.arch, member_init_seed(cfg.seed, 1));
    auto start = Clock::now();
    boost::RoundRecord rec;
    rec.round = 1;
    try {
        nn::train_epochs(net, ds, nn::WeightedCrossEntropy(nn::uniform_weights(ds.size())), opt,
                         [&](int epoch, const nn::Network& live, double loss) {
                             rec.epoch_losses.push_back(loss);
                             if ((epoch + 1) % cycle != 0 && epoch + 1 != opt.epochs) return;
                             rec.alpha = 1.0;
                             rec.seconds = seconds_since(start);
                             const int c = static_cast<int>(res.ensemble.members.size()) + 1;
                             res.ensemble.members.push_back({live, 1.0, c});
                             res.rounds.push_back(std::move(rec));
                             rec = {};
                             rec.round = c + 1;
                             start = Clock::now();
                         });
    } catch (const DivergenceError& e) {
        const int c = e.epoch() >= 0 ? e.epoch() / cycle + 1 : -1;
        throw DivergenceError(std::string(e.what()) + " in cycle " + std::to_string(c), e.epoch(), c);
    }
    return res;
}

Result train_bans(const data::Dataset& ds, const BaselineConfig& cfg) {
    Result res = train_single(ds, cfg);
    res.ensemble.method = "bans";
    const std::vector<double> w = nn::uniform_weights(ds.size());
    for (int g = 2; g <= cfg.T; ++g) {
        const auto start = Clock::now();
        boost::RoundRecord rec;
        rec.round = g;
        // Teacher outputs are computed once, so the generation's targets are frozen.
        const SoftTargetLoss loss(nn::predict(res.ensemble.members.back().net, ds.features, cfg.exec), w,
                                  cfg.bans_label_mix);
        nn::Network net = nn::init_network(cfg.arch, member_init_seed(cfg.seed, g));
        rec.epoch_losses = in_round(g, [&] {
            return nn::train_epochs(net, ds, loss, options(cfg, cfg.epochs_per_model, g)).epoch_losses;
        });
        rec.alpha = 1.0;
        rec.seconds = seconds_since(start);
        res.ensemble.members.push_back({std::move(net), 1.0, g});
        res.rounds.push_back(std::move(rec));
    }
    return res;
}

Result train(const data::Dataset& ds, const BaselineConfig& cfg) {
    switch (cfg.method) {
        case Method::single: return train_single(ds, cfg);
        case Method::bagging: return train_bagging(ds, cfg);
        case Method::adaboost_m1: return train_adaboost_m1(ds, cfg);
        case Method::adaboost_nc: return train_adaboost_nc(ds, cfg);
        case Method::snapshot: return train_snapshot(ds, cfg);
        case Method::bans: return train_bans(ds, cfg);
    }
    throw ValidationError("unknown baseline method");
}

}  // namespace edde::baselines
