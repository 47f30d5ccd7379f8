#include "edde/transfer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>

#include "edde/error.hpp"
#include "edde/random.hpp"
#include "edde/seeds.hpp"

namespace edde::transfer {

namespace {

data::Dataset join_folds(const data::Dataset& ds, const data::FoldSplit& split, std::size_t first, std::size_t last) {
    std::vector<std::size_t> rows;
    for (std::size_t f = first; f < last; ++f) rows.insert(rows.end(), split.folds[f].begin(), split.folds[f].end());
    return ds.subset(rows);
}

std::uint64_t student_shuffle_seed(std::uint64_t seed) { return derive_seed(seed, 0x57d5); }

}  // namespace

std::uint64_t student_init_seed(std::uint64_t seed) { return derive_seed(seed, 0x57d1); }

std::size_t copied_layers(double beta, std::size_t layers) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("beta must lie in [0, 1]");
    return static_cast<std::size_t>(std::floor(beta * static_cast<double>(layers) + 1e-9));
}

nn::Network transfer_init(const nn::Network& teacher, const TransferSpec& spec) {
    const std::size_t copy = copied_layers(spec.beta, teacher.layers.size());
    nn::Network student = nn::init_network(teacher.arch, spec.fresh_seed);
    if (student.layers.size() != teacher.layers.size())
        throw ValidationError("transfer_init: teacher parameters do not match its architecture");
    for (std::size_t l = 0; l < copy; ++l) {
        require_same_shape(teacher.layers[l].weights, student.layers[l].weights, "transfer_init");
        student.layers[l] = teacher.layers[l];
    }
    return student;
}

void BetaSearchConfig::validate() const {
    if (n_folds < 3) throw ValidationError("beta search: n_folds must be at least 3");
    if (!(beta_step > 0.0 && beta_step <= 1.0)) throw ValidationError("beta search: beta_step must be in (0, 1]");
    if (!(gap_tolerance >= 0.0)) throw ValidationError("beta search: gap_tolerance must be nonnegative");
    if (probe_epochs < 0) throw ValidationError("beta search: probe_epochs must be nonnegative");
    if (teacher_epochs < 1 || student_epochs < 1) throw ValidationError("beta search: epoch counts must be positive");
    if (probe_epochs > student_epochs)
        throw ValidationError("beta search: probe_epochs cannot exceed student_epochs");
}

ProbeFolds make_probe_folds(const data::Dataset& ds, const data::FoldSplit& split) {
    const std::size_t n = split.folds.size();
    if (n < 3) throw ValidationError("beta search: needs at least three folds");
    for (std::size_t f = 0; f < n; ++f)
        if (split.folds[f].empty()) throw ValidationError("beta search: fold " + std::to_string(f + 1) + " is empty");
    ProbeFolds p;
    p.teacher_train = join_folds(ds, split, 0, n - 1);
    p.student_train = join_folds(ds, split, 0, n - 2);
    p.seen = ds.subset(split.folds[n - 2]);
    p.unseen = ds.subset(split.folds[n - 1]);
    return p;
}

double ProbeResult::gap() const { return std::abs(acc_seen - acc_unseen); }

ProbeResult probe_gap(const nn::Network& teacher, double beta, const ProbeFolds& folds, const BetaSearchConfig& cfg,
                      const TrainSettings& train) {
    if (folds.seen.size() == 0 || folds.unseen.size() == 0 || folds.student_train.size() == 0)
        throw ValidationError("probe_gap: empty fold");
    nn::Network student = transfer_init(teacher, {beta, student_init_seed(train.seed)});

    ProbeResult r;
    auto measure = [&](const nn::Network& net) {
        r.acc_seen += nn::accuracy(nn::predict(net, folds.seen.features, train.exec), folds.seen.labels);
        r.acc_unseen += nn::accuracy(nn::predict(net, folds.unseen.features, train.exec), folds.unseen.labels);
    };
    if (cfg.probe_epochs == 0) {
        measure(student);
        return r;
    }

    nn::TrainOptions opt;
    opt.schedule = train.schedule;
    opt.schedule.total_epochs = cfg.student_epochs;
    opt.epochs = cfg.probe_epochs;
    opt.batch_size = train.batch_size;
    opt.seed = student_shuffle_seed(train.seed);
    opt.exec = train.exec;
    const nn::WeightedCrossEntropy loss(nn::uniform_weights(folds.student_train.size()));
    nn::train_epochs(student, folds.student_train, loss, opt, [&](int, const nn::Network& net, double) { measure(net); });
    r.acc_seen /= cfg.probe_epochs;
    r.acc_unseen /= cfg.probe_epochs;
    return r;
}

std::vector<double> beta_candidates(double step) {
    if (!(step > 0.0 && step <= 1.0)) throw ValidationError("beta_step must be in (0, 1]");
    std::vector<double> out;
    for (int i = 0;; ++i) {
        // Rounded so that e.g. 1 - 3 * 0.1 is stored as the double nearest 0.7.
        const double b = std::round((1.0 - i * step) * 1e9) / 1e9;
        if (b <= 0.0) break;
        out.push_back(b);
    }
    out.push_back(0.0);
    return out;
}

BetaSearchResult beta_search(const data::Dataset& ds, const nn::Architecture& arch, const BetaSearchConfig& cfg,
                             const TrainSettings& train) {
    cfg.validate();
    arch.validate();
    if (ds.size() < cfg.n_folds)
        throw ValidationError("beta search: " + std::to_string(ds.size()) + " samples cannot fill " +
                              std::to_string(cfg.n_folds) + " folds");
    const auto split = data::fold_split(ds, cfg.n_folds, train.seed);
    const ProbeFolds folds = make_probe_folds(ds, split);

    BetaSearchResult result;
    result.teacher = nn::init_network(arch, member_init_seed(train.seed, 1));
    nn::TrainOptions opt;
    opt.schedule = train.schedule;
    opt.schedule.total_epochs = cfg.teacher_epochs;
    opt.epochs = cfg.teacher_epochs;
    opt.batch_size = train.batch_size;
    opt.seed = member_shuffle_seed(train.seed, 1);
    opt.exec = train.exec;
    result.teacher_losses =
        nn::train_epochs(result.teacher, folds.teacher_train,
                         nn::WeightedCrossEntropy(nn::uniform_weights(folds.teacher_train.size())), opt)
            .epoch_losses;

    // Candidates that copy the same number of layers give the same student, so probe each layer count once.
    std::map<std::size_t, ProbeResult> probed;
    for (double beta : beta_candidates(cfg.beta_step)) {
        const std::size_t layers = copied_layers(beta, arch.weight_layers());
        auto it = probed.find(layers);
        if (it == probed.end()) it = probed.emplace(layers, probe_gap(result.teacher, beta, folds, cfg, train)).first;
        const ProbeResult& p = it->second;
        result.trace.push_back({beta, layers, p.acc_seen, p.acc_unseen, p.gap()});
        if (p.gap() <= cfg.gap_tolerance) {
            result.beta = beta;
            return result;
        }
    }
    result.beta = 0.0;
    return result;
}

void write_trace_csv(const std::vector<BetaTraceRow>& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << "beta,acc_seen,acc_unseen,gap\n";
    for (const auto& r : trace)
        out << std::setprecision(10) << r.beta << ',' << std::setprecision(17) << r.acc_seen << ',' << r.acc_unseen
            << ',' << r.gap << '\n';
}

}  // namespace edde::transfer
