#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "edde/cli.hpp"
#include "edde/error.hpp"
#include "edde/persistence.hpp"
#include "edde/random.hpp"

namespace edde::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = "1.0.0";
constexpr std::uint64_t kTestSampleTag = 0x7e57;

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << text;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_beta(double beta) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", beta);
    std::string s = buf;
    if (s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

// Maps the exception hierarchy onto exit codes; every command funnels through here.
template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const DivergenceError& e) {
        err << "error: training diverged: " << e.what() << '\n';
        return kDivergence;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kPartialFailure;
    }
}

boost::TrainResult train_method(const RunConfig& cfg, const nn::Architecture& arch, const data::Dataset& ds) {
    if (cfg.method.rfind("edde", 0) == 0) {
        auto res = boost::train_edde(ds, cfg.edde_config(arch));
        res.ensemble.method = cfg.method;
        return res;
    }
    return baselines::train(ds, cfg.baseline_config(arch));
}

json diversity_json(const metrics::DiversityReport& r) { return json::parse(metrics::to_json(r)); }

json evaluation_json(const Evaluation& ev) {
    json j = diversity_json(ev.report);
    if (ev.bias_variance)
        j["bias_variance"] = {{"bias", ev.bias_variance->bias}, {"variance", ev.bias_variance->variance}};
    else
        j["bias_variance"] = nullptr;
    return j;
}

json search_json(const transfer::BetaSearchResult& s) {
    json trace = json::array();
    for (const auto& r : s.trace)
        trace.push_back({{"beta", r.beta},
                         {"layers_copied", r.layers_copied},
                         {"acc_seen", r.acc_seen},
                         {"acc_unseen", r.acc_unseen},
                         {"gap", r.gap}});
    return {{"chosen_beta", s.beta}, {"trace", trace}};
}

int total_epochs(const boost::TrainResult& res) {
    int n = 0;
    for (const auto& r : res.rounds) n += static_cast<int>(r.epoch_losses.size());
    return n;
}

struct RunOutcome {
    boost::TrainResult result;
    Evaluation eval;
    bool on_test = false;
};

// Trains, persists and evaluates one configuration into cfg.out_dir.
RunOutcome run_and_save(const RunConfig& cfg, const LoadedData& ld) {
    const nn::Architecture arch = cfg.architecture(ld.train.dims(), ld.train.k);
    const auto start = std::chrono::steady_clock::now();
    RunOutcome o{train_method(cfg, arch, ld.train), {}, ld.test.has_value()};
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::filesystem::create_directories(cfg.out_dir);
    io::save_ensemble(o.result.ensemble, cfg.out_dir / "ensemble");
    o.eval = evaluate(o.result.ensemble, o.on_test ? *ld.test : ld.train, cfg.exec);
    const Evaluation train_eval = evaluate(o.result.ensemble, ld.train, cfg.exec);

    json report;
    report["software"] = {{"name", "edde"}, {"version", kVersion}};
    report["method"] = cfg.method;
    report["seed"] = cfg.seed;
    report["config"] = config_echo(cfg);
    report["beta"] = o.result.ensemble.beta;
    report["beta_search"] = o.result.search ? search_json(*o.result.search) : json(nullptr);
    json rounds = json::array();
    json timing_rounds = json::array();
    for (const auto& r : o.result.rounds) {
        rounds.push_back(
            {{"round", r.round}, {"alpha", r.alpha}, {"skipped", r.skipped}, {"epoch_losses", r.epoch_losses}});
        timing_rounds.push_back({{"round", r.round}, {"seconds", r.seconds}});
    }
    report["rounds"] = rounds;
    report["total_epochs"] = total_epochs(o.result);
    report["skipped_rounds"] = o.result.ensemble.skipped_rounds;
    report["notes"] = o.result.ensemble.notes;
    report["evaluated_on"] = o.on_test ? "test" : "train";
    report["train_metrics"] = evaluation_json(train_eval);
    report["test_metrics"] = evaluation_json(o.eval);
    write_text(cfg.out_dir / "report.json", report.dump(2) + "\n");
    write_metrics_csv(o.eval, cfg.out_dir / "metrics.csv");
    if (o.result.search) transfer::write_trace_csv(o.result.search->trace, cfg.out_dir / "beta_trace.csv");

    // Wall-clock numbers live apart from report.json so that reports stay byte-identical across runs.
    const json timing{{"rounds", timing_rounds}, {"total_seconds", seconds}};
    write_text(cfg.out_dir / "timing.json", timing.dump(2) + "\n");
    return o;
}

data::Dataset load_eval_data(const boost::Ensemble& ens, const EvalData& input) {
    data::Dataset raw;
    if (!input.idx_labels.empty()) {
        raw = data::load_idx(input.data, input.idx_labels);
        const std::size_t k = ens.arch().classes();
        for (int y : raw.labels)
            if (static_cast<std::size_t>(y) >= k) throw ParseError("label " + std::to_string(y) + " unseen in training");
        raw.k = k;
        raw.label_names = ens.label_names;
    } else {
        raw = data::load_csv(input.data, input.label_column, ens.label_names);
    }
    if (raw.dims() != ens.arch().inputs())
        throw ValidationError("data has " + std::to_string(raw.dims()) + " features, ensemble expects " +
                              std::to_string(ens.arch().inputs()));
    if (raw.k != ens.arch().classes()) throw ValidationError("data class count does not match the ensemble");
    if (ens.feature_means.empty()) return raw;
    return data::normalize(raw, ens.feature_means, ens.feature_stds);
}

}  // namespace

LoadedData load_data(const DataSpec& spec) {
    LoadedData ld;
    if (spec.source == "blobs") {
        ld.raw_train = data::make_blobs(spec.n_per_class, spec.k, spec.d, spec.spread, spec.seed);
        if (spec.test_per_class > 0)
            ld.raw_test = data::make_blobs(spec.test_per_class, spec.k, spec.d, spec.spread, spec.seed,
                                           derive_seed(spec.seed, kTestSampleTag));
    } else if (spec.source == "csv") {
        ld.raw_train = data::load_csv(spec.train, spec.label_column);
        if (!spec.test.empty()) ld.raw_test = data::load_csv(spec.test, spec.label_column, ld.raw_train.label_names);
    } else if (spec.source == "idx") {
        ld.raw_train = data::load_idx(spec.train, spec.train_labels, spec.limit);
        if (!spec.test.empty()) {
            data::Dataset t = data::load_idx(spec.test, spec.test_labels, spec.test_limit);
            for (int y : t.labels)
                if (static_cast<std::size_t>(y) >= ld.raw_train.k)
                    throw ParseError("test label " + std::to_string(y) + " does not occur in the training set");
            t.k = ld.raw_train.k;
            t.label_names = ld.raw_train.label_names;
            ld.raw_test = std::move(t);
        }
    } else {
        throw ValidationError("unknown data source '" + spec.source + "'");
    }
    if (ld.raw_test && ld.raw_test->dims() != ld.raw_train.dims())
        throw ValidationError("train and test sets differ in feature count");

    if (spec.normalize) {
        data::Dataset fitted = ld.raw_train;
        data::fit_normalization(fitted);
        ld.train = data::normalize(ld.raw_train, fitted);
        if (ld.raw_test) ld.test = data::normalize(*ld.raw_test, fitted);
    } else {
        ld.train = ld.raw_train;
        ld.test = ld.raw_test;
    }
    return ld;
}

Evaluation evaluate(const boost::Ensemble& ens, const data::Dataset& ds, nn::Exec exec) {
    const auto preds = boost::member_predictions(ens, ds.features, exec);
    Evaluation ev;
    ev.report = metrics::accuracy_summary(preds, ens.alphas(), ds.labels);
    if (preds.size() >= 2) ev.bias_variance = metrics::bias_variance_report(preds, ds.labels);
    return ev;
}

void write_metrics_csv(const Evaluation& ev, const std::filesystem::path& path) {
    const auto& r = ev.report;
    std::string s = "metric,value\n";
    s += "ensemble_accuracy," + fmt(r.ensemble_accuracy) + "\n";
    s += "average_accuracy," + fmt(r.average_accuracy) + "\n";
    s += "increased_accuracy," + fmt(r.increased_accuracy) + "\n";
    s += "div_h," + (r.size() < 2 ? std::string("n/a") : fmt(r.div_h)) + "\n";
    s += "bias," + (ev.bias_variance ? fmt(ev.bias_variance->bias) : std::string("n/a")) + "\n";
    s += "variance," + (ev.bias_variance ? fmt(ev.bias_variance->variance) : std::string("n/a")) + "\n";
    for (std::size_t t = 0; t < r.size(); ++t) {
        s += "accuracy_" + r.model_ids[t] + "," + fmt(r.model_accuracies[t]) + "\n";
        s += "alpha_" + r.model_ids[t] + "," + fmt(r.alphas[t]) + "\n";
    }
    write_text(path, s);
}

int cmd_train(const std::filesystem::path& config_path, const std::vector<std::string>& overrides, std::ostream& out,
              std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(config_path, overrides);
        const LoadedData ld = load_data(cfg.data);
        const RunOutcome o = run_and_save(cfg, ld);
        if (cfg.data.source == "blobs") {
            data::write_csv(ld.raw_train, cfg.out_dir / "train.csv", cfg.data.label_column);
            if (ld.raw_test) data::write_csv(*ld.raw_test, cfg.out_dir / "test.csv", cfg.data.label_column);
        }
        const auto& ens = o.result.ensemble;
        out << "method: " << cfg.method << "\n";
        out << "members: " << ens.members.size();
        if (!ens.skipped_rounds.empty()) out << " (" << ens.skipped_rounds.size() << " rounds skipped)";
        out << "\n";
        if (cfg.method.rfind("edde", 0) == 0) out << "beta: " << format_beta(ens.beta) << "\n";
        out << (o.on_test ? "test" : "train") << " ensemble accuracy: " << o.eval.report.ensemble_accuracy << "\n";
        out << "saved to " << (cfg.out_dir / "ensemble").string() << "\n";
        return static_cast<int>(kOk);
    });
}

int cmd_beta_search(const std::filesystem::path& config_path, const std::vector<std::string>& overrides,
                    std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(config_path, overrides);
        const LoadedData ld = load_data(cfg.data);
        const nn::Architecture arch = cfg.architecture(ld.train.dims(), ld.train.k);
        const boost::EddeConfig e = cfg.edde_config(arch);
        const auto res =
            transfer::beta_search(ld.train, arch, cfg.search, {e.schedule, e.batch_size, e.seed, e.exec});
        std::filesystem::create_directories(cfg.out_dir);
        transfer::write_trace_csv(res.trace, cfg.out_dir / "beta_trace.csv");
        out << "beta = " << format_beta(res.beta) << "\n";
        return static_cast<int>(kOk);
    });
}

int cmd_evaluate(const std::filesystem::path& ensemble_dir, const EvalData& input, std::ostream& out,
                 std::ostream& err) {
    return guarded(err, [&] {
        const boost::Ensemble ens = io::load_ensemble(ensemble_dir);
        const data::Dataset ds = load_eval_data(ens, input);
        const Evaluation ev = evaluate(ens, ds);
        const auto dir = input.out_dir.empty() ? ensemble_dir : input.out_dir;
        std::filesystem::create_directories(dir);
        write_metrics_csv(ev, dir / "metrics.csv");
        out << "ensemble accuracy: " << fmt(ev.report.ensemble_accuracy) << "\n";
        out << "average accuracy: " << fmt(ev.report.average_accuracy) << "\n";
        out << "increased accuracy: " << fmt(ev.report.increased_accuracy) << "\n";
        return static_cast<int>(kOk);
    });
}

int cmd_diversity(const std::filesystem::path& ensemble_dir, const EvalData& input, std::ostream& out,
                  std::ostream& err) {
    return guarded(err, [&] {
        const boost::Ensemble ens = io::load_ensemble(ensemble_dir);
        const data::Dataset ds = load_eval_data(ens, input);
        const Evaluation ev = evaluate(ens, ds);
        const auto dir = input.out_dir.empty() ? ensemble_dir : input.out_dir;
        std::filesystem::create_directories(dir);
        metrics::write_similarity_csv(ev.report, (dir / "similarity.csv").string());
        metrics::write_similarity_long_csv(ev.report, (dir / "similarity_long.csv").string());
        write_text(dir / "diversity.json", evaluation_json(ev).dump(2) + "\n");
        out << "div_h: " << (ev.report.size() < 2 ? std::string("n/a") : fmt(ev.report.div_h)) << "\n";
        return static_cast<int>(kOk);
    });
}

int cmd_compare(const std::filesystem::path& config_path, const std::vector<std::string>& overrides, std::ostream& out,
                std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(config_path, overrides);
        if (cfg.budget < cfg.T || cfg.budget % cfg.T != 0)
            throw ValidationError("compare: budget " + std::to_string(cfg.budget) + " must be a positive multiple of T = " +
                                  std::to_string(cfg.T));
        const LoadedData ld = load_data(cfg.data);
        const int per_model = cfg.budget / cfg.T;

        json rows = json::array();
        std::string csv = "method,total_epochs,ensemble_accuracy,average_accuracy,div_h,bias,variance,status\n";
        int failures = 0;
        for (const auto& method : cfg.compare_methods) {
            RunConfig sub = cfg;
            sub.method = method;
            sub.out_dir = cfg.out_dir / method;
            if (method == "single") {
                sub.epochs_per_model = cfg.budget;
            } else if (method.rfind("edde", 0) == 0) {
                sub.epochs_rest = per_model;
                sub.epochs_first = cfg.budget - (cfg.T - 1) * per_model;
                sub.search.teacher_epochs = sub.epochs_first;
            } else {
                sub.epochs_per_model = per_model;
            }
            json row{{"method", method}};
            try {
                const RunOutcome o = run_and_save(sub, ld);
                const auto& r = o.eval.report;
                row["total_epochs"] = total_epochs(o.result);
                row["ensemble_accuracy"] = r.ensemble_accuracy;
                row["average_accuracy"] = r.average_accuracy;
                row["div_h"] = r.size() < 2 ? json("n/a") : json(r.div_h);
                row["bias"] = o.eval.bias_variance ? json(o.eval.bias_variance->bias) : json("n/a");
                row["variance"] = o.eval.bias_variance ? json(o.eval.bias_variance->variance) : json("n/a");
                row["config"] = config_echo(sub);
                row["status"] = "ok";
                csv += method + "," + std::to_string(total_epochs(o.result)) + "," + fmt(r.ensemble_accuracy) + "," +
                       fmt(r.average_accuracy) + "," + (r.size() < 2 ? std::string("n/a") : fmt(r.div_h)) + "," +
                       (o.eval.bias_variance ? fmt(o.eval.bias_variance->bias) : std::string("n/a")) + "," +
                       (o.eval.bias_variance ? fmt(o.eval.bias_variance->variance) : std::string("n/a")) + ",ok\n";
                out << method << ": ensemble accuracy " << r.ensemble_accuracy << "\n";
            } catch (const std::exception& e) {
                ++failures;
                row["status"] = std::string("failed: ") + e.what();
                csv += method + ",,,,,,,failed\n";
                err << "error: " << method << ": " << e.what() << '\n';
            }
            rows.push_back(row);
        }
        std::filesystem::create_directories(cfg.out_dir);
        write_text(cfg.out_dir / "comparison.csv", csv);
        write_text(cfg.out_dir / "comparison.json", json{{"budget", cfg.budget}, {"rows", rows}}.dump(2) + "\n");
        return static_cast<int>(failures == 0 ? kOk : kPartialFailure);
    });
}

}  // namespace edde::cli
