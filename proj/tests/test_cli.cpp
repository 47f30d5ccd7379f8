#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "edde/cli.hpp"
#include "edde/error.hpp"
#include "edde/persistence.hpp"
#include "helpers.hpp"

using namespace edde;
using json = nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small well-separated problem; trains in well under a second.
std::string base_config(const std::filesystem::path& out) {
    return "[data]\nn_per_class = 40\ntest_per_class = 15\nd = 4\nspread = 0.5\nseed = 3\n"
           "[model]\nhidden = 10\n"
           "[train]\nT = 3\nepochs_first = 6\nepochs_rest = 3\nepochs_per_model = 3\nbatch_size = 16\nseed = 2\n"
           "[search]\nteacher_epochs = 3\nbeta_step = 0.5\n"
           "[output]\ndir = " +
           out.string() + "\n";
}

std::filesystem::path write_config(const std::filesystem::path& dir, const std::string& text) {
    const auto p = dir / "run.ini";
    std::ofstream(p) << text;
    return p;
}

struct Run {
    int code;
    std::string out, err;
};

template <class F>
Run capture(F&& f) {
    std::ostringstream out, err;
    const int code = f(out, err);
    return {code, out.str(), err.str()};
}

Run train(const std::filesystem::path& cfg, std::vector<std::string> set = {}) {
    return capture([&](std::ostream& o, std::ostream& e) { return cli::cmd_train(cfg, set, o, e); });
}

}  // namespace

TEST_CASE("config parsing, overrides and rejection of unknown keys") {
    const auto c = cli::parse_config(
        "# comment\n[data]\nk = 4 ; trailing\n[model]\nhidden = 8, 6\nactivation = tanh\n[train]\nbeta = auto\n"
        "gamma=0.3\n",
        {"train.T=7", "data.spread=0.25"});
    CHECK(c.data.k == 4);
    CHECK(c.hidden == std::vector<std::size_t>{8, 6});
    CHECK(c.activation == nn::Activation::tanh);
    CHECK_FALSE(c.beta.has_value());
    CHECK(c.gamma == 0.3);
    CHECK(c.T == 7);
    CHECK(c.data.spread == 0.25);
    CHECK(c.architecture(5, 4).layer_sizes == std::vector<std::size_t>{5, 8, 6, 4});

    CHECK_THROWS_AS(cli::parse_config("[train]\ngamma_typo = 1\n"), ValidationError);
    CHECK_THROWS_AS(cli::parse_config("[nonsense]\n"), ValidationError);
    CHECK_THROWS_AS(cli::parse_config("[train]\nT = five\n"), ValidationError);
    CHECK_THROWS_AS(cli::parse_config("[train]\nT = 0\n"), ValidationError);
    CHECK_THROWS_AS(cli::parse_config("[train]\nmethod = stacking\n"), ValidationError);
    CHECK_THROWS_AS(cli::parse_config("", {"train.gamma"}), ValidationError);
    try {
        cli::parse_config("[train]\nT = 3\nbogus = 1\n");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);  // line number
    }
}

TEST_CASE("ablation methods map to their parameter settings") {
    auto c = cli::parse_config("[train]\nbeta = 0.5\ngamma = 0.2\n");
    const auto arch = c.architecture(2, 3);
    c.method = "edde_normal_loss";
    CHECK(c.edde_config(arch).gamma == 0.0);
    c.method = "edde_transfer_all";
    CHECK(c.edde_config(arch).beta == 1.0);
    c.method = "edde_transfer_none";
    CHECK(c.edde_config(arch).beta == 0.0);
    c.method = "edde";
    CHECK(c.edde_config(arch).gamma == 0.2);
    CHECK(c.edde_config(arch).beta == 0.5);
    for (const auto& m : {"single", "bagging", "adaboost_m1", "adaboost_nc", "snapshot", "bans", "edde"})
        CHECK(std::find(cli::known_methods().begin(), cli::known_methods().end(), m) != cli::known_methods().end());
}

TEST_CASE("train writes a loadable ensemble and reports; identical runs are byte-identical") {
    const auto dir = testing::temp_dir("cli_train");
    const auto cfg = write_config(dir, base_config(dir / "a"));
    const auto r1 = train(cfg);
    INFO(r1.err);
    REQUIRE(r1.code == 0);
    for (const char* f : {"report.json", "metrics.csv", "timing.json", "train.csv", "test.csv", "ensemble/manifest.json"})
        CHECK(std::filesystem::exists(dir / "a" / f));
    const auto r2 = train(cfg, {"output.dir=" + (dir / "b").string()});
    REQUIRE(r2.code == 0);
    CHECK(slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json"));
    CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
    for (const auto& e : std::filesystem::directory_iterator(dir / "a" / "ensemble"))
        CHECK(slurp(e.path()) == slurp(dir / "b" / "ensemble" / e.path().filename()));

    const auto report = json::parse(slurp(dir / "a" / "report.json"));
    CHECK(report["method"] == "edde");
    CHECK(report["seed"] == 2);
    CHECK(report["config"]["train"]["gamma"] == 0.1);
    CHECK(report["rounds"].size() == 3);
    CHECK(report["evaluated_on"] == "test");

    // evaluate on the saved test split reproduces the training-time test metrics
    const auto ev = capture([&](std::ostream& o, std::ostream& e) {
        return cli::cmd_evaluate(dir / "a" / "ensemble", {dir / "a" / "test.csv", {}, "label", dir / "eval"}, o, e);
    });
    INFO(ev.err);
    REQUIRE(ev.code == 0);
    CHECK(slurp(dir / "eval" / "metrics.csv") == slurp(dir / "a" / "metrics.csv"));
    const auto ev2 = capture([&](std::ostream& o, std::ostream& e) {
        return cli::cmd_evaluate(dir / "a" / "ensemble", {dir / "a" / "test.csv", {}, "label", dir / "eval"}, o, e);
    });
    CHECK(ev.out == ev2.out);

    // the reported accuracy is an argmax count over the saved ensemble's outputs
    const auto ens = io::load_ensemble(dir / "a" / "ensemble");
    const auto test = data::load_csv(dir / "a" / "test.csv", "label", ens.label_names);
    const auto norm = data::normalize(test, ens.feature_means, ens.feature_stds);
    const Matrix H = boost::ensemble_predict(ens, norm.features);
    std::size_t right = 0;
    for (std::size_t i = 0; i < H.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < H.cols(); ++c)
            if (H(i, c) > H(i, best)) best = c;
        right += best == static_cast<std::size_t>(norm.labels[i]);
    }
    CHECK(report["test_metrics"]["ensemble_accuracy"].get<double>() == static_cast<double>(right) / H.rows());
}

TEST_CASE("gamma override is echoed; single ignores T") {
    const auto dir = testing::temp_dir("cli_override");
    const auto cfg = write_config(dir, base_config(dir / "g"));
    REQUIRE(train(cfg, {"train.gamma=0"}).code == 0);
    CHECK(json::parse(slurp(dir / "g" / "report.json"))["config"]["train"]["gamma"] == 0.0);

    REQUIRE(train(cfg, {"train.method=single", "output.dir=" + (dir / "s").string()}).code == 0);
    CHECK(io::load_ensemble(dir / "s" / "ensemble").members.size() == 1);
    const auto single_eval = capture([&](std::ostream& o, std::ostream& e) {
        return cli::cmd_evaluate(dir / "s" / "ensemble", {dir / "s" / "test.csv", {}, "label", dir / "se"}, o, e);
    });
    CHECK(single_eval.out.find("increased accuracy: 0\n") != std::string::npos);
    const auto div = capture([&](std::ostream& o, std::ostream& e) {
        return cli::cmd_diversity(dir / "s" / "ensemble", {dir / "s" / "test.csv", {}, "label", dir / "sd"}, o, e);
    });
    CHECK(div.code == 0);
    CHECK(div.out.find("div_h: n/a") != std::string::npos);
}

TEST_CASE("exit codes for bad input and divergence") {
    const auto dir = testing::temp_dir("cli_codes");
    CHECK(train(dir / "missing.ini").code == cli::kInputError);
    const auto bad = write_config(dir, "[train]\nunknown_key = 1\n");
    const auto r = train(bad);
    CHECK(r.code == cli::kInputError);
    CHECK(r.err.find("unknown_key") != std::string::npos);

    const auto cfg = write_config(dir, base_config(dir / "d"));
    CHECK(train(cfg, {"train.lr=1e200"}).code == cli::kDivergence);

    const auto ev = capture([&](std::ostream& o, std::ostream& e) {
        return cli::cmd_evaluate(dir / "nothing", {dir / "x.csv", {}, "label", {}}, o, e);
    });
    CHECK(ev.code == cli::kInputError);
}

TEST_CASE("beta-search command") {
    const auto dir = testing::temp_dir("cli_beta");
    const auto cfg = write_config(dir, base_config(dir / "b"));
    const auto r = capture([&](std::ostream& o, std::ostream& e) {
        return cli::cmd_beta_search(cfg, {"search.gap_tolerance=1"}, o, e);
    });
    REQUIRE(r.code == 0);
    CHECK(r.out == "beta = 1.0\n");
    const auto trace = slurp(dir / "b" / "beta_trace.csv");
    CHECK(trace.rfind("beta,acc_seen,acc_unseen,gap\n", 0) == 0);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 2);

    const auto full = capture([&](std::ostream& o, std::ostream& e) { return cli::cmd_beta_search(cfg, {}, o, e); });
    REQUIRE(full.code == 0);
    const double searched = std::stod(full.out.substr(full.out.find('=') + 1));
    REQUIRE(train(cfg, {"train.beta=auto"}).code == 0);
    const auto manifest = json::parse(slurp(dir / "b" / "ensemble" / "manifest.json"));
    CHECK(manifest["beta"].get<double>() == searched);
}

TEST_CASE("diversity command writes the similarity matrix and matches an offline recomputation") {
    const auto dir = testing::temp_dir("cli_div");
    const auto cfg = write_config(dir, base_config(dir / "t"));
    REQUIRE(train(cfg, {"train.method=bagging"}).code == 0);
    const auto r = capture([&](std::ostream& o, std::ostream& e) {
        return cli::cmd_diversity(dir / "t" / "ensemble", {dir / "t" / "test.csv", {}, "label", dir / "dv"}, o, e);
    });
    REQUIRE(r.code == 0);
    CHECK(std::filesystem::exists(dir / "dv" / "similarity.csv"));
    CHECK(std::filesystem::exists(dir / "dv" / "similarity_long.csv"));

    const auto ens = io::load_ensemble(dir / "t" / "ensemble");
    const auto test = data::normalize(data::load_csv(dir / "t" / "test.csv", "label", ens.label_names),
                                      ens.feature_means, ens.feature_stds);
    const auto preds = boost::member_predictions(ens, test.features);
    const auto d = json::parse(slurp(dir / "dv" / "diversity.json"));
    CHECK(d["div_h"].get<double>() == doctest::Approx(metrics::ensemble_div(preds)).epsilon(1e-12));

    // a duplicated member shows up as an off-diagonal similarity of 1
    auto dup = ens;
    dup.members.push_back(dup.members[0]);
    io::save_ensemble(dup, dir / "dup");
    REQUIRE(capture([&](std::ostream& o, std::ostream& e) {
                return cli::cmd_diversity(dir / "dup", {dir / "t" / "test.csv", {}, "label", dir / "dd"}, o, e);
            }).code == 0);
    const auto dd = json::parse(slurp(dir / "dd" / "diversity.json"));
    const auto& sim = dd["pairwise_similarity"];
    const std::size_t last = sim.size() - 1;
    CHECK(sim[0][last].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("compare splits the budget evenly and writes one row per method") {
    const auto dir = testing::temp_dir("cli_compare");
    const auto cfg = write_config(dir, base_config(dir / "c") +
                                           "[compare]\nmethods = single, bagging, snapshot, edde, edde_normal_loss\n"
                                           "budget = 9\n");
    const auto r = capture([&](std::ostream& o, std::ostream& e) { return cli::cmd_compare(cfg, {}, o, e); });
    INFO(r.err);
    REQUIRE(r.code == 0);
    const auto j = json::parse(slurp(dir / "c" / "comparison.json"));
    REQUIRE(j["rows"].size() == 5);
    for (const auto& row : j["rows"]) {
        CHECK(row["status"] == "ok");
        CHECK(row["total_epochs"] == 9);
    }
    CHECK(j["rows"][4]["config"]["train"]["gamma"] == 0.0);
    const auto csv = slurp(dir / "c" / "comparison.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);

    const auto one = capture([&](std::ostream& o, std::ostream& e) {
        return cli::cmd_compare(cfg, {"compare.methods=single"}, o, e);
    });
    REQUIRE(one.code == 0);
    CHECK(json::parse(slurp(dir / "c" / "comparison.json"))["rows"].size() == 1);

    CHECK(capture([&](std::ostream& o, std::ostream& e) {
              return cli::cmd_compare(cfg, {"compare.budget=10"}, o, e);
          }).code == cli::kInputError);
}
