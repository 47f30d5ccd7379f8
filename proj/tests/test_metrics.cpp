#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "edde/error.hpp"
#include "edde/metrics.hpp"
#include "helpers.hpp"

using namespace edde;
using metrics::PredictionMatrix;

namespace {

PredictionMatrix rows(std::vector<std::vector<double>> r, std::string id = "m") {
    Matrix m(r.size(), r.front().size());
    for (std::size_t i = 0; i < r.size(); ++i) std::copy(r[i].begin(), r[i].end(), m.row(i).begin());
    return {m, std::move(id)};
}

// Straight-line pairwise diversity: (sqrt(2)/2) * mean_i ||p_i - q_i||.
double div_oracle(const Matrix& p, const Matrix& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double d = 0.0;
        for (std::size_t c = 0; c < p.cols(); ++c) d += (p(i, c) - q(i, c)) * (p(i, c) - q(i, c));
        s += std::sqrt(d);
    }
    return std::sqrt(2.0) / 2.0 * s / static_cast<double>(p.rows());
}

}  // namespace

TEST_CASE("pairwise_div and pairwise_sim examples") {
    const auto a = rows({{0.8, 0.2}});
    const auto b = rows({{0.6, 0.4}});
    CHECK(metrics::pairwise_div(a, a) == 0.0);
    CHECK(metrics::pairwise_sim(a, a) == 1.0);
    CHECK(metrics::pairwise_div(rows({{1, 0}}), rows({{0, 1}})) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(metrics::pairwise_sim(rows({{1, 0}}), rows({{0, 1}})) == doctest::Approx(0.0).epsilon(1e-15));
    // ||(0.2, -0.2)|| = 0.2 sqrt 2, scaled by sqrt(2)/2
    const double expect = std::sqrt(0.2 * 0.2 + 0.2 * 0.2) * std::sqrt(2.0) / 2.0;
    CHECK(metrics::pairwise_div(a, b) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(metrics::pairwise_div(a, b) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(metrics::pairwise_sim(a, b) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK_THROWS_AS(metrics::pairwise_div(a, rows({{0.5, 0.5}, {0.5, 0.5}})), ValidationError);
    CHECK_THROWS_AS(metrics::pairwise_div(a, rows({{0.2, 0.3, 0.5}})), ValidationError);
}

TEST_CASE("pairwise_div agrees with a straight-line oracle and is symmetric") {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        const PredictionMatrix p{testing::random_probs(rng, 40, 5), "p"};
        const PredictionMatrix q{testing::random_probs(rng, 40, 5), "q"};
        CHECK(metrics::pairwise_div(p, q) == doctest::Approx(div_oracle(p.soft_targets, q.soft_targets)).epsilon(1e-12));
        CHECK(metrics::pairwise_div(p, q) == metrics::pairwise_div(q, p));
        CHECK(metrics::pairwise_div(p, p) == 0.0);
    }
}

TEST_CASE("ensemble_div") {
    Rng rng(2);
    const PredictionMatrix a{testing::random_probs(rng, 20, 3), "a"};
    const PredictionMatrix b{testing::random_probs(rng, 20, 3), "b"};
    const PredictionMatrix c{testing::random_probs(rng, 20, 3), "c"};
    const std::vector<PredictionMatrix> two{a, b};
    CHECK(metrics::ensemble_div(two) == metrics::pairwise_div(a, b));

    const std::vector<PredictionMatrix> three{a, b, c};
    const double mean =
        (metrics::pairwise_div(a, b) + metrics::pairwise_div(a, c) + metrics::pairwise_div(b, c)) * 2.0 / 6.0;
    CHECK(metrics::ensemble_div(three) == doctest::Approx(mean).epsilon(1e-14));
    const std::vector<PredictionMatrix> permuted{c, a, b};
    CHECK(metrics::ensemble_div(permuted) == doctest::Approx(metrics::ensemble_div(three)).epsilon(1e-14));

    const std::vector<PredictionMatrix> same{a, a, a};
    CHECK(metrics::ensemble_div(same) == 0.0);
    const std::vector<PredictionMatrix> one{a};
    CHECK_THROWS_AS(metrics::ensemble_div(one), ValidationError);
}

TEST_CASE("ensemble_div of pairwise divs 0.1, 0.2, 0.3 is 0.2") {
    // N=1, k=2: rows (p, 1-p) give pairwise div |p - q|.
    const auto a = rows({{0.5, 0.5}});
    const auto b = rows({{0.6, 0.4}});
    const auto c = rows({{0.8, 0.2}});
    CHECK(metrics::pairwise_div(a, b) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(metrics::pairwise_div(b, c) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(metrics::pairwise_div(a, c) == doctest::Approx(0.3).epsilon(1e-12));
    const std::vector<PredictionMatrix> three{a, b, c};
    CHECK(metrics::ensemble_div(three) == doctest::Approx(2.0 / 6.0 * 0.6).epsilon(1e-12));
}

TEST_CASE("similarity_matrix") {
    Rng rng(3);
    const PredictionMatrix a{testing::random_probs(rng, 10, 4), "a"};
    const PredictionMatrix b{testing::random_probs(rng, 10, 4), "b"};
    const PredictionMatrix c{testing::random_probs(rng, 10, 4), "c"};
    const std::vector<PredictionMatrix> one{a};
    const auto m1 = metrics::similarity_matrix(one);
    CHECK(m1.rows() == 1);
    CHECK(m1(0, 0) == 1.0);

    const std::vector<PredictionMatrix> dup{a, a};
    const auto md = metrics::similarity_matrix(dup);
    for (double v : md.flat()) CHECK(v == 1.0);

    const std::vector<PredictionMatrix> three{a, b, c};
    const auto m = metrics::similarity_matrix(three);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::abs(m(j, j) - 1.0) <= 1e-9);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(std::abs(m(j, k) - m(k, j)) <= 1e-12);
            CHECK(m(j, k) == doctest::Approx(1.0 - div_oracle(three[j].soft_targets, three[k].soft_targets))
                                 .epsilon(1e-12));
        }
    }
}

TEST_CASE("amb_nc") {
    const std::vector<double> alphas{1.0, 1.0};
    std::vector<std::vector<int>> models{{1, 1}, {1, -1}};
    const std::vector<int> ens{1, 1};
    const auto amb = metrics::amb_nc(ens, models, alphas);
    CHECK(amb[0] == 0.0);
    CHECK(amb[1] == doctest::Approx(0.5 * (0.0 + 2.0)));

    std::vector<std::vector<int>> single{{-1}};
    const std::vector<int> wrong{-1};
    CHECK(metrics::amb_nc(wrong, single, std::vector<double>{1.0})[0] == 0.0);
    CHECK_THROWS_AS(metrics::amb_nc(ens, single, std::vector<double>{1.0}), ValidationError);
    CHECK_THROWS_AS(metrics::amb_nc(ens, models, std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("accuracy_summary") {
    Rng rng(4);
    const PredictionMatrix a{testing::random_probs(rng, 30, 3), "h1"};
    std::vector<int> labels(30);
    for (auto& y : labels) y = static_cast<int>(rng.below(3));

    const std::vector<PredictionMatrix> one{a};
    const auto r1 = metrics::accuracy_summary(one, std::vector<double>{2.5}, labels);
    CHECK(r1.increased_accuracy == 0.0);
    CHECK(std::isnan(r1.div_h));

    const std::vector<PredictionMatrix> same{a, a};
    const auto r2 = metrics::accuracy_summary(same, std::vector<double>{1.0, 3.0}, labels);
    CHECK(r2.ensemble_accuracy == r2.average_accuracy);
    CHECK(r2.increased_accuracy == r2.ensemble_accuracy - r2.average_accuracy);

    CHECK_THROWS_AS(metrics::accuracy_summary(std::vector<PredictionMatrix>{}, std::vector<double>{}, labels),
                    ValidationError);
}

TEST_CASE("two 60% models with disjoint errors and confident predictions beat 60%") {
    // 10 samples, class 0 everywhere. Model 1 errs on samples 0-3, model 2 on 6-9,
    // each confidently (0.9) where right and mildly (0.55 wrong) where wrong.
    const std::size_t n = 10;
    Matrix p1(n, 2), p2(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const bool w1 = i < 4, w2 = i >= 6;
        p1(i, 0) = w1 ? 0.45 : 0.95;
        p1(i, 1) = 1.0 - p1(i, 0);
        p2(i, 0) = w2 ? 0.45 : 0.95;
        p2(i, 1) = 1.0 - p2(i, 0);
    }
    const std::vector<int> labels(n, 0);
    const std::vector<PredictionMatrix> preds{{p1, "h1"}, {p2, "h2"}};
    const auto r = metrics::accuracy_summary(preds, std::vector<double>{1.0, 1.0}, labels);

    // Brute force: average soft targets, count argmax hits.
    int hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += (p1(i, 0) + p2(i, 0)) / 2 > (p1(i, 1) + p2(i, 1)) / 2;
    CHECK(r.model_accuracies == std::vector<double>{0.6, 0.6});
    CHECK(r.ensemble_accuracy == hits / 10.0);
    CHECK(r.ensemble_accuracy > 0.6);
}

TEST_CASE("bias_variance_report") {
    const std::vector<int> labels{0};
    const std::vector<PredictionMatrix> split{rows({{1, 0}}), rows({{0, 1}})};
    const auto bv = metrics::bias_variance_report(split, labels);
    CHECK(bv.bias == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(bv.variance == doctest::Approx(1.0).epsilon(1e-15));

    const std::vector<PredictionMatrix> perfect{rows({{1, 0}, {0, 1}}), rows({{1, 0}, {0, 1}})};
    const auto z = metrics::bias_variance_report(perfect, std::vector<int>{0, 1});
    CHECK(z.bias == 0.0);
    CHECK(z.variance == 0.0);

    const std::vector<PredictionMatrix> same{rows({{0.7, 0.3}}), rows({{0.7, 0.3}})};
    const auto s = metrics::bias_variance_report(same, labels);
    CHECK(s.variance == 0.0);
    CHECK(s.bias > 0.0);
    const std::vector<PredictionMatrix> one{rows({{0.7, 0.3}})};
    CHECK_THROWS_AS(metrics::bias_variance_report(one, labels), ValidationError);
}

TEST_CASE("prediction matrices are validated") {
    CHECK_THROWS_AS(rows({{0.7, 0.7}}).validate(), ValidationError);
    CHECK_THROWS_AS(rows({{1.2, -0.2}}).validate(), ValidationError);
    CHECK_NOTHROW(rows({{0.7, 0.3}}).validate());
}

TEST_CASE("report serialization") {
    const auto dir = testing::temp_dir("metrics");
    const std::vector<PredictionMatrix> preds{rows({{0.7, 0.3}}, "h1"), rows({{0.2, 0.8}}, "h2")};
    const auto r = metrics::accuracy_summary(preds, std::vector<double>{1.0, 1.0}, std::vector<int>{0});
    const auto json = metrics::to_json(r);
    CHECK(json.find("\"div_h\"") != std::string::npos);
    CHECK(json.find("\"ensemble_accuracy\"") != std::string::npos);

    metrics::write_similarity_csv(r, (dir / "sim.csv").string());
    std::ifstream in(dir / "sim.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "model,h1,h2");
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("h1,1,", 0) == 0);

    metrics::write_similarity_long_csv(r, (dir / "long.csv").string());
    std::ifstream lin(dir / "long.csv");
    int lines = 0;
    while (std::getline(lin, line)) ++lines;
    CHECK(lines == 1 + 4);

    const std::vector<PredictionMatrix> one{rows({{0.7, 0.3}}, "h1")};
    const auto r1 = metrics::accuracy_summary(one, std::vector<double>{1.0}, std::vector<int>{0});
    CHECK(metrics::to_json(r1).find("\"n/a\"") != std::string::npos);
}
