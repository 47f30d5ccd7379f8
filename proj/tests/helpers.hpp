#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "edde/data.hpp"
#include "edde/matrix.hpp"
#include "edde/nn.hpp"
#include "edde/random.hpp"

namespace testing {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("edde_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::vector<double> random_simplex(edde::Rng& rng, std::size_t k) {
    std::vector<double> v(k);
    double s = 0.0;
    for (auto& x : v) {
        x = -std::log(1.0 - rng.uniform());  // Dirichlet(1,...,1) via exponentials
        s += x;
    }
    for (auto& x : v) x /= s;
    return v;
}

inline edde::Matrix random_probs(edde::Rng& rng, std::size_t n, std::size_t k) {
    edde::Matrix m(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = random_simplex(rng, k);
        std::copy(p.begin(), p.end(), m.row(i).begin());
    }
    return m;
}

inline edde::Matrix random_matrix(edde::Rng& rng, std::size_t n, std::size_t d, double lo = -1.0, double hi = 1.0) {
    edde::Matrix m(n, d);
    for (double& v : m.flat()) v = rng.uniform(lo, hi);
    return m;
}

inline edde::nn::Architecture arch(std::vector<std::size_t> sizes,
                                   edde::nn::Activation a = edde::nn::Activation::relu) {
    return {std::move(sizes), a};
}

inline double rel_err(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale < 1e-10 ? std::abs(a - b) : std::abs(a - b) / scale;
}

inline bool same_params(const edde::nn::Network& a, const edde::nn::Network& b) { return a.layers == b.layers; }

}  // namespace testing
