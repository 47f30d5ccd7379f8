#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edde/matrix.hpp"

namespace edde::data {

struct Dataset {
    Matrix features;                      // N x d
    std::vector<int> labels;              // N entries in [0, k)
    std::size_t k = 0;
    std::vector<std::string> label_names;  // label_names[c] is the original label of class c
    std::vector<std::string> feature_names;
    // Normalization statistics fitted on this set (empty until fit_normalization).
    std::vector<double> feature_means;
    std::vector<double> feature_stds;

    std::size_t size() const { return labels.size(); }
    std::size_t dims() const { return features.cols(); }

    /// Throws ValidationError unless N >= 1, labels are in range and features finite.
    void validate() const;

    /// Rows in the given order (duplicates allowed). Keeps k, names and statistics.
    Dataset subset(std::span<const std::size_t> rows) const;
};

/// Reads a header-row CSV. `label_column` names the class column; every
/// other column is a numeric feature. Classes are numbered by first appearance.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

/// As above, but classes must come from `label_names` (an unseen label is a
/// ParseError). Used to read evaluation data for a trained model.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 const std::vector<std::string>& label_names);

/// Features with %.17g precision, label column last.
void write_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column = "label");

/// IDX image/label pair (e.g. MNIST). Pixels are scaled to [0, 1]; at most
/// `limit` samples are read (0 reads all). k = largest label + 1.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t limit = 0);

/// k Gaussian clusters in d dimensions. Centres are uniform in [-1, 1]^d and
/// depend only on `seed`; points are centre + spread * N(0, I) drawn from
/// `sample_seed`. Classes are interleaved: row i has label i % k.
Dataset make_blobs(std::size_t n_per_class, std::size_t k, std::size_t d, double spread, std::uint64_t seed,
                   std::uint64_t sample_seed);
Dataset make_blobs(std::size_t n_per_class, std::size_t k, std::size_t d, double spread, std::uint64_t seed);

struct FoldSplit {
    std::vector<std::vector<std::size_t>> folds;
};

/// Shuffled partition of 0..n_samples-1 into n near-equal folds.
FoldSplit fold_split(std::size_t n_samples, std::size_t n, std::uint64_t seed);
FoldSplit fold_split(const Dataset& ds, std::size_t n, std::uint64_t seed);

/// Records per-feature mean and standard deviation on `ds`.
void fit_normalization(Dataset& ds);

/// (x - mean) / max(std, 1e-12) with the statistics of `stats_from`, which
/// must have been fitted. The result carries stats_from's statistics.
Dataset normalize(const Dataset& ds, const Dataset& stats_from);
Dataset normalize(const Dataset& ds, std::span<const double> means, std::span<const double> stds);

std::vector<double> one_hot(int label, std::size_t k);

}  // namespace edde::data
