#include "edde/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "edde/error.hpp"
#include "edde/random.hpp"

namespace edde::data {

namespace {

constexpr double kStdFloor = 1e-12;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            cells.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& cell, double& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    const char* first = t.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size();
}

Dataset load_csv_impl(const std::filesystem::path& path, const std::string& label_column,
                      const std::vector<std::string>* fixed_labels) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open CSV file '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw ParseError("CSV file '" + path.string() + "' is empty");
    const auto header = split_csv_line(line);
    std::size_t label_idx = header.size();
    for (std::size_t c = 0; c < header.size(); ++c)
        if (trim(header[c]) == label_column) label_idx = c;
    if (label_idx == header.size())
        throw ParseError("CSV file '" + path.string() + "' has no column named '" + label_column + "'", 1);

    Dataset ds;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != label_idx) ds.feature_names.push_back(trim(header[c]));
    const std::size_t d = ds.feature_names.size();

    std::unordered_map<std::string, int> label_ids;
    if (fixed_labels) {
        ds.label_names = *fixed_labels;
        for (std::size_t i = 0; i < fixed_labels->size(); ++i) label_ids[(*fixed_labels)[i]] = static_cast<int>(i);
    }

    std::vector<double> values;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty() || line == "\r") continue;
        ++row;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("ragged row: expected " + std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()),
                             row);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_idx) {
                const std::string name = trim(cells[c]);
                auto it = label_ids.find(name);
                if (it == label_ids.end()) {
                    if (fixed_labels) throw ParseError("label '" + name + "' was not seen in training", row, c + 1);
                    it = label_ids.emplace(name, static_cast<int>(ds.label_names.size())).first;
                    ds.label_names.push_back(name);
                }
                ds.labels.push_back(it->second);
                continue;
            }
            double v = 0.0;
            if (!parse_double(cells[c], v))
                throw ParseError("non-numeric value '" + cells[c] + "' in column '" + trim(header[c]) + "'", row,
                                 c + 1);
            if (!std::isfinite(v))
                throw ParseError("non-finite value in column '" + trim(header[c]) + "'", row, c + 1);
            values.push_back(v);
        }
    }
    if (row == 0) throw ParseError("CSV file '" + path.string() + "' has no data rows");

    ds.features = Matrix(row, d);
    std::copy(values.begin(), values.end(), ds.features.flat().begin());
    ds.k = ds.label_names.size();
    return ds;
}

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated IDX header in '" + path.string() + "'");
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

}  // namespace

void Dataset::validate() const {
    if (labels.empty()) throw ValidationError("dataset is empty");
    if (features.rows() != labels.size()) throw ValidationError("dataset: feature/label row count mismatch");
    if (k == 0) throw ValidationError("dataset: class count is zero");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k)
            throw ValidationError("dataset: label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                                  " outside [0, " + std::to_string(k) + ")");
    for (double v : features.flat())
        if (!std::isfinite(v)) throw ValidationError("dataset: non-finite feature value");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.features = Matrix(rows.size(), dims());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= size()) throw ValidationError("subset: row index out of range");
        const auto src = features.row(rows[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.labels.push_back(labels[rows[i]]);
    }
    out.k = k;
    out.label_names = label_names;
    out.feature_names = feature_names;
    out.feature_means = feature_means;
    out.feature_stds = feature_stds;
    return out;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
    return load_csv_impl(path, label_column, nullptr);
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column,
                 const std::vector<std::string>& label_names) {
    return load_csv_impl(path, label_column, &label_names);
}

void write_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write CSV file '" + path.string() + "'");
    for (std::size_t c = 0; c < ds.dims(); ++c)
        out << (c < ds.feature_names.size() ? ds.feature_names[c] : "x" + std::to_string(c)) << ',';
    out << label_column << '\n';
    char buf[32];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.features.row(i)) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ',';
        }
        const auto label = static_cast<std::size_t>(ds.labels[i]);
        out << (label < ds.label_names.size() ? ds.label_names[label] : std::to_string(label)) << '\n';
    }
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t limit) {
    std::ifstream img(images, std::ios::binary);
    if (!img) throw ParseError("cannot open IDX images '" + images.string() + "'");
    std::ifstream lab(labels, std::ios::binary);
    if (!lab) throw ParseError("cannot open IDX labels '" + labels.string() + "'");

    if (read_be32(img, images) != 0x00000803u) throw ParseError("bad magic number in IDX images '" + images.string() + "'");
    const std::uint32_t n_img = read_be32(img, images);
    const std::uint32_t rows = read_be32(img, images);
    const std::uint32_t cols = read_be32(img, images);
    if (read_be32(lab, labels) != 0x00000801u) throw ParseError("bad magic number in IDX labels '" + labels.string() + "'");
    const std::uint32_t n_lab = read_be32(lab, labels);
    if (n_img != n_lab) throw ParseError("IDX image and label counts differ");

    std::size_t n = n_img;
    if (limit != 0 && limit < n) n = limit;
    if (n == 0) throw ParseError("IDX files contain no samples");
    const std::size_t d = std::size_t{rows} * cols;

    Dataset ds;
    ds.features = Matrix(n, d);
    std::vector<unsigned char> pixels(d);
    for (std::size_t i = 0; i < n; ++i) {
        if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(d)))
            throw ParseError("truncated IDX image data", i + 1);
        auto dst = ds.features.row(i);
        for (std::size_t j = 0; j < d; ++j) dst[j] = pixels[j] / 255.0;
    }
    std::vector<unsigned char> raw(n);
    if (!lab.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n)))
        throw ParseError("truncated IDX label data");
    int max_label = 0;
    for (unsigned char v : raw) {
        ds.labels.push_back(v);
        max_label = std::max(max_label, int{v});
    }
    ds.k = static_cast<std::size_t>(max_label) + 1;
    for (std::size_t c = 0; c < ds.k; ++c) ds.label_names.push_back(std::to_string(c));
    for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("px" + std::to_string(j));
    return ds;
}

Dataset make_blobs(std::size_t n_per_class, std::size_t k, std::size_t d, double spread, std::uint64_t seed,
                   std::uint64_t sample_seed) {
    if (n_per_class == 0 || k == 0 || d == 0) throw ValidationError("make_blobs: sizes must be positive");
    if (!(spread > 0.0) || !std::isfinite(spread)) throw ValidationError("make_blobs: spread must be positive");

    Rng centre_rng(derive_seed(seed, 0xb10b));
    Matrix centres(k, d);
    for (double& c : centres.flat()) c = centre_rng.uniform(-1.0, 1.0);

    Rng rng(derive_seed(sample_seed, 0x5a3f));
    Dataset ds;
    ds.k = k;
    ds.features = Matrix(n_per_class * k, d);
    ds.labels.resize(n_per_class * k);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::size_t c = i % k;
        ds.labels[i] = static_cast<int>(c);
        auto row = ds.features.row(i);
        for (std::size_t j = 0; j < d; ++j) row[j] = centres(c, j) + spread * rng.normal();
    }
    for (std::size_t c = 0; c < k; ++c) ds.label_names.push_back(std::to_string(c));
    for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));
    return ds;
}

Dataset make_blobs(std::size_t n_per_class, std::size_t k, std::size_t d, double spread, std::uint64_t seed) {
    return make_blobs(n_per_class, k, d, spread, seed, seed);
}

FoldSplit fold_split(std::size_t n_samples, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ValidationError("fold_split: fold count must be positive");
    if (n > n_samples)
        throw ValidationError("fold_split: " + std::to_string(n) + " folds requested for " + std::to_string(n_samples) +
                              " samples");
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0xf01d));
    rng.shuffle(std::span<std::size_t>(order));

    FoldSplit split;
    split.folds.resize(n);
    const std::size_t base = n_samples / n;
    const std::size_t extra = n_samples % n;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < n; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        split.folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                              order.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return split;
}

FoldSplit fold_split(const Dataset& ds, std::size_t n, std::uint64_t seed) { return fold_split(ds.size(), n, seed); }

void fit_normalization(Dataset& ds) {
    const std::size_t n = ds.size();
    const std::size_t d = ds.dims();
    if (n == 0) throw ValidationError("fit_normalization: empty dataset");
    ds.feature_means.assign(d, 0.0);
    ds.feature_stds.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) ds.feature_means[j] += ds.features(i, j);
    for (double& m : ds.feature_means) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double dv = ds.features(i, j) - ds.feature_means[j];
            ds.feature_stds[j] += dv * dv;
        }
    for (double& s : ds.feature_stds) s = std::sqrt(s / static_cast<double>(n));
}

Dataset normalize(const Dataset& ds, std::span<const double> means, std::span<const double> stds) {
    if (means.size() != ds.dims() || stds.size() != ds.dims())
        throw ValidationError("normalize: statistics have " + std::to_string(means.size()) + " features, data has " +
                              std::to_string(ds.dims()));
    Dataset out = ds;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto row = out.features.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - means[j]) / std::max(stds[j], kStdFloor);
    }
    out.feature_means.assign(means.begin(), means.end());
    out.feature_stds.assign(stds.begin(), stds.end());
    return out;
}

Dataset normalize(const Dataset& ds, const Dataset& stats_from) {
    if (stats_from.feature_means.empty()) throw ValidationError("normalize: statistics were never fitted");
    return normalize(ds, stats_from.feature_means, stats_from.feature_stds);
}

std::vector<double> one_hot(int label, std::size_t k) {
    if (label < 0 || static_cast<std::size_t>(label) >= k)
        throw ValidationError("one_hot: label " + std::to_string(label) + " outside [0, " + std::to_string(k) + ")");
    std::vector<double> v(k, 0.0);
    v[static_cast<std::size_t>(label)] = 1.0;
    return v;
}

}  // namespace edde::data
