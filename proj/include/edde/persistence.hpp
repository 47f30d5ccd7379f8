#pragma once

#include <filesystem>

#include "edde/boosting.hpp"

namespace edde::io {

inline constexpr int kFormatVersion = 1;

/// Binary weights of one network: "EDDE", version byte, u32 layer count,
/// per-layer (rows, cols) u32 pairs, then f64 weights and biases layer by
/// layer. Everything little-endian.
void write_network(const nn::Network& net, const std::filesystem::path& path);
/// Reads parameters back; shapes must agree with `arch`.
nn::Parameters read_network(const std::filesystem::path& path, const nn::Architecture& arch);

/// manifest.json plus member_NN.bin per member. Overwrites existing files.
void save_ensemble(const boost::Ensemble& ens, const std::filesystem::path& dir);
/// Throws ParseError/ValidationError on a missing or corrupt directory.
boost::Ensemble load_ensemble(const std::filesystem::path& dir);

}  // namespace edde::io
