#include "edde/persistence.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "edde/error.hpp"

namespace edde::io {

namespace {

using json = nlohmann::ordered_json;

constexpr std::array<char, 4> kMagic{'E', 'D', 'D', 'E'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::ostream& out, T v) {
    std::array<unsigned char, sizeof(T)> b;
    std::memcpy(b.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    out.write(reinterpret_cast<const char*>(b.data()), b.size());
}

template <class T>
T get_le(std::istream& in, const std::filesystem::path& path) {
    std::array<unsigned char, sizeof(T)> b;
    if (!in.read(reinterpret_cast<char*>(b.data()), b.size()))
        throw ValidationError("'" + path.string() + "' is truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
}

std::string member_file(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "member_%02zu.bin", i + 1);
    return buf;
}

}  // namespace

void write_network(const nn::Network& net, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out.write(kMagic.data(), kMagic.size());
    out.put(static_cast<char>(kFormatVersion));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) {
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.weights.rows()));
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.weights.cols()));
    }
    for (const auto& l : net.layers) {
        for (double v : l.weights.flat()) put_le<double>(out, v);
        for (double v : l.bias) put_le<double>(out, v);
    }
    if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

nn::Parameters read_network(const std::filesystem::path& path, const nn::Architecture& arch) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw ValidationError("'" + path.string() + "' is not an EDDE weight file");
    const int version = in.get();
    if (version != kFormatVersion)
        throw ValidationError("'" + path.string() + "' has unsupported format version " + std::to_string(version));
    const auto n_layers = get_le<std::uint32_t>(in, path);
    if (n_layers != arch.weight_layers())
        throw ValidationError("'" + path.string() + "' has " + std::to_string(n_layers) + " layers, manifest says " +
                              std::to_string(arch.weight_layers()));
    nn::Parameters params(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto rows = get_le<std::uint32_t>(in, path);
        const auto cols = get_le<std::uint32_t>(in, path);
        if (rows != arch.layer_sizes[l] || cols != arch.layer_sizes[l + 1])
            throw ValidationError("'" + path.string() + "': layer " + std::to_string(l + 1) +
                                  " shape does not match the manifest architecture");
        params[l].weights = Matrix(rows, cols);
        params[l].bias.resize(cols);
    }
    for (auto& l : params) {
        for (double& v : l.weights.flat()) v = get_le<double>(in, path);
        for (double& v : l.bias) v = get_le<double>(in, path);
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw ValidationError("'" + path.string() + "' has trailing bytes");
    return params;
}

void save_ensemble(const boost::Ensemble& ens, const std::filesystem::path& dir) {
    if (ens.members.empty()) throw ValidationError("save_ensemble: empty ensemble");
    std::filesystem::create_directories(dir);
    const nn::Architecture& arch = ens.arch();

    json m;
    m["format_version"] = kFormatVersion;
    m["method"] = ens.method;
    m["architecture"] = {{"layer_sizes", arch.layer_sizes}, {"activation", nn::to_string(arch.activation)}};
    m["beta_unit"] = "fraction of weight layers";
    m["T"] = ens.members.size() + ens.skipped_rounds.size();
    m["gamma"] = ens.gamma;
    m["beta"] = ens.beta;
    m["seed"] = ens.seed;
    m["skipped_rounds"] = ens.skipped_rounds;
    json members = json::array();
    for (std::size_t i = 0; i < ens.members.size(); ++i) {
        const auto& mem = ens.members[i];
        if (!(mem.net.arch == arch)) throw ValidationError("save_ensemble: members differ in architecture");
        members.push_back(
            {{"file", member_file(i)}, {"alpha", mem.alpha}, {"round", mem.round}, {"init_seed", mem.net.seed}});
        write_network(mem.net, dir / member_file(i));
    }
    m["members"] = members;
    m["notes"] = ens.notes;
    m["label_names"] = ens.label_names;
    m["normalization"] = {{"means", ens.feature_means}, {"stds", ens.feature_stds}};

    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + (dir / "manifest.json").string() + "'");
    out << m.dump(2) << '\n';
}

boost::Ensemble load_ensemble(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw ValidationError("no ensemble at '" + dir.string() + "' (missing manifest.json)");
    json m;
    try {
        m = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("corrupt manifest '" + path.string() + "': " + e.what());
    }

    boost::Ensemble ens;
    try {
        if (m.at("format_version").get<int>() != kFormatVersion)
            throw ValidationError("unsupported ensemble format version in '" + path.string() + "'");
        nn::Architecture arch;
        arch.layer_sizes = m.at("architecture").at("layer_sizes").get<std::vector<std::size_t>>();
        arch.activation = nn::parse_activation(m.at("architecture").at("activation").get<std::string>());
        arch.validate();
        ens.method = m.at("method").get<std::string>();
        ens.gamma = m.at("gamma").get<double>();
        ens.beta = m.at("beta").get<double>();
        ens.seed = m.at("seed").get<std::uint64_t>();
        ens.skipped_rounds = m.at("skipped_rounds").get<std::vector<int>>();
        ens.notes = m.at("notes").get<std::vector<std::string>>();
        ens.label_names = m.at("label_names").get<std::vector<std::string>>();
        ens.feature_means = m.at("normalization").at("means").get<std::vector<double>>();
        ens.feature_stds = m.at("normalization").at("stds").get<std::vector<double>>();
        for (const auto& jm : m.at("members")) {
            boost::Member mem;
            mem.alpha = jm.at("alpha").get<double>();
            mem.round = jm.at("round").get<int>();
            mem.net.arch = arch;
            mem.net.seed = jm.at("init_seed").get<std::uint64_t>();
            const auto file = jm.at("file").get<std::string>();
            if (file.find('/') != std::string::npos || file.find('\\') != std::string::npos)
                throw ValidationError("member file '" + file + "' must be a plain file name");
            mem.net.layers = read_network(dir / file, arch);
            ens.members.push_back(std::move(mem));
        }
    } catch (const json::exception& e) {
        throw ValidationError("corrupt manifest '" + path.string() + "': " + e.what());
    }
    if (ens.members.empty()) throw ValidationError("manifest '" + path.string() + "' lists no members");
    if (!ens.feature_means.empty() && ens.feature_means.size() != ens.arch().inputs())
        throw ValidationError("manifest '" + path.string() + "': normalization length mismatch");
    return ens;
}

}  // namespace edde::io
