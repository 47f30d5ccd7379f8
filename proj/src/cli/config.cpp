#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "edde/cli.hpp"
#include "edde/error.hpp"

namespace edde::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
        throw ValidationError("config: '" + key + "' expects a number, got '" + v + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& v) {
    // from_chars for double is missing from older libstdc++.
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != v.size() || v.empty() || !std::isfinite(out))
        throw ValidationError("config: '" + key + "' expects a real number, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

nn::Exec parse_exec(const std::string& key, const std::string& v) {
    if (v == "auto") return nn::Exec::automatic;
    if (v == "serial") return nn::Exec::serial;
    if (v == "parallel") return nn::Exec::parallel;
    throw ValidationError("config: '" + key + "' must be auto, serial or parallel");
}

std::string to_string(nn::Exec e) {
    switch (e) {
        case nn::Exec::serial: return "serial";
        case nn::Exec::parallel: return "parallel";
        default: return "auto";
    }
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto u = [](auto field) {
            return [field](RunConfig& c, const std::string& k, const std::string& v) {
                c.*field = parse_number<std::remove_reference_t<decltype(c.*field)>>(k, v);
            };
        };
        auto d = [](auto member, auto field) {
            return [member, field](RunConfig& c, const std::string& k, const std::string& v) {
                (c.*member).*field = parse_number<std::remove_reference_t<decltype((c.*member).*field)>>(k, v);
            };
        };
        auto path = [](auto field) {
            return [field](RunConfig& c, const std::string&, const std::string& v) { c.data.*field = v; };
        };

        t["data.source"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            if (v != "blobs" && v != "csv" && v != "idx")
                throw ValidationError("config: '" + k + "' must be blobs, csv or idx");
            c.data.source = v;
        };
        t["data.train"] = path(&DataSpec::train);
        t["data.test"] = path(&DataSpec::test);
        t["data.train_labels"] = path(&DataSpec::train_labels);
        t["data.test_labels"] = path(&DataSpec::test_labels);
        t["data.label_column"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.data.label_column = v;
        };
        t["data.limit"] = d(&RunConfig::data, &DataSpec::limit);
        t["data.test_limit"] = d(&RunConfig::data, &DataSpec::test_limit);
        t["data.n_per_class"] = d(&RunConfig::data, &DataSpec::n_per_class);
        t["data.test_per_class"] = d(&RunConfig::data, &DataSpec::test_per_class);
        t["data.k"] = d(&RunConfig::data, &DataSpec::k);
        t["data.d"] = d(&RunConfig::data, &DataSpec::d);
        t["data.spread"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.data.spread = parse_real(k, v);
        };
        t["data.seed"] = d(&RunConfig::data, &DataSpec::seed);
        t["data.normalize"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.data.normalize = parse_bool(k, v);
        };

        t["model.hidden"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.hidden.clear();
            for (const auto& item : split_list(v)) c.hidden.push_back(parse_number<std::size_t>(k, item));
        };
        t["model.activation"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.activation = nn::parse_activation(v);
        };

        t["train.method"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            const auto& m = known_methods();
            if (std::find(m.begin(), m.end(), v) == m.end())
                throw ValidationError("config: '" + k + "': unknown method '" + v + "'");
            c.method = v;
        };
        t["train.T"] = u(&RunConfig::T);
        t["train.gamma"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.gamma = parse_real(k, v); };
        t["train.beta"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            if (v == "auto")
                c.beta.reset();
            else
                c.beta = parse_real(k, v);
        };
        t["train.epochs_first"] = u(&RunConfig::epochs_first);
        t["train.epochs_rest"] = u(&RunConfig::epochs_rest);
        t["train.epochs_per_model"] = u(&RunConfig::epochs_per_model);
        t["train.lr"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.lr = parse_real(k, v); };
        t["train.schedule"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.schedule = nn::parse_schedule(v);
        };
        t["train.batch_size"] = u(&RunConfig::batch_size);
        t["train.seed"] = u(&RunConfig::seed);
        t["train.lambda_nc"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.lambda_nc = parse_real(k, v);
        };
        t["train.bans_label_mix"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.bans_label_mix = parse_real(k, v);
        };
        t["train.reuse_search_teacher"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.reuse_search_teacher = parse_bool(k, v);
        };
        t["train.exec"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.exec = parse_exec(k, v); };

        t["search.n_folds"] = d(&RunConfig::search, &transfer::BetaSearchConfig::n_folds);
        t["search.probe_epochs"] = d(&RunConfig::search, &transfer::BetaSearchConfig::probe_epochs);
        t["search.teacher_epochs"] = d(&RunConfig::search, &transfer::BetaSearchConfig::teacher_epochs);
        t["search.student_epochs"] = d(&RunConfig::search, &transfer::BetaSearchConfig::student_epochs);
        t["search.beta_step"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.search.beta_step = parse_real(k, v);
        };
        t["search.gap_tolerance"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.search.gap_tolerance = parse_real(k, v);
        };

        t["compare.methods"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.compare_methods = split_list(v);
            const auto& m = known_methods();
            for (const auto& name : c.compare_methods)
                if (std::find(m.begin(), m.end(), name) == m.end())
                    throw ValidationError("config: '" + k + "': unknown method '" + name + "'");
        };
        t["compare.budget"] = u(&RunConfig::budget);

        t["output.dir"] = [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; };
        return t;
    }();
    return table;
}

void apply(RunConfig& cfg, const std::string& key, const std::string& value, const std::string& where) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ValidationError("config: unknown key '" + key + "'" + where);
    try {
        it->second(cfg, key, value);
    } catch (const ValidationError& e) {
        throw ValidationError(std::string(e.what()) + where);
    }
}

}  // namespace

const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> m{"single",   "bagging", "adaboost_m1",      "adaboost_nc",
                                            "snapshot", "bans",    "edde",             "edde_normal_loss",
                                            "edde_transfer_all",   "edde_transfer_none"};
    return m;
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto cut = line.find_first_of("#;");
        const std::string s = trim(cut == std::string::npos ? line : line.substr(0, cut));
        const std::string where = " (line " + std::to_string(lineno) + ")";
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ValidationError("config: malformed section header" + where);
            section = trim(s.substr(1, s.size() - 2));
            static const std::vector<std::string> sections{"data", "model", "train", "search", "compare", "output"};
            if (std::find(sections.begin(), sections.end(), section) == sections.end())
                throw ValidationError("config: unknown section '" + section + "'" + where);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ValidationError("config: expected key = value" + where);
        if (section.empty()) throw ValidationError("config: key outside any section" + where);
        apply(cfg, section + "." + trim(s.substr(0, eq)), trim(s.substr(eq + 1)), where);
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ValidationError("override '" + o + "' is not section.key=value");
        apply(cfg, trim(o.substr(0, eq)), trim(o.substr(eq + 1)), " (override '" + o + "')");
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

void RunConfig::validate() const {
    if (data.source == "blobs") {
        if (data.n_per_class == 0 || data.k < 2 || data.d == 0 || !(data.spread > 0.0))
            throw ValidationError("config: blobs need n_per_class > 0, k >= 2, d > 0 and spread > 0");
    } else {
        if (data.train.empty()) throw ValidationError("config: data.train is required for source " + data.source);
        if (data.source == "idx" && data.train_labels.empty())
            throw ValidationError("config: data.train_labels is required for idx data");
        if (data.source == "idx" && !data.test.empty() && data.test_labels.empty())
            throw ValidationError("config: data.test_labels is required with an idx test set");
    }
    for (std::size_t h : hidden)
        if (h == 0) throw ValidationError("config: hidden layer widths must be positive");
    if (!(lr > 0.0)) throw ValidationError("config: lr must be positive");
    if (budget < 1) throw ValidationError("config: compare.budget must be positive");
    if (compare_methods.empty()) throw ValidationError("config: compare.methods is empty");
    // The trainer configs carry the remaining checks; build them against a
    // placeholder architecture.
    const nn::Architecture arch = architecture(1, 2);
    edde_config(arch).validate();
    baseline_config(arch).validate();
}

nn::Architecture RunConfig::architecture(std::size_t inputs, std::size_t classes) const {
    nn::Architecture a;
    a.layer_sizes.push_back(inputs);
    a.layer_sizes.insert(a.layer_sizes.end(), hidden.begin(), hidden.end());
    a.layer_sizes.push_back(classes);
    a.activation = activation;
    return a;
}

boost::EddeConfig RunConfig::edde_config(const nn::Architecture& arch) const {
    boost::EddeConfig e;
    e.T = T;
    e.gamma = gamma;
    e.beta = beta;
    e.epochs_first = epochs_first;
    e.epochs_rest = epochs_rest;
    e.schedule.kind = schedule;
    e.schedule.lr0 = lr;
    e.batch_size = batch_size;
    e.seed = seed;
    e.arch = arch;
    e.search = search;
    e.reuse_search_teacher = reuse_search_teacher;
    e.exec = exec;
    if (method == "edde_normal_loss") e.gamma = 0.0;
    if (method == "edde_transfer_all") e.beta = 1.0;
    if (method == "edde_transfer_none") e.beta = 0.0;
    return e;
}

baselines::BaselineConfig RunConfig::baseline_config(const nn::Architecture& arch) const {
    baselines::BaselineConfig b;
    if (method.rfind("edde", 0) != 0) b.method = baselines::parse_method(method);
    b.T = T;
    b.epochs_per_model = epochs_per_model;
    b.schedule.kind = schedule;
    b.schedule.lr0 = lr;
    b.batch_size = batch_size;
    b.lambda_nc = lambda_nc;
    b.bans_label_mix = bans_label_mix;
    b.seed = seed;
    b.arch = arch;
    b.exec = exec;
    return b;
}

nlohmann::ordered_json config_echo(const RunConfig& c) {
    nlohmann::ordered_json j;
    auto& d = j["data"];
    d["source"] = c.data.source;
    if (c.data.source == "blobs") {
        d["n_per_class"] = c.data.n_per_class;
        d["test_per_class"] = c.data.test_per_class;
        d["k"] = c.data.k;
        d["d"] = c.data.d;
        d["spread"] = c.data.spread;
        d["seed"] = c.data.seed;
    } else {
        d["train"] = c.data.train.string();
        d["test"] = c.data.test.string();
        if (c.data.source == "idx") {
            d["train_labels"] = c.data.train_labels.string();
            d["test_labels"] = c.data.test_labels.string();
            d["limit"] = c.data.limit;
            d["test_limit"] = c.data.test_limit;
        } else {
            d["label_column"] = c.data.label_column;
        }
    }
    d["normalize"] = c.data.normalize;

    j["model"] = {{"hidden", c.hidden}, {"activation", nn::to_string(c.activation)}};

    const boost::EddeConfig e = c.edde_config(c.architecture(1, 2));
    auto& t = j["train"];
    t["method"] = c.method;
    t["T"] = c.T;
    t["gamma"] = e.gamma;
    if (e.beta)
        t["beta"] = *e.beta;
    else
        t["beta"] = "auto";
    t["epochs_first"] = c.epochs_first;
    t["epochs_rest"] = c.epochs_rest;
    t["epochs_per_model"] = c.epochs_per_model;
    t["lr"] = c.lr;
    t["schedule"] = nn::to_string(c.schedule);
    t["batch_size"] = c.batch_size;
    t["seed"] = c.seed;
    t["lambda_nc"] = c.lambda_nc;
    t["bans_label_mix"] = c.bans_label_mix;
    t["reuse_search_teacher"] = c.reuse_search_teacher;
    t["exec"] = to_string(c.exec);

    j["search"] = {{"n_folds", c.search.n_folds},
                   {"probe_epochs", c.search.probe_epochs},
                   {"beta_step", c.search.beta_step},
                   {"gap_tolerance", c.search.gap_tolerance},
                   {"teacher_epochs", c.search.teacher_epochs},
                   {"student_epochs", c.search.student_epochs}};
    j["compare"] = {{"methods", c.compare_methods}, {"budget", c.budget}};
    return j;
}

}  // namespace edde::cli
