#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edde/baselines.hpp"
#include "edde/boosting.hpp"
#include "edde/data.hpp"
#include "edde/transfer.hpp"

namespace edde::cli {

enum ExitCode { kOk = 0, kPartialFailure = 1, kInputError = 2, kDivergence = 3 };

struct DataSpec {
    std::string source = "blobs";  // blobs | csv | idx
    std::filesystem::path train;
    std::filesystem::path test;
    std::filesystem::path train_labels;  // idx only
    std::filesystem::path test_labels;
    std::string label_column = "label";
    std::size_t limit = 0;
    std::size_t test_limit = 0;
    std::size_t n_per_class = 1000;
    std::size_t test_per_class = 333;
    std::size_t k = 3;
    std::size_t d = 2;
    double spread = 1.0;
    std::uint64_t seed = 7;
    bool normalize = true;
};

struct RunConfig {
    DataSpec data;

    std::vector<std::size_t> hidden{32, 32};
    nn::Activation activation = nn::Activation::relu;

    std::string method = "edde";
    int T = 5;
    double gamma = 0.1;
    std::optional<double> beta = 0.5;  // nullopt = auto
    int epochs_first = 20;
    int epochs_rest = 10;
    int epochs_per_model = 10;
    double lr = 0.1;
    nn::ScheduleKind schedule = nn::ScheduleKind::step;
    std::size_t batch_size = 64;
    std::uint64_t seed = 1;
    double lambda_nc = 2.0;
    double bans_label_mix = 0.0;
    bool reuse_search_teacher = true;
    nn::Exec exec = nn::Exec::automatic;

    transfer::BetaSearchConfig search;

    std::vector<std::string> compare_methods{"single", "bagging", "adaboost_m1", "snapshot", "edde"};
    int budget = 50;

    std::filesystem::path out_dir = "out";

    void validate() const;
    nn::Architecture architecture(std::size_t inputs, std::size_t classes) const;
    boost::EddeConfig edde_config(const nn::Architecture& arch) const;
    baselines::BaselineConfig baseline_config(const nn::Architecture& arch) const;
};

/// Every method name cmd_train accepts: the baselines, "edde" and the three
/// ablations edde_normal_loss (gamma 0), edde_transfer_all (beta 1) and
/// edde_transfer_none (beta 0).
const std::vector<std::string>& known_methods();

/// Sectioned key=value text; '#' and ';' start comments. Unknown sections or
/// keys are rejected. `overrides` are "section.key=value" strings applied
/// after the file.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Effective configuration as JSON, excluding the output directory.
nlohmann::ordered_json config_echo(const RunConfig& cfg);

struct LoadedData {
    data::Dataset train;  // normalized when cfg.data.normalize
    std::optional<data::Dataset> test;
    data::Dataset raw_train;
    std::optional<data::Dataset> raw_test;
};

LoadedData load_data(const DataSpec& spec);

struct Evaluation {
    metrics::DiversityReport report;
    std::optional<metrics::BiasVariance> bias_variance;
};

Evaluation evaluate(const boost::Ensemble& ens, const data::Dataset& ds, nn::Exec exec = nn::Exec::automatic);
void write_metrics_csv(const Evaluation& ev, const std::filesystem::path& path);

int cmd_train(const std::filesystem::path& config_path, const std::vector<std::string>& overrides, std::ostream& out,
              std::ostream& err);
int cmd_beta_search(const std::filesystem::path& config_path, const std::vector<std::string>& overrides,
                    std::ostream& out, std::ostream& err);
struct EvalData {
    std::filesystem::path data;
    std::filesystem::path idx_labels;  // set for IDX input
    std::string label_column = "label";
    std::filesystem::path out_dir;  // defaults to the ensemble directory
};
int cmd_evaluate(const std::filesystem::path& ensemble_dir, const EvalData& input, std::ostream& out,
                 std::ostream& err);
int cmd_diversity(const std::filesystem::path& ensemble_dir, const EvalData& input, std::ostream& out,
                  std::ostream& err);
int cmd_compare(const std::filesystem::path& config_path, const std::vector<std::string>& overrides, std::ostream& out,
                std::ostream& err);

}  // namespace edde::cli
