#include <iostream>

#include <CLI11.hpp>

#include "edde/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Diversity-driven boosted neural network ensembles"};
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> overrides;
    std::string ensemble_dir;
    edde::cli::EvalData input;
    std::string data_path, labels_path, out_dir;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("config", config, "Run configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--set", overrides, "Override a key: section.key=value (repeatable)");
    };
    auto add_eval = [&](CLI::App* sub) {
        sub->add_option("ensemble", ensemble_dir, "Ensemble directory")->required();
        sub->add_option("data", data_path, "CSV file (or IDX images with --idx-labels)")->required();
        sub->add_option("--label-column", input.label_column, "Label column of the CSV")->capture_default_str();
        sub->add_option("--idx-labels", labels_path, "IDX label file; treats DATA as IDX images");
        sub->add_option("--out", out_dir, "Output directory (default: the ensemble directory)");
    };

    auto* train = app.add_subcommand("train", "Train an ensemble and write report.json / metrics.csv");
    add_config(train);
    auto* search = app.add_subcommand("beta-search", "Search the transfer proportion and write beta_trace.csv");
    add_config(search);
    auto* evaluate = app.add_subcommand("evaluate", "Accuracy of a saved ensemble on a dataset");
    add_eval(evaluate);
    auto* diversity = app.add_subcommand("diversity", "Pairwise similarity and div_h of a saved ensemble");
    add_eval(diversity);
    auto* compare = app.add_subcommand("compare", "Run several methods under one epoch budget");
    add_config(compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : edde::cli::kInputError;
    }

    input.data = data_path;
    input.idx_labels = labels_path;
    input.out_dir = out_dir;
    if (*train) return edde::cli::cmd_train(config, overrides, std::cout, std::cerr);
    if (*search) return edde::cli::cmd_beta_search(config, overrides, std::cout, std::cerr);
    if (*evaluate) return edde::cli::cmd_evaluate(ensemble_dir, input, std::cout, std::cerr);
    if (*diversity) return edde::cli::cmd_diversity(ensemble_dir, input, std::cout, std::cerr);
    return edde::cli::cmd_compare(config, overrides, std::cout, std::cerr);
}
