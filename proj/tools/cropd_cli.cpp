#include "cropd/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Experiment config (JSON)");
    cmd->add_option("--set", opts.sets, "Override as dotted.key=value (repeatable)");
}

cropd::ExperimentConfig load_config(const CommonOpts& opts) {
    cropd::ExperimentConfig cfg = opts.config_path.empty()
                                      ? cropd::ExperimentConfig::from_json(nlohmann::json::object())
                                      : cropd::ExperimentConfig::from_file(opts.config_path);
    for (const auto& s : opts.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) throw cropd::ConfigError("--set expects key=value, got '" + s + "'");
        cfg.apply_override(s.substr(0, eq), s.substr(eq + 1));
    }
    return cfg;
}

int run_verb(const std::string& stage, const CommonOpts& opts) {
    auto dirs = cropd::run_stages(load_config(opts), stage, &std::cerr);
    for (const auto& d : dirs) std::cout << d.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust pre-processing lab"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::vector<std::string> suite_configs;
    std::vector<std::string> record_files;
    std::string report_out = "report";
    int parallelism = 1;

    auto* gen_data = app.add_subcommand("gen-data", "Generate dataset splits");
    auto* pretrain = app.add_subcommand("pretrain", "Train and freeze the backbone");
    auto* train_preproc = app.add_subcommand("train-preproc", "Train the pre-processor");
    auto* train_head = app.add_subcommand("train-head", "Train the classification head");
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate clean and robust accuracy");
    auto* theory = app.add_subcommand("theory", "Run the bound and margin checks");
    auto* run = app.add_subcommand("run", "Full pipeline for one config");
    auto* report = app.add_subcommand("report", "Emit tables and plot CSVs from results.json files");
    auto* suite = app.add_subcommand("suite", "Run several configs");

    for (auto* c : {gen_data, pretrain, train_preproc, train_head, eval_cmd, theory, run}) add_common(c, opts);
    report->add_option("--records", record_files, "results.json files")->required();
    report->add_option("--out", report_out, "Report output directory");
    suite->add_option("--configs", suite_configs, "Config files")->required();
    suite->add_option("--parallelism", parallelism, "Worker processes");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_data->parsed()) return run_verb("data", opts);
        if (pretrain->parsed()) return run_verb("foundation", opts);
        if (train_preproc->parsed()) return run_verb("preproc", opts);
        if (train_head->parsed()) return run_verb("head", opts);
        if (eval_cmd->parsed()) return run_verb("eval", opts);
        if (theory->parsed()) return run_verb("theory", opts);
        if (run->parsed()) {
            auto record = cropd::run_experiment(load_config(opts), &std::cerr);
            std::cout << record.at("config_hash").get<std::string>() << "\n";
            return 0;
        }
        if (report->parsed()) {
            std::vector<nlohmann::json> records;
            for (const auto& f : record_files) {
                std::ifstream in(f);
                if (!in) throw cropd::ConfigError("cannot open record file " + f);
                nlohmann::json j;
                in >> j;
                records.push_back(std::move(j));
            }
            cropd::emit_report(records, report_out);
            std::cout << report_out << "\n";
            return 0;
        }
        if (suite->parsed()) {
            std::vector<std::filesystem::path> paths(suite_configs.begin(), suite_configs.end());
            auto records = cropd::run_suite(paths, parallelism);
            int failures = 0;
            for (size_t i = 0; i < records.size(); ++i) {
                if (records[i].contains("error")) {
                    ++failures;
                    std::cout << paths[i].string() << "\tERROR\t" << records[i].at("error").get<std::string>() << "\n";
                } else {
                    std::cout << paths[i].string() << "\tOK\t" << records[i].at("config_hash").get<std::string>()
                              << "\n";
                }
            }
            return failures == static_cast<int>(records.size()) && !records.empty() ? 3 : 0;
        }
    } catch (const cropd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const cropd::StageError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
