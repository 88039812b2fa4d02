#include "cropd/runner.hpp"
#include "cropd/sha256.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace cropd {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> mlp_param_names(const Mlp& m) {
    std::vector<std::string> names;
    for (size_t i = 0; i < m.weights_.size(); ++i) names.push_back("w" + std::to_string(i));
    for (size_t i = 0; i < m.biases_.size(); ++i) names.push_back("b" + std::to_string(i));
    return names;
}

void save_mlp(Mlp& m, const std::string& kind, const fs::path& dir) {
    std::vector<int64_t> widths = {m.in_dim()};
    for (const auto& w : m.weights_) widths.push_back(w.cols());
    json arch = {{"kind", kind},
                 {"widths", widths},
                 {"activation", m.act_ == Activation::Relu ? "relu" : "gelu"}};
    save_params(m.params(), mlp_param_names(m), dir, arch.dump());
}

Mlp load_mlp(const fs::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw std::runtime_error("load_mlp: missing manifest in " + dir.string());
    json manifest;
    mf >> manifest;
    Mlp m(manifest.at("widths").get<std::vector<int64_t>>(),
          manifest.at("activation").get<std::string>() == "gelu" ? Activation::Gelu : Activation::Relu, 0);
    load_params(m.params(), mlp_param_names(m), dir);
    return m;
}

fs::path stage_dir(const ExperimentConfig& cfg, const std::string& stage) {
    return cfg.output_dir() / "cache" / (stage + "-" + cfg.stage_hash(stage).substr(0, 16));
}

// Runs fn into a temp dir, then atomically renames it to the cache slot.
// Returns the cache dir; logs "cached" when the slot already exists.
template <typename Fn>
fs::path run_stage(const ExperimentConfig& cfg, const std::string& stage, std::ostream* log, Fn&& fn) {
    fs::path final_dir = stage_dir(cfg, stage);
    if (fs::exists(final_dir / "done")) {
        if (log) *log << "[stage " << stage << "] cached (" << final_dir.filename().string() << ")\n";
        return final_dir;
    }
    fs::path tmp = final_dir;
    tmp += ".tmp-" + std::to_string(::getpid());
    try {
        fs::create_directories(tmp);
        fn(tmp);
        std::ofstream(tmp / "done") << "ok\n";
        std::error_code ec;
        fs::rename(tmp, final_dir, ec);
        if (ec) {
            if (fs::exists(final_dir / "done")) {
                fs::remove_all(tmp);  // another worker won the race
            } else {
                throw std::runtime_error("cannot publish stage output: " + ec.message());
            }
        }
    } catch (const StageError&) {
        fs::remove_all(tmp);
        throw;
    } catch (const std::exception& e) {
        fs::remove_all(tmp);
        throw StageError(stage, e.what());
    }
    if (log) *log << "[stage " << stage << "] computed (" << final_dir.filename().string() << ")\n";
    return final_dir;
}

fs::path stage_data(const ExperimentConfig& cfg, std::ostream* log) {
    return run_stage(cfg, "data", log, [&](const fs::path& dir) {
        const json& d = cfg.tree().at("dataset");
        int64_t n_train = d.at("n_train").get<int64_t>();
        int64_t n_test = d.at("n_test").get<int64_t>();
        int64_t n_pre = d.at("n_pretrain").get<int64_t>();
        uint64_t dseed = d.at("seed").get<uint64_t>();
        LabeledDataset train, test, pretrain;
        if (d.at("kind").get<std::string>() == "gaussian") {
            // one draw shared across splits so they come from identical mixtures
            LabeledDataset all = make_synthetic_gaussian(n_train + n_test + n_pre, d.at("d").get<int64_t>(),
                                                         d.at("num_classes").get<int32_t>(),
                                                         d.at("separation").get<double>(), dseed);
            std::vector<int64_t> idx(static_cast<size_t>(n_train));
            std::iota(idx.begin(), idx.end(), 0);
            train = all.subset(idx);
            idx.resize(static_cast<size_t>(n_test));
            std::iota(idx.begin(), idx.end(), n_train);
            test = all.subset(idx);
            idx.resize(static_cast<size_t>(n_pre));
            std::iota(idx.begin(), idx.end(), n_train + n_test);
            pretrain = all.subset(idx);
        } else {
            double eps = parse_rational(d.at("discrete_epsilon"));
            train = make_separated_discrete(n_train, d.at("d").get<int64_t>(), eps, dseed);
            test = train;  // the discrete setting evaluates on the support itself
            pretrain = train;
        }
        train.name = test.name = pretrain.name = d.at("name").get<std::string>();
        train.split = pretrain.split = "train";
        test.split = "test";
        save_tensor_dataset(train, dir / "train");
        save_tensor_dataset(test, dir / "test");
        save_tensor_dataset(pretrain, dir / "pretrain");
    });
}

fs::path stage_foundation(const ExperimentConfig& cfg, const fs::path& data_dir, std::ostream* log) {
    return run_stage(cfg, "foundation", log, [&](const fs::path& dir) {
        LabeledDataset pretrain = load_tensor_dataset(data_dir / "pretrain");
        Foundation f = pretrain_foundation(cfg.foundation_widths(), pretrain, cfg.train_config("foundation"));
        Mlp backbone = f.backbone();
        save_mlp(backbone, "foundation", dir / "model");
    });
}

fs::path stage_preproc(const ExperimentConfig& cfg, const fs::path& data_dir, std::ostream* log) {
    return run_stage(cfg, "preproc", log, [&](const fs::path& dir) {
        LabeledDataset train = load_tensor_dataset(data_dir / "train");
        TrainConfig tc = cfg.train_config("autoencoder");
        double weight = cfg.variant() == PipelineVariant::ARAE ? cfg.gamma() : cfg.lambda();
        auto [ae, history] = train_preprocessor(cfg.autoencoder_spec(), train, cfg.variant(), weight,
                                                cfg.train_attack(), tc, cfg.tau(), cfg.augmentation());
        save_autoencoder(ae, tc.seed, dir / "model");
        history.to_csv(dir / "history.csv");
    });
}

Pipeline load_pipeline_parts(const ExperimentConfig& cfg, const fs::path& foundation_dir,
                             const std::optional<fs::path>& preproc_dir, const std::optional<fs::path>& head_dir) {
    Pipeline pipe;
    pipe.variant = cfg.variant();
    pipe.foundation = Foundation(load_mlp(foundation_dir / "model"));
    if (preproc_dir) pipe.autoencoder = load_autoencoder(*preproc_dir / "model");
    int32_t k = cfg.tree().at("dataset").at("num_classes").get<int32_t>();
    pipe.head = LinearHead(pipe.foundation.out_dim(), k, cfg.train_config("head").seed);
    if (head_dir) load_params(pipe.head.params(), mlp_param_names(pipe.head.layer_), *head_dir / "model");
    pipe.validate();
    return pipe;
}

fs::path stage_head(const ExperimentConfig& cfg, const fs::path& data_dir, const fs::path& foundation_dir,
                    const std::optional<fs::path>& preproc_dir, std::ostream* log) {
    return run_stage(cfg, "head", log, [&](const fs::path& dir) {
        LabeledDataset train = load_tensor_dataset(data_dir / "train");
        Pipeline pipe = load_pipeline_parts(cfg, foundation_dir, preproc_dir, std::nullopt);
        TrainHistory history = train_head(pipe, train, cfg.head_mode(), cfg.robust_head_attack_cfg(),
                                          cfg.train_config("head"));
        save_mlp(pipe.head.layer_, "head", dir / "model");
        history.to_csv(dir / "history.csv");
    });
}

fs::path stage_eval(const ExperimentConfig& cfg, const fs::path& data_dir, const fs::path& foundation_dir,
                    const std::optional<fs::path>& preproc_dir, const fs::path& head_dir, std::ostream* log) {
    return run_stage(cfg, "eval", log, [&](const fs::path& dir) {
        LabeledDataset test = load_tensor_dataset(data_dir / "test");
        Pipeline pipe = load_pipeline_parts(cfg, foundation_dir, preproc_dir, head_dir);
        const json& b = cfg.tree().at("bootstrap");
        EvalResult res = evaluate(pipe, test, cfg.eval_attacks(), b.at("repeats").get<int64_t>(),
                                  b.at("seed").get<uint64_t>());
        std::ofstream(dir / "eval.json") << eval_result_to_json(res).dump(2) << "\n";
    });
}

fs::path stage_theory(const ExperimentConfig& cfg, const fs::path& data_dir, const fs::path& foundation_dir,
                      const std::optional<fs::path>& preproc_dir, const fs::path& head_dir, std::ostream* log) {
    return run_stage(cfg, "theory", log, [&](const fs::path& dir) {
        LabeledDataset test = load_tensor_dataset(data_dir / "test");
        Pipeline pipe = load_pipeline_parts(cfg, foundation_dir, preproc_dir, head_dir);
        const json& t = cfg.tree().at("theory");
        ThreatModel tm = cfg.eval_attack("pgd10");
        json out;
        if (pipe.autoencoder) {
            EtaReport eta = estimate_eta(*pipe.autoencoder, test, tm, cfg.tau(),
                                         t.at("eta_exhaustive_limit").get<int64_t>(), cfg.seed());
            out["eta"] = eta_report_to_json(eta);
        }
        BoundReport bound = check_theorem_bound(pipe, test, tm, std::nullopt, cfg.tau(), cfg.seed(),
                                                t.at("lipschitz_pairs").get<int64_t>());
        out["bound"] = bound_report_to_json(bound);
        const json& w = t.at("witness");
        if (w.at("enabled").get<bool>()) {
            int64_t n = w.at("n").get<int64_t>();
            WitnessReport wit = proposition1_witness(n, w.at("d").get<int64_t>(),
                                                     1.0 / std::sqrt(static_cast<double>(n)),
                                                     w.at("delta").get<double>());
            out["witness"] = witness_report_to_json(wit);
        }
        std::ofstream(dir / "theory.json") << out.dump(2) << "\n";
    });
}

json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("missing file " + p.string());
    json j;
    in >> j;
    return j;
}

struct SeedRun {
    uint64_t seed;
    json eval;
    json theory;
    json stage_hashes;
    json history_files;
};

SeedRun run_one_seed(const ExperimentConfig& base, uint64_t seed, std::ostream* log) {
    ExperimentConfig cfg = base.with_seed(seed);
    if (log) *log << "-- seed " << seed << "\n";
    fs::path data = stage_data(cfg, log);
    fs::path foundation = stage_foundation(cfg, data, log);
    std::optional<fs::path> preproc;
    if (cfg.variant() != PipelineVariant::Identity) preproc = stage_preproc(cfg, data, log);
    fs::path head = stage_head(cfg, data, foundation, preproc, log);
    fs::path eval = stage_eval(cfg, data, foundation, preproc, head, log);
    SeedRun run;
    run.seed = seed;
    run.eval = read_json_file(eval / "eval.json");
    run.stage_hashes = {{"data", cfg.stage_hash("data")},
                        {"foundation", cfg.stage_hash("foundation")},
                        {"head", cfg.stage_hash("head")},
                        {"eval", cfg.stage_hash("eval")}};
    run.history_files = json::object();
    run.history_files["head"] = (head / "history.csv").string();
    if (preproc) {
        run.stage_hashes["preproc"] = cfg.stage_hash("preproc");
        run.history_files["preproc"] = (*preproc / "history.csv").string();
    }
    if (cfg.tree().at("theory").at("enabled").get<bool>()) {
        fs::path theory = stage_theory(cfg, data, foundation, preproc, head, log);
        run.theory = read_json_file(theory / "theory.json");
        run.stage_hashes["theory"] = cfg.stage_hash("theory");
    }
    return run;
}

}  // namespace

std::vector<fs::path> run_stages(const ExperimentConfig& base, const std::string& stage, std::ostream* log) {
    std::vector<fs::path> out;
    for (uint64_t s : base.seeds()) {
        ExperimentConfig cfg = base.with_seed(s);
        fs::path data = stage_data(cfg, log);
        if (stage == "data") {
            out.push_back(data);
            continue;
        }
        if (stage == "preproc") {
            if (cfg.variant() == PipelineVariant::Identity)
                throw StageError("preproc", "Identity variant has no pre-processor");
            out.push_back(stage_preproc(cfg, data, log));
            continue;
        }
        fs::path foundation = stage_foundation(cfg, data, log);
        if (stage == "foundation") {
            out.push_back(foundation);
            continue;
        }
        std::optional<fs::path> preproc;
        if (cfg.variant() != PipelineVariant::Identity) preproc = stage_preproc(cfg, data, log);
        fs::path head = stage_head(cfg, data, foundation, preproc, log);
        if (stage == "head") {
            out.push_back(head);
            continue;
        }
        if (stage == "eval") {
            out.push_back(stage_eval(cfg, data, foundation, preproc, head, log));
            continue;
        }
        if (stage == "theory") {
            out.push_back(stage_theory(cfg, data, foundation, preproc, head, log));
            continue;
        }
        throw std::invalid_argument("run_stages: unknown stage " + stage);
    }
    return out;
}

ExperimentArtifacts build_pipeline(const ExperimentConfig& base, std::ostream* log) {
    ExperimentConfig cfg = base.with_seed(base.seeds().front());
    fs::path data = stage_data(cfg, log);
    fs::path foundation = stage_foundation(cfg, data, log);
    std::optional<fs::path> preproc;
    if (cfg.variant() != PipelineVariant::Identity) preproc = stage_preproc(cfg, data, log);
    fs::path head = stage_head(cfg, data, foundation, preproc, log);
    ExperimentArtifacts art;
    art.train = load_tensor_dataset(data / "train");
    art.test = load_tensor_dataset(data / "test");
    art.pretrain = load_tensor_dataset(data / "pretrain");
    art.pipeline = load_pipeline_parts(cfg, foundation, preproc, head);
    return art;
}

json run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
    auto t0 = std::chrono::steady_clock::now();
    std::string chash = cfg.hash();
    if (log) *log << "config " << chash << "\n";

    std::vector<SeedRun> runs;
    for (uint64_t s : cfg.seeds()) runs.push_back(run_one_seed(cfg, s, log));

    json record;
    record["tool_version"] = kToolVersion;
    record["config_hash"] = chash;
    record["config"] = cfg.tree();
    record["runs"] = json::array();
    json theory_report = json::array();
    for (const auto& r : runs) {
        json jr = {{"seed", r.seed},
                   {"eval", r.eval},
                   {"stage_hashes", r.stage_hashes},
                   {"history_files", r.history_files}};
        if (!r.theory.is_null()) {
            jr["theory"] = r.theory;
            json t = r.theory;
            t["seed"] = r.seed;
            theory_report.push_back(t);
        }
        record["runs"].push_back(jr);
    }
    record["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::path out = cfg.output_dir() / chash;
    fs::create_directories(out);
    std::ofstream(out / "results.json") << record.dump(2) << "\n";

    std::ofstream csv(out / "results.csv");
    csv << "variant,lambda,attack,acc,ci_lo,ci_hi,seed\n";
    std::string vname = variant_name(cfg.variant());
    for (const auto& r : runs) {
        auto row = [&](const std::string& attack, const json& ci) {
            csv << vname << "," << cfg.lambda() << "," << attack << "," << ci.at("mean").get<double>() << ","
                << ci.at("lo").get<double>() << "," << ci.at("hi").get<double>() << "," << r.seed << "\n";
        };
        for (auto it = r.eval.at("ci").begin(); it != r.eval.at("ci").end(); ++it) row(it.key(), it.value());
    }
    csv.close();
    if (!theory_report.empty()) std::ofstream(out / "theory_report.json") << theory_report.dump(2) << "\n";
    if (log) *log << "wrote " << (out / "results.json").string() << "\n";
    return record;
}

std::vector<json> run_suite(const std::vector<fs::path>& configs, int parallelism) {
    if (parallelism < 1) throw std::invalid_argument("run_suite: parallelism must be >= 1");
    std::vector<json> results(configs.size());

    auto run_to_json = [](const fs::path& path) -> json {
        try {
            return run_experiment(ExperimentConfig::from_file(path), &std::cerr);
        } catch (const std::exception& e) {
            return json{{"config_path", path.string()}, {"error", e.what()}};
        }
    };

    if (parallelism == 1) {
        for (size_t i = 0; i < configs.size(); ++i) results[i] = run_to_json(configs[i]);
        return results;
    }

    // isolated worker processes; the shared filesystem cache uses atomic
    // rename-on-complete, so concurrent identical stages are safe
    fs::path scratch = fs::temp_directory_path() / ("suite-" + std::to_string(::getpid()));
    fs::create_directories(scratch);
    size_t next = 0;
    std::vector<std::pair<pid_t, size_t>> active;
    auto reap = [&](bool block) {
        while (!active.empty()) {
            int status = 0;
            pid_t pid = ::waitpid(-1, &status, block ? 0 : WNOHANG);
            if (pid <= 0) break;
            for (auto it = active.begin(); it != active.end(); ++it) {
                if (it->first != pid) continue;
                size_t idx = it->second;
                fs::path f = scratch / (std::to_string(idx) + ".json");
                if (fs::exists(f)) {
                    results[idx] = read_json_file(f);
                } else {
                    results[idx] = json{{"config_path", configs[idx].string()}, {"error", "worker process died"}};
                }
                active.erase(it);
                break;
            }
            if (!block) continue;
            break;
        }
    };
    while (next < configs.size() || !active.empty()) {
        while (next < configs.size() && active.size() < static_cast<size_t>(parallelism)) {
            size_t idx = next++;
            pid_t pid = ::fork();
            if (pid == 0) {
                json r = run_to_json(configs[idx]);
                std::ofstream(scratch / (std::to_string(idx) + ".json")) << r.dump() << "\n";
                ::_exit(0);
            }
            if (pid < 0) {
                results[idx] = json{{"config_path", configs[idx].string()}, {"error", "fork failed"}};
                continue;
            }
            active.emplace_back(pid, idx);
        }
        if (!active.empty()) reap(true);
    }
    fs::remove_all(scratch);
    return results;
}

namespace {

std::string fmt_cell(double mean, double half) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f ± %.4f", mean, half);
    return buf;
}

}  // namespace

void emit_report(const std::vector<json>& records, const fs::path& out_dir) {
    if (records.empty()) throw std::invalid_argument("emit_report: no records");
    fs::create_directories(out_dir);

    struct Row {
        std::string variant, head_mode;
        double lambda;
        // attack -> (mean, ci half-width), averaged over seeds
        std::map<std::string, std::pair<double, double>> cells;
        std::vector<std::array<double, 2>> bound_sides;  // lhs, rhs per seed
    };
    std::vector<Row> rows;
    std::vector<std::string> attack_order = {"clean"};
    json bound_csv = json::array();

    for (const auto& rec : records) {
        if (rec.contains("error")) continue;
        Row row;
        row.variant = rec.at("config").at("variant").get<std::string>();
        row.head_mode = rec.at("config").at("head_mode").get<std::string>();
        row.lambda = rec.at("config").at("lambda").get<double>();
        int64_t n = 0;
        for (const auto& run : rec.at("runs")) {
            const json& ci = run.at("eval").at("ci");
            for (auto it = ci.begin(); it != ci.end(); ++it) {
                double mean = it.value().at("mean").get<double>();
                double half = 0.5 * (it.value().at("hi").get<double>() - it.value().at("lo").get<double>());
                auto& cell = row.cells[it.key()];
                cell.first += mean;
                cell.second += half;
                if (std::find(attack_order.begin(), attack_order.end(), it.key()) == attack_order.end())
                    attack_order.push_back(it.key());
            }
            if (run.contains("theory")) {
                const json& b = run.at("theory").at("bound");
                double rhs = b.at("clean_ce").get<double>() + b.at("kappa_fitted").get<double>() * b.at("lcon").get<double>();
                bound_csv.push_back({{"variant", row.variant},
                                     {"lambda", row.lambda},
                                     {"seed", run.at("seed").get<uint64_t>()},
                                     {"lhs", b.at("lhs").get<double>()},
                                     {"rhs", rhs},
                                     {"kappa", b.at("kappa_fitted").get<double>()},
                                     {"holds", b.at("holds_at_kappa").get<bool>()}});
            }
            ++n;
        }
        for (auto& [k, v] : row.cells) {
            v.first /= static_cast<double>(n);
            v.second /= static_cast<double>(n);
        }
        rows.push_back(std::move(row));
    }

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return std::tie(a.variant, a.lambda, a.head_mode) < std::tie(b.variant, b.lambda, b.head_mode);
    });

    std::ofstream md(out_dir / "report.md");
    md << "# Accuracy summary\n\n";
    md << "| Variant | lambda | Head |";
    for (const auto& a : attack_order) md << " " << (a == "clean" ? std::string("Natural") : a) << " |";
    md << "\n|";
    for (size_t i = 0; i < attack_order.size() + 3; ++i) md << "---|";
    md << "\n";
    for (const auto& row : rows) {
        md << "| " << row.variant << " | " << row.lambda << " | " << row.head_mode << " |";
        for (const auto& a : attack_order) {
            auto it = row.cells.find(a);
            md << " " << (it == row.cells.end() ? std::string("-") : fmt_cell(it->second.first, it->second.second))
               << " |";
        }
        md << "\n";
    }
    md.close();

    // lambda vs accuracy trade-off, sorted by lambda
    std::vector<const Row*> sweep;
    for (const auto& r : rows) sweep.push_back(&r);
    std::sort(sweep.begin(), sweep.end(), [](const Row* a, const Row* b) { return a->lambda < b->lambda; });
    std::ofstream tr(out_dir / "lambda_tradeoff.csv");
    tr << "variant,lambda,clean_acc,robust_acc\n";
    for (const Row* r : sweep) {
        double clean = r->cells.count("clean") ? r->cells.at("clean").first : 0.0;
        double robust = 0.0;
        for (const auto& a : attack_order)
            if (a != "clean" && r->cells.count(a)) {
                robust = r->cells.at(a).first;
                break;
            }
        tr << r->variant << "," << r->lambda << "," << clean << "," << robust << "\n";
    }
    tr.close();

    std::ofstream bs(out_dir / "bound_sides.csv");
    bs << "variant,lambda,seed,lhs,rhs,kappa,holds\n";
    for (const auto& b : bound_csv)
        bs << b.at("variant").get<std::string>() << "," << b.at("lambda").get<double>() << ","
           << b.at("seed").get<uint64_t>() << "," << b.at("lhs").get<double>() << "," << b.at("rhs").get<double>()
           << "," << b.at("kappa").get<double>() << "," << (b.at("holds").get<bool>() ? 1 : 0) << "\n";
}

json eval_result_to_json(const EvalResult& res) {
    json j;
    j["clean_acc"] = res.clean_acc;
    j["robust_acc"] = res.robust_acc;
    json ci = json::object();
    for (const auto& [k, v] : res.ci) ci[k] = {{"mean", v.mean}, {"lo", v.lo}, {"hi", v.hi}};
    j["ci"] = ci;
    json psc = json::object();
    for (const auto& [k, v] : res.per_sample_correct) {
        json arr = json::array();
        for (uint8_t b : v) arr.push_back(static_cast<int>(b));
        psc[k] = arr;
    }
    j["per_sample_correct"] = psc;
    json budgets = json::object();
    for (const auto& [k, tm] : res.attack_budget)
        budgets[k] = {{"norm", tm.p == Norm::Linf ? "inf" : "l2"},
                      {"epsilon", tm.epsilon},
                      {"steps", tm.steps},
                      {"step_size", tm.step_size}};
    j["attack_budget"] = budgets;
    j["max_budget_violation"] = res.max_budget_violation;
    return j;
}

json eta_report_to_json(const EtaReport& r) {
    return {{"eta1", r.eta1},
            {"eta2", r.eta2},
            {"margin_ok", r.margin_ok},
            {"sample_count", r.sample_count},
            {"pairs_scanned", r.pairs_scanned}};
}

json bound_report_to_json(const BoundReport& r) {
    return {{"lhs", r.lhs},
            {"clean_ce", r.clean_ce},
            {"lcon", r.lcon},
            {"kappa_fitted", r.kappa_fitted},
            {"kappa_supplied", r.kappa_supplied},
            {"holds_at_kappa", r.holds_at_kappa},
            {"degenerate", r.degenerate},
            {"calib_lhs", r.calib_lhs},
            {"calib_clean_ce", r.calib_clean_ce},
            {"calib_lcon", r.calib_lcon},
            {"M_hat", r.M_hat},
            {"lipschitz",
             {{"L_en", r.lipschitz.L_en},
              {"l_en", r.lipschitz.l_en},
              {"L_rec", r.lipschitz.L_rec},
              {"L_de_z", r.lipschitz.L_de_z},
              {"M_C", r.lipschitz.M_C}}}};
}

json witness_report_to_json(const WitnessReport& r) {
    return {{"clean_recon", r.clean_recon}, {"adv_recon", r.adv_recon}, {"clean_ce", r.clean_ce},
            {"adv_ce", r.adv_ce},           {"epsilon", r.epsilon},     {"delta", r.delta},
            {"n", r.n},                     {"d", r.d}};
}

}  // namespace cropd
