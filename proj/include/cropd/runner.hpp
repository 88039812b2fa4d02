#pragma once

#include "cropd/theory.hpp"
#include "cropd/training.hpp"

#include <nlohmann/json.hpp>

namespace cropd {

inline constexpr const char* kToolVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StageError : std::runtime_error {
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error("stage '" + stage + "' failed: " + what), stage_name(stage) {}
    std::string stage_name;
};

// Accepts plain numbers or rational strings like "8/255" (kept verbatim in
// the config so hashes do not depend on float formatting).
double parse_rational(const nlohmann::json& v);

// A fully-defaulted, canonically-serialized experiment description.
// Unknown keys are rejected with the offending path in the message.
class ExperimentConfig {
public:
    static nlohmann::json defaults();
    static ExperimentConfig from_json(const nlohmann::json& user);
    static ExperimentConfig from_file(const std::filesystem::path& path);

    void apply_override(const std::string& dotted_key, const std::string& value);

    std::string serialize() const { return j_.dump(2); }
    std::string hash() const;
    // Hash of the config subtree relevant to one pipeline stage, chained on
    // upstream stage hashes so cache keys invalidate transitively.
    std::string stage_hash(const std::string& stage) const;

    const nlohmann::json& tree() const { return j_; }

    // typed accessors
    PipelineVariant variant() const;
    HeadMode head_mode() const;
    std::vector<uint64_t> seeds() const { return j_.at("seeds").get<std::vector<uint64_t>>(); }
    uint64_t seed() const { return seeds().front(); }
    // Copy with the seed list narrowed to one entry (per-run derived config).
    ExperimentConfig with_seed(uint64_t s) const;
    std::filesystem::path output_dir() const { return j_.at("output_dir").get<std::string>(); }
    double lambda() const { return j_.at("lambda").get<double>(); }
    double gamma() const { return j_.at("gamma").get<double>(); }
    double tau() const { return j_.at("tau").get<double>(); }
    AutoencoderSpec autoencoder_spec() const;
    AugmentationPolicy augmentation() const;
    TrainConfig train_config(const std::string& which) const;  // foundation | preprocessor | head
    std::vector<int64_t> foundation_widths() const;
    ThreatModel train_attack() const;
    ThreatModel eval_attack(const std::string& preset) const;  // fgsm | pgd10 | pgd20
    std::vector<std::pair<std::string, ThreatModel>> eval_attacks() const;
    ThreatModel robust_head_attack_cfg() const;

private:
    explicit ExperimentConfig(nlohmann::json j) : j_(std::move(j)) {}
    nlohmann::json j_;
};

// Materialized pipeline for one config (loaded from the stage cache).
struct ExperimentArtifacts {
    LabeledDataset train, test, pretrain;
    Pipeline pipeline;
};

// Orchestrates generate -> pretrain -> preproc -> head -> eval -> theory with
// per-stage caching keyed by stage_hash. Returns the ResultsRecord json and
// writes all artifacts under output_dir/<config-hash>/.
nlohmann::json run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Runs stages up to head training and returns the trained pipeline plus data.
ExperimentArtifacts build_pipeline(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Runs the stage chain up to and including `stage` (data, foundation,
// preproc, head, eval, theory) for every configured seed; returns the final
// stage's cache directory per seed.
std::vector<std::filesystem::path> run_stages(const ExperimentConfig& cfg, const std::string& stage,
                                              std::ostream* log = nullptr);

// Isolated per-config execution; failures are collected per config, results
// are independent of parallelism.
std::vector<nlohmann::json> run_suite(const std::vector<std::filesystem::path>& configs, int parallelism);

// Markdown accuracy table plus plot-data CSVs (lambda trade-off, bound sides).
void emit_report(const std::vector<nlohmann::json>& records, const std::filesystem::path& out_dir);

nlohmann::json eval_result_to_json(const EvalResult& res);
nlohmann::json eta_report_to_json(const EtaReport& r);
nlohmann::json bound_report_to_json(const BoundReport& r);
nlohmann::json witness_report_to_json(const WitnessReport& r);

}  // namespace cropd
