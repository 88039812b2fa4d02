#include "cropd/runner.hpp"
#include "cropd/sha256.hpp"

#include <fstream>
#include <sstream>

namespace cropd {

using json = nlohmann::json;

double parse_rational(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (!v.is_string()) throw ConfigError("expected number or rational string");
    std::string s = v.get<std::string>();
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) return std::stod(s);
        double num = std::stod(s.substr(0, slash));
        double den = std::stod(s.substr(slash + 1));
        if (den == 0.0) throw ConfigError("rational '" + s + "' has zero denominator");
        return num / den;
    } catch (const std::invalid_argument&) {
        throw ConfigError("cannot parse rational '" + s + "'");
    }
}

json ExperimentConfig::defaults() {
    json train_default = {
        {"learning_rate", 1.5e-3}, {"weight_decay", 5e-2}, {"epochs", 40},
        {"batch_size", 128},       {"warmup_epochs", 5},   {"schedule", "cosine"},
    };
    json j = {
        {"dataset",
         {{"kind", "gaussian"},
          {"name", "gauss2"},
          {"n_train", 2000},
          {"n_test", 1000},
          {"n_pretrain", 2000},
          {"d", 32},
          {"num_classes", 2},
          {"separation", 14.0},
          {"seed", 0},
          {"discrete_epsilon", "1/10"}}},
        {"variant", "CRoPD"},
        {"lambda", 1.0},
        {"gamma", 0.1},
        {"tau", 0.5},
        {"head_mode", "clean"},
        {"seeds", json::array({0})},
        {"output_dir", "out"},
        {"attacks",
         {{"norm", "inf"},
          {"train_eps", "11/5"},
          {"eval_eps", "9/5"},
          {"eval_presets", json::array({"pgd10", "pgd20"})},
          {"clamp_images", true},
          {"robust_head_step", 0.007}}},
        {"foundation", {{"widths", json::array({64, 32})}, {"train", train_default}}},
        {"autoencoder",
         {{"encoder_widths", json::array({128, 64})},
          {"decoder_widths", json::array({64})},
          {"latent_dim", 1},
          {"projector_hidden", 64},
          {"projector_out", 16},
          {"mask_fraction", 0.0},
          {"mask_deterministic", true},
          {"activation", "relu"},
          {"train", train_default},
          {"augment",
           {{"enabled", false},
            {"crop_fraction", 1.0},
            {"flip_prob", 0.0},
            {"jitter_strength", 0.0},
            {"grayscale_prob", 0.0}}}}},
        {"head", {{"train", train_default}}},
        {"bootstrap", {{"repeats", 1000}, {"seed", 0}}},
        {"theory",
         {{"enabled", true},
          {"lipschitz_pairs", 200},
          {"eta_exhaustive_limit", 2000},
          {"witness", {{"enabled", false}, {"n", 1024}, {"d", 16}, {"delta", 0.001}}}}},
    };
    j["autoencoder"]["train"]["epochs"] = 150;
    j["autoencoder"]["train"]["learning_rate"] = 0.01;
    return j;
}

namespace {

bool same_category(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return true;
    // rational eps fields: string default, numeric override allowed
    if (a.is_string() && b.is_number()) return true;
    if (a.is_number() && b.is_string()) return true;
    return a.type() == b.type();
}

void merge_into(json& base, const json& user, const std::string& path) {
    if (!user.is_object()) throw ConfigError("config node '" + (path.empty() ? "<root>" : path) + "' must be an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        std::string child = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) throw ConfigError("unknown config key '" + child + "'");
        json& slot = base[it.key()];
        if (slot.is_object() && !it.value().is_object()) throw ConfigError("config key '" + child + "' must be an object");
        if (slot.is_object()) {
            merge_into(slot, it.value(), child);
        } else if (slot.is_number() && it.value().is_string()) {
            // numeric slot: strings must be valid rationals
            slot = parse_rational(it.value());
        } else {
            if (!same_category(slot, it.value()))
                throw ConfigError("config key '" + child + "' has wrong type");
            slot = it.value();
        }
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& user) {
    json merged = defaults();
    merge_into(merged, user, "");
    ExperimentConfig cfg(std::move(merged));
    // surface bad enums / rationals at parse time, with field names
    cfg.variant();
    cfg.head_mode();
    if (cfg.seeds().empty()) throw ConfigError("config key 'seeds' must be non-empty");
    parse_rational(cfg.tree().at("attacks").at("train_eps"));
    parse_rational(cfg.tree().at("attacks").at("eval_eps"));
    parse_rational(cfg.tree().at("dataset").at("discrete_epsilon"));
    std::string kind = cfg.tree().at("dataset").at("kind").get<std::string>();
    if (kind != "gaussian" && kind != "discrete")
        throw ConfigError("config key 'dataset.kind' must be 'gaussian' or 'discrete'");
    std::string norm = cfg.tree().at("attacks").at("norm").get<std::string>();
    if (norm != "inf" && norm != "l2") throw ConfigError("config key 'attacks.norm' must be 'inf' or 'l2'");
    for (const auto& p : cfg.tree().at("attacks").at("eval_presets")) {
        std::string s = p.get<std::string>();
        if (s != "fgsm" && s != "pgd10" && s != "pgd20")
            throw ConfigError("config key 'attacks.eval_presets' entries must be fgsm|pgd10|pgd20");
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json user;
    try {
        in >> user;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(user);
}

void ExperimentConfig::apply_override(const std::string& dotted_key, const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream ss(dotted_key);
    std::string part;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) throw ConfigError("empty override key");
    json* node = &j_;
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object())
            throw ConfigError("unknown config key '" + dotted_key + "'");
        node = &(*node)[parts[i]];
    }
    if (!node->contains(parts.back())) throw ConfigError("unknown config key '" + dotted_key + "'");
    json& slot = (*node)[parts.back()];
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;  // bare strings allowed without quotes
    }
    if (slot.is_string() && parsed.is_number()) {
        slot = parsed;
        return;
    }
    if (slot.is_number() && parsed.is_string()) {
        slot = parse_rational(parsed);
        return;
    }
    if (!same_category(slot, parsed)) throw ConfigError("override '" + dotted_key + "' has wrong type");
    slot = parsed;
}

std::string ExperimentConfig::hash() const { return Sha256::hash(j_.dump()); }

ExperimentConfig ExperimentConfig::with_seed(uint64_t s) const {
    ExperimentConfig out = *this;
    out.j_["seeds"] = json::array({s});
    return out;
}

std::string ExperimentConfig::stage_hash(const std::string& stage) const {
    auto h = [&](std::initializer_list<std::string> parts) {
        Sha256 sha;
        sha.update(stage.data(), stage.size());
        for (const auto& p : parts) {
            sha.update("\x1f", 1);
            sha.update(p.data(), p.size());
        }
        return sha.hex_digest();
    };
    std::string run_seed = std::to_string(seed());
    if (stage == "data") return h({j_.at("dataset").dump()});
    if (stage == "foundation") return h({stage_hash("data"), j_.at("foundation").dump(), run_seed});
    if (stage == "preproc")
        return h({stage_hash("data"), j_.at("autoencoder").dump(), j_.at("variant").dump(), j_.at("lambda").dump(),
                  j_.at("gamma").dump(), j_.at("tau").dump(), j_.at("attacks").at("train_eps").dump(),
                  j_.at("attacks").at("norm").dump(), j_.at("attacks").at("clamp_images").dump(), run_seed});
    if (stage == "head")
        return h({stage_hash("foundation"), stage_hash("preproc"), j_.at("head").dump(), j_.at("head_mode").dump(),
                  j_.at("attacks").at("eval_eps").dump(), j_.at("attacks").at("robust_head_step").dump(),
                  j_.at("attacks").at("norm").dump(), j_.at("attacks").at("clamp_images").dump(), run_seed});
    if (stage == "eval") return h({stage_hash("head"), j_.at("attacks").dump(), j_.at("bootstrap").dump()});
    if (stage == "theory")
        return h({stage_hash("head"), j_.at("theory").dump(), j_.at("attacks").at("eval_eps").dump(),
                  j_.at("tau").dump()});
    throw std::invalid_argument("stage_hash: unknown stage " + stage);
}

PipelineVariant ExperimentConfig::variant() const {
    try {
        return variant_from_name(j_.at("variant").get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config key 'variant': ") + e.what());
    }
}

HeadMode ExperimentConfig::head_mode() const {
    std::string s = j_.at("head_mode").get<std::string>();
    if (s == "clean") return HeadMode::Clean;
    if (s == "robust") return HeadMode::Robust;
    throw ConfigError("config key 'head_mode' must be 'clean' or 'robust'");
}

AutoencoderSpec ExperimentConfig::autoencoder_spec() const {
    const nlohmann::json& a = j_.at("autoencoder");
    int64_t d = j_.at("dataset").at("d").get<int64_t>();
    AutoencoderSpec spec;
    spec.latent_dim = a.at("latent_dim").get<int64_t>();
    spec.encoder_widths = {d};
    for (const auto& w : a.at("encoder_widths")) spec.encoder_widths.push_back(w.get<int64_t>());
    spec.encoder_widths.push_back(spec.latent_dim);
    spec.decoder_widths = {spec.latent_dim};
    for (const auto& w : a.at("decoder_widths")) spec.decoder_widths.push_back(w.get<int64_t>());
    spec.decoder_widths.push_back(d);
    spec.projector_hidden = a.at("projector_hidden").get<int64_t>();
    spec.projector_out = a.at("projector_out").get<int64_t>();
    spec.mask_fraction = a.at("mask_fraction").get<double>();
    spec.mask_deterministic = a.at("mask_deterministic").get<bool>();
    spec.activation = a.at("activation").get<std::string>() == "gelu" ? Activation::Gelu : Activation::Relu;
    return spec;
}

AugmentationPolicy ExperimentConfig::augmentation() const {
    const nlohmann::json& a = j_.at("autoencoder").at("augment");
    AugmentationPolicy p;
    p.enabled = a.at("enabled").get<bool>();
    p.crop_fraction = a.at("crop_fraction").get<double>();
    p.flip_prob = a.at("flip_prob").get<double>();
    p.jitter_strength = a.at("jitter_strength").get<double>();
    p.grayscale_prob = a.at("grayscale_prob").get<double>();
    return p;
}

TrainConfig ExperimentConfig::train_config(const std::string& which) const {
    const nlohmann::json& t = j_.at(which).at("train");
    TrainConfig cfg;
    cfg.learning_rate = t.at("learning_rate").get<double>();
    cfg.weight_decay = t.at("weight_decay").get<double>();
    cfg.epochs = t.at("epochs").get<int64_t>();
    cfg.batch_size = t.at("batch_size").get<int64_t>();
    cfg.warmup_epochs = t.at("warmup_epochs").get<int64_t>();
    std::string s = t.at("schedule").get<std::string>();
    if (s == "cosine") cfg.schedule = Schedule::Cosine;
    else if (s == "step") cfg.schedule = Schedule::StepDecay;
    else if (s == "constant") cfg.schedule = Schedule::Constant;
    else throw ConfigError("config key '" + which + ".train.schedule' must be cosine|step|constant");
    // each stage trains with its own stream derived from the run seed
    uint64_t offset = which == "foundation" ? 1 : which == "autoencoder" ? 2 : 3;
    cfg.seed = seed() * 4 + offset;
    return cfg;
}

std::vector<int64_t> ExperimentConfig::foundation_widths() const {
    std::vector<int64_t> widths = {j_.at("dataset").at("d").get<int64_t>()};
    for (const auto& w : j_.at("foundation").at("widths")) widths.push_back(w.get<int64_t>());
    return widths;
}

namespace {
Norm norm_of(const nlohmann::json& attacks) {
    return attacks.at("norm").get<std::string>() == "l2" ? Norm::L2 : Norm::Linf;
}
}  // namespace

ThreatModel ExperimentConfig::train_attack() const {
    const nlohmann::json& a = j_.at("attacks");
    // clamp_images only applies to image-shaped data; the built-in dataset
    // kinds are plain vectors, so no clamp is attached here.
    return ThreatModel::fgsm_preset(parse_rational(a.at("train_eps")), norm_of(a));
}

ThreatModel ExperimentConfig::eval_attack(const std::string& preset) const {
    const nlohmann::json& a = j_.at("attacks");
    double eps = parse_rational(a.at("eval_eps"));
    Norm p = norm_of(a);
    ThreatModel tm;
    if (preset == "fgsm") tm = ThreatModel::fgsm_preset(eps, p);
    else if (preset == "pgd10") tm = ThreatModel::pgd10_preset(eps, p);
    else if (preset == "pgd20") tm = ThreatModel::pgd20_preset(eps, p);
    else throw ConfigError("unknown attack preset '" + preset + "'");
    return tm;
}

std::vector<std::pair<std::string, ThreatModel>> ExperimentConfig::eval_attacks() const {
    std::vector<std::pair<std::string, ThreatModel>> out;
    for (const auto& p : j_.at("attacks").at("eval_presets")) {
        std::string name = p.get<std::string>();
        out.emplace_back(name, eval_attack(name));
    }
    return out;
}

ThreatModel ExperimentConfig::robust_head_attack_cfg() const {
    const nlohmann::json& a = j_.at("attacks");
    return robust_head_attack(parse_rational(a.at("eval_eps")), norm_of(a), a.at("robust_head_step").get<double>());
}

}  // namespace cropd
