#include "cropd/models.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>

namespace cropd {

using json = nlohmann::json;

Mlp::Mlp(std::vector<int64_t> widths, Activation act, uint64_t seed) : act_(act) {
    if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
    Rng rng(seed);
    for (size_t i = 0; i + 1 < widths.size(); ++i) {
        double std = std::sqrt(2.0 / static_cast<double>(widths[i]));
        weights_.push_back(gaussian_matrix(widths[i], widths[i + 1], rng, std));
        biases_.push_back(Matrix::Zero(1, widths[i + 1]));
    }
}

ad::Var Mlp::forward(ad::Graph& g, const ad::Var& x) {
    if (x->val.cols() != in_dim())
        throw std::invalid_argument("Mlp: input dim mismatch, got " + std::to_string(x->val.cols()) +
                                    " expected " + std::to_string(in_dim()));
    ad::Var h = x;
    for (size_t i = 0; i < weights_.size(); ++i) {
        h = ad::linear(h, g.param(weights_[i]), g.param(biases_[i]));
        if (i + 1 < weights_.size())
            h = (act_ == Activation::Relu) ? ad::relu(h) : ad::gelu(h);
    }
    return h;
}

std::vector<Matrix*> Mlp::params() {
    std::vector<Matrix*> out;
    for (auto& w : weights_) out.push_back(&w);
    for (auto& b : biases_) out.push_back(&b);
    return out;
}

void AutoencoderSpec::validate() const {
    if (encoder_widths.size() < 2 || decoder_widths.size() < 2)
        throw std::invalid_argument("AutoencoderSpec: encoder/decoder need >= 2 widths");
    if (encoder_widths.back() != latent_dim || decoder_widths.front() != latent_dim)
        throw std::invalid_argument("AutoencoderSpec: latent_dim inconsistent with widths");
    if (decoder_widths.back() != encoder_widths.front())
        throw std::invalid_argument("AutoencoderSpec: decoder output must match encoder input");
    if (projector_out < 2) throw std::invalid_argument("AutoencoderSpec: projector_out must be >= 2");
    if (mask_fraction < 0.0 || mask_fraction >= 1.0)
        throw std::invalid_argument("AutoencoderSpec: mask_fraction must be in [0,1)");
}

Autoencoder::Autoencoder(AutoencoderSpec spec, uint64_t seed) : spec_(std::move(spec)) {
    spec_.validate();
    encoder_ = Mlp(spec_.encoder_widths, spec_.activation, seed);
    decoder_ = Mlp(spec_.decoder_widths, spec_.activation, seed + 1);
    projector_ = Mlp({spec_.latent_dim, spec_.projector_hidden, spec_.projector_out}, spec_.activation, seed + 2);
    resample_mask(seed + 3);
}

void Autoencoder::resample_mask(uint64_t seed) {
    int64_t d = spec_.encoder_widths.front();
    mask_ = RowVector::Ones(d);
    int64_t drop = static_cast<int64_t>(std::floor(spec_.mask_fraction * static_cast<double>(d)));
    if (drop == 0) return;
    std::vector<int64_t> idx(static_cast<size_t>(d));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int64_t i = 0; i < drop; ++i) mask_(idx[static_cast<size_t>(i)]) = 0.0;
}

ad::Var Autoencoder::encode(ad::Graph& g, const ad::Var& x) {
    ad::Var h = x;
    if (spec_.mask_fraction > 0.0) h = ad::mask_cols(h, mask_);
    return encoder_.forward(g, h);
}

ad::Var Autoencoder::decode(ad::Graph& g, const ad::Var& z) { return decoder_.forward(g, z); }

ad::Var Autoencoder::project(ad::Graph& g, const ad::Var& z) {
    return ad::row_normalize(projector_.forward(g, z), &projector_degenerate_);
}

Matrix Autoencoder::encode_plain(const Matrix& x) {
    ad::Graph g;
    return encode(g, ad::constant(x))->val;
}
Matrix Autoencoder::decode_plain(const Matrix& z) {
    ad::Graph g;
    return decode(g, ad::constant(z))->val;
}
Matrix Autoencoder::project_plain(const Matrix& z) {
    ad::Graph g;
    return project(g, ad::constant(z))->val;
}
Matrix Autoencoder::reconstruct_plain(const Matrix& x) {
    ad::Graph g;
    return decode(g, encode(g, ad::constant(x)))->val;
}

std::vector<Matrix*> Autoencoder::params() {
    std::vector<Matrix*> out;
    for (auto* m : {&encoder_, &decoder_, &projector_})
        for (auto* p : m->params()) out.push_back(p);
    return out;
}

GradCheckReport grad_check(TensorModel& model, const Matrix& x, const Matrix& scalarizer_weights, double tol,
                           double step) {
    GradCheckReport report;
    report.converged = true;

    auto scalar_loss = [&](const Matrix& input) {
        ad::Graph g;
        Matrix out = model.forward(g, ad::constant(input))->val;
        return out.cwiseProduct(scalarizer_weights).sum();
    };

    // Analytic pass
    ad::Graph g;
    ad::Var xin = ad::leaf(x);
    ad::Var out = model.forward(g, xin);
    // scalarize: sum(out .* W)
    Matrix W = scalarizer_weights;
    auto s = ad::leaf(Matrix::Constant(1, 1, out->val.cwiseProduct(W).sum()));
    s->parents = {out};
    s->backprop = [W](ad::Node& n) { n.parents[0]->grad += W * n.grad(0, 0); };
    ad::backward(s);

    auto rel_err = [](double analytic, double numeric) {
        double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        return std::abs(analytic - numeric) / denom;
    };

    // Input gradient
    Matrix xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double orig = xp.data()[i];
        xp.data()[i] = orig + step;
        double lp = scalar_loss(xp);
        xp.data()[i] = orig - step;
        double lm = scalar_loss(xp);
        xp.data()[i] = orig;
        double numeric = (lp - lm) / (2.0 * step);
        report.max_rel_err_input = std::max(report.max_rel_err_input, rel_err(xin->grad.data()[i], numeric));
    }

    // Parameter gradients
    for (Matrix* p : model.params()) {
        if (!g.contains(*p)) continue;  // parameter unused in this forward
        const Matrix& analytic = g.grad_of(*p);
        for (Eigen::Index i = 0; i < p->size(); ++i) {
            double orig = p->data()[i];
            p->data()[i] = orig + step;
            double lp = scalar_loss(x);
            p->data()[i] = orig - step;
            double lm = scalar_loss(x);
            p->data()[i] = orig;
            double numeric = (lp - lm) / (2.0 * step);
            report.max_rel_err_params = std::max(report.max_rel_err_params, rel_err(analytic.data()[i], numeric));
        }
    }

    report.pass = tol > 0.0 && report.max_rel_err_input < tol && report.max_rel_err_params < tol;
    return report;
}

void save_params(const std::vector<Matrix*>& params, const std::vector<std::string>& names,
                 const std::filesystem::path& dir, const std::string& arch_json) {
    std::filesystem::create_directories(dir);
    json manifest = json::parse(arch_json);
    json plist = json::array();
    for (size_t i = 0; i < params.size(); ++i) {
        json entry;
        entry["name"] = names[i];
        entry["rows"] = params[i]->rows();
        entry["cols"] = params[i]->cols();
        plist.push_back(entry);
        std::ofstream blob(dir / (names[i] + ".bin"), std::ios::binary);
        for (Eigen::Index r = 0; r < params[i]->rows(); ++r)
            for (Eigen::Index c = 0; c < params[i]->cols(); ++c) {
                float v = static_cast<float>((*params[i])(r, c));
                blob.write(reinterpret_cast<const char*>(&v), sizeof(v));
            }
    }
    manifest["parameters"] = plist;
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << "\n";
}

std::string load_params(std::vector<Matrix*> params, const std::vector<std::string>& names,
                        const std::filesystem::path& dir) {
    json manifest;
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw std::runtime_error("load_params: missing manifest in " + dir.string());
    mf >> manifest;
    for (size_t i = 0; i < params.size(); ++i) {
        std::ifstream blob(dir / (names[i] + ".bin"), std::ios::binary);
        if (!blob) throw std::runtime_error("load_params: missing blob " + names[i]);
        for (Eigen::Index r = 0; r < params[i]->rows(); ++r)
            for (Eigen::Index c = 0; c < params[i]->cols(); ++c) {
                float v;
                if (!blob.read(reinterpret_cast<char*>(&v), sizeof(v)))
                    throw std::runtime_error("load_params: truncated blob " + names[i]);
                (*params[i])(r, c) = static_cast<double>(v);
            }
    }
    return manifest.dump();
}

namespace {
std::vector<std::string> ae_param_names(Autoencoder& ae) {
    std::vector<std::string> names;
    auto count = [&](const char* prefix, Mlp& m) {
        for (size_t i = 0; i < m.weights_.size(); ++i) names.push_back(std::string(prefix) + ".w" + std::to_string(i));
        for (size_t i = 0; i < m.biases_.size(); ++i) names.push_back(std::string(prefix) + ".b" + std::to_string(i));
    };
    count("encoder", ae.encoder_);
    count("decoder", ae.decoder_);
    count("projector", ae.projector_);
    return names;
}
}  // namespace

void save_autoencoder(Autoencoder& ae, uint64_t seed, const std::filesystem::path& dir) {
    const auto& s = ae.spec();
    json arch;
    arch["kind"] = "autoencoder";
    arch["seed"] = seed;
    arch["encoder_widths"] = s.encoder_widths;
    arch["decoder_widths"] = s.decoder_widths;
    arch["latent_dim"] = s.latent_dim;
    arch["projector_hidden"] = s.projector_hidden;
    arch["projector_out"] = s.projector_out;
    arch["mask_fraction"] = s.mask_fraction;
    arch["mask_deterministic"] = s.mask_deterministic;
    arch["activation"] = s.activation == Activation::Relu ? "relu" : "gelu";
    save_params(ae.params(), ae_param_names(ae), dir, arch.dump());
}

Autoencoder load_autoencoder(const std::filesystem::path& dir) {
    json manifest;
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw std::runtime_error("load_autoencoder: missing manifest in " + dir.string());
    mf >> manifest;
    AutoencoderSpec spec;
    spec.encoder_widths = manifest.at("encoder_widths").get<std::vector<int64_t>>();
    spec.decoder_widths = manifest.at("decoder_widths").get<std::vector<int64_t>>();
    spec.latent_dim = manifest.at("latent_dim").get<int64_t>();
    spec.projector_hidden = manifest.at("projector_hidden").get<int64_t>();
    spec.projector_out = manifest.at("projector_out").get<int64_t>();
    spec.mask_fraction = manifest.at("mask_fraction").get<double>();
    spec.mask_deterministic = manifest.at("mask_deterministic").get<bool>();
    spec.activation = manifest.at("activation").get<std::string>() == "gelu" ? Activation::Gelu : Activation::Relu;
    uint64_t seed = manifest.at("seed").get<uint64_t>();
    Autoencoder ae(spec, seed);
    load_params(ae.params(), ae_param_names(ae), dir);
    return ae;
}

}  // namespace cropd
