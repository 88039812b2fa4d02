#pragma once

#include "cropd/autodiff.hpp"

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace cropd {

enum class Activation { Relu, Gelu };

struct FrozenModelError : std::runtime_error {
    FrozenModelError() : std::runtime_error("model is frozen; parameter updates are forbidden") {}
};

// Differentiable parameterized function: forward pass builds onto a Graph so
// gradients w.r.t. both inputs and parameters are available.
struct TensorModel {
    virtual ~TensorModel() = default;
    virtual ad::Var forward(ad::Graph& g, const ad::Var& x) = 0;
    virtual std::vector<Matrix*> params() = 0;
    virtual bool trainable() const { return true; }

    Matrix forward_plain(const Matrix& x) {
        ad::Graph g;
        return forward(g, ad::constant(x))->val;
    }
};

class Mlp : public TensorModel {
public:
    Mlp() = default;
    // widths = {in, h1, ..., out}; activation between layers, final layer linear.
    Mlp(std::vector<int64_t> widths, Activation act, uint64_t seed);

    ad::Var forward(ad::Graph& g, const ad::Var& x) override;
    std::vector<Matrix*> params() override;

    int64_t in_dim() const { return weights_.empty() ? 0 : weights_.front().rows(); }
    int64_t out_dim() const { return weights_.empty() ? 0 : weights_.back().cols(); }

    std::vector<Matrix> weights_;  // layer i: in x out
    std::vector<Matrix> biases_;   // 1 x out
    Activation act_ = Activation::Relu;
};

struct AutoencoderSpec {
    std::vector<int64_t> encoder_widths;  // input -> ... -> latent
    std::vector<int64_t> decoder_widths;  // latent -> ... -> input
    int64_t latent_dim = 0;
    int64_t projector_hidden = 64;
    int64_t projector_out = 16;
    double mask_fraction = 0.0;  // in [0, 1)
    bool mask_deterministic = true;
    Activation activation = Activation::Relu;

    void validate() const;
};

class Autoencoder {
public:
    Autoencoder() = default;
    Autoencoder(AutoencoderSpec spec, uint64_t seed);

    ad::Var encode(ad::Graph& g, const ad::Var& x);
    ad::Var decode(ad::Graph& g, const ad::Var& z);
    // Projector output, rows L2-normalized. A zero pre-norm row is replaced by
    // e1 and flags projector_degenerate.
    ad::Var project(ad::Graph& g, const ad::Var& z);

    Matrix encode_plain(const Matrix& x);
    Matrix decode_plain(const Matrix& z);
    Matrix project_plain(const Matrix& z);
    Matrix reconstruct_plain(const Matrix& x);

    std::vector<Matrix*> params();
    const AutoencoderSpec& spec() const { return spec_; }
    const RowVector& mask() const { return mask_; }
    // Re-draw the coordinate mask (used when mask_deterministic is false).
    void resample_mask(uint64_t seed);
    bool projector_degenerate() const { return projector_degenerate_; }

    Mlp encoder_, decoder_, projector_;

private:
    AutoencoderSpec spec_;
    RowVector mask_;  // 1 = keep, 0 = drop; all-ones when mask_fraction == 0
    bool projector_degenerate_ = false;
};

// Frozen feature backbone. Gradients flow through it, parameters never move.
// Every forward bumps an access counter so zero-access contracts are testable.
class Foundation : public TensorModel {
public:
    Foundation() = default;
    explicit Foundation(Mlp backbone)
        : backbone_(std::move(backbone)), accesses_(std::make_shared<std::atomic<int64_t>>(0)) {}

    ad::Var forward(ad::Graph& g, const ad::Var& x) override {
        accesses_->fetch_add(1);
        return backbone_.forward(g, x);
    }
    std::vector<Matrix*> params() override { return backbone_.params(); }
    bool trainable() const override { return false; }

    int64_t access_count() const { return accesses_ ? accesses_->load() : 0; }
    int64_t out_dim() const { return backbone_.out_dim(); }
    const Mlp& backbone() const { return backbone_; }

private:
    Mlp backbone_;
    std::shared_ptr<std::atomic<int64_t>> accesses_;
};

class LinearHead : public TensorModel {
public:
    LinearHead() = default;
    LinearHead(int64_t in, int64_t num_classes, uint64_t seed)
        : layer_({in, num_classes}, Activation::Relu, seed) {}

    ad::Var forward(ad::Graph& g, const ad::Var& features) override { return layer_.forward(g, features); }
    std::vector<Matrix*> params() override { return layer_.params(); }
    int64_t num_classes() const { return layer_.out_dim(); }

    Mlp layer_;
};

struct GradCheckReport {
    double max_rel_err_input = 0.0;
    double max_rel_err_params = 0.0;
    bool pass = false;
    bool converged = true;
};

// Compares analytic gradients (w.r.t. input and all parameters) of
// scalarizer(model(x)) against central finite differences.
// tol = 0 is the documented always-fail sentinel.
GradCheckReport grad_check(TensorModel& model, const Matrix& x, const Matrix& scalarizer_weights, double tol,
                           double step = 1e-3);

// Checkpoint container: manifest.json + one little-endian float32 blob per
// parameter path.
void save_params(const std::vector<Matrix*>& params, const std::vector<std::string>& names,
                 const std::filesystem::path& dir, const std::string& arch_json);
std::string load_params(std::vector<Matrix*> params, const std::vector<std::string>& names,
                        const std::filesystem::path& dir);

void save_autoencoder(Autoencoder& ae, uint64_t seed, const std::filesystem::path& dir);
Autoencoder load_autoencoder(const std::filesystem::path& dir);

}  // namespace cropd
