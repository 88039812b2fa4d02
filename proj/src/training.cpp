#include "cropd/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

namespace cropd {

void TrainHistory::to_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    out << "epoch,loss,recon_term,aux_term,grad_norm,wall_clock_s,forward_batches\n";
    for (const auto& r : records)
        out << r.epoch << "," << r.loss << "," << r.recon_term << "," << r.aux_term << "," << r.grad_norm << ","
            << r.wall_clock_s << "," << r.forward_batches << "\n";
}

AdamW::AdamW(std::vector<Matrix*> params, double weight_decay, double beta1, double beta2, double eps)
    : params_(std::move(params)), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* p : params_) {
        m_.push_back(Matrix::Zero(p->rows(), p->cols()));
        v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
}

void AdamW::step(const std::vector<Matrix>& grads, double lr) {
    if (grads.size() != params_.size()) throw std::invalid_argument("AdamW: gradient count mismatch");
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
        Matrix mhat = m_[i] / bc1;
        Matrix vhat = v_[i] / bc2;
        *params_[i] -= lr * (mhat.array() / (vhat.array().sqrt() + eps_)).matrix();
        *params_[i] -= lr * wd_ * *params_[i];  // decoupled weight decay
    }
}

double scheduled_lr(const TrainConfig& cfg, int64_t epoch) {
    double factor = 1.0;
    if (cfg.warmup_epochs > 0 && epoch < cfg.warmup_epochs)
        factor = static_cast<double>(epoch + 1) / static_cast<double>(cfg.warmup_epochs);
    switch (cfg.schedule) {
        case Schedule::Constant: break;
        case Schedule::Cosine: {
            int64_t span = std::max<int64_t>(1, cfg.epochs - cfg.warmup_epochs);
            int64_t pos = std::max<int64_t>(0, epoch - cfg.warmup_epochs);
            factor *= 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(pos) / static_cast<double>(span)));
            break;
        }
        case Schedule::StepDecay: {
            if (epoch >= 100) factor *= 1e-3;
            else if (epoch >= 70) factor *= 1e-2;
            else if (epoch >= 30) factor *= 1e-1;
            break;
        }
    }
    return cfg.learning_rate * factor;
}

namespace {

std::vector<Matrix> collect_grads(const ad::Graph& g, const std::vector<Matrix*>& params, double* grad_norm) {
    std::vector<Matrix> grads;
    double sq = 0.0;
    for (auto* p : params) {
        if (g.contains(*p)) {
            grads.push_back(g.grad_of(*p));
        } else {
            grads.push_back(Matrix::Zero(p->rows(), p->cols()));
        }
        sq += grads.back().squaredNorm();
    }
    if (grad_norm) *grad_norm = std::sqrt(sq);
    return grads;
}

void abort_on_nan(double loss, const char* where) {
    if (!std::isfinite(loss)) throw std::runtime_error(std::string(where) + ": training diverged (non-finite loss)");
}

}  // namespace

Foundation pretrain_foundation(const std::vector<int64_t>& backbone_widths, const LabeledDataset& ds,
                               const TrainConfig& cfg) {
    cfg.validate();
    ds.validate();
    if (backbone_widths.front() != ds.dim())
        throw std::invalid_argument("pretrain_foundation: backbone input dim mismatch");
    Mlp backbone(backbone_widths, Activation::Relu, cfg.seed);
    LinearHead temp_head(backbone.out_dim(), ds.num_classes, cfg.seed + 1);

    std::vector<Matrix*> params = backbone.params();
    for (auto* p : temp_head.params()) params.push_back(p);
    AdamW opt(params, cfg.weight_decay);

    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = scheduled_lr(cfg, epoch);
        BatchIter it(ds, cfg.batch_size, cfg.seed * 1000003 + static_cast<uint64_t>(epoch));
        Matrix x;
        Labels y;
        while (it.next(x, y)) {
            ad::Graph g;
            ad::Var loss = ad::softmax_xent(temp_head.forward(g, backbone.forward(g, ad::constant(x))), y);
            abort_on_nan(ad::value(loss), "pretrain_foundation");
            ad::backward(loss);
            opt.step(collect_grads(g, params, nullptr), lr);
        }
    }
    return Foundation(std::move(backbone));  // temporary head discarded
}

std::pair<Autoencoder, TrainHistory> train_preprocessor(const AutoencoderSpec& spec, const LabeledDataset& ds,
                                                        PipelineVariant variant, double lambda_or_gamma,
                                                        const ThreatModel& tm, const TrainConfig& cfg, double tau,
                                                        const AugmentationPolicy& aug) {
    cfg.validate();
    ds.validate();
    if (variant == PipelineVariant::Identity)
        throw std::invalid_argument("train_preprocessor: Identity has no pre-processor to train");

    Autoencoder ae(spec, cfg.seed);
    AdamW opt(ae.params(), cfg.weight_decay);
    TrainHistory history;

    auto t0 = std::chrono::steady_clock::now();
    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = scheduled_lr(cfg, epoch);
        BatchIter it(ds, cfg.batch_size, cfg.seed * 1000003 + static_cast<uint64_t>(epoch));
        Matrix x;
        Labels y;  // labels are never used here
        EpochRecord rec;
        rec.epoch = epoch;
        int64_t batches = 0;
        while (it.next(x, y)) {
            uint64_t batch_seed = cfg.seed * 7919 + static_cast<uint64_t>(epoch) * 131 + static_cast<uint64_t>(batches);
            ad::Graph g;
            CropdDiagnostics diag;
            ad::Var loss;
            if (variant == PipelineVariant::ARAE) {
                loss = arae_objective_var(g, ae, x, lambda_or_gamma, tm, &diag);
            } else {
                double lambda = (variant == PipelineVariant::Vanilla) ? 0.0 : lambda_or_gamma;
                loss = cropd_objective_var(g, ae, x, lambda, tm, tau, aug, ds.shape, batch_seed, &diag);
            }
            abort_on_nan(ad::value(loss), "train_preprocessor");
            ad::backward(loss);
            double gn = 0.0;
            opt.step(collect_grads(g, ae.params(), &gn), lr);
            rec.loss += ad::value(loss);
            rec.recon_term += diag.recon_term;
            rec.aux_term += diag.contrastive_term;
            rec.grad_norm += gn;
            ++batches;
        }
        rec.loss /= static_cast<double>(batches);
        rec.recon_term /= static_cast<double>(batches);
        rec.aux_term /= static_cast<double>(batches);
        rec.grad_norm /= static_cast<double>(batches);
        rec.forward_batches = batches;
        rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.records.push_back(rec);
    }
    return {std::move(ae), std::move(history)};
}

TrainHistory train_head(Pipeline& pipe, const LabeledDataset& ds, HeadMode mode, const ThreatModel& tm,
                        const TrainConfig& cfg) {
    cfg.validate();
    ds.validate();
    pipe.validate();
    if (pipe.foundation.trainable()) throw std::invalid_argument("train_head: foundation must be frozen");

    std::vector<Matrix*> head_params = pipe.head.params();
    AdamW opt(head_params, cfg.weight_decay);
    TrainHistory history;

    auto preprocessed = [&](const Matrix& x) {
        if (!pipe.autoencoder) return pipe.foundation.forward_plain(x);
        return pipe.foundation.forward_plain(pipe.autoencoder->reconstruct_plain(x));
    };

    auto t0 = std::chrono::steady_clock::now();
    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = scheduled_lr(cfg, epoch);
        BatchIter it(ds, cfg.batch_size, cfg.seed * 1000003 + static_cast<uint64_t>(epoch));
        Matrix x;
        Labels y;
        EpochRecord rec;
        rec.epoch = epoch;
        int64_t batches = 0;
        while (it.next(x, y)) {
            ad::Graph g;
            ad::Var loss;
            if (mode == HeadMode::Clean) {
                loss = ad::softmax_xent(pipe.head.forward(g, ad::constant(preprocessed(x))), y);
                rec.forward_batches += 1;
            } else {
                Matrix x_adv = pgd(pipeline_ce_lossgrad(pipe, y), x, tm);
                ad::Var nat = ad::softmax_xent(pipe.head.forward(g, ad::constant(preprocessed(x))), y);
                ad::Var adv = ad::softmax_xent(pipe.head.forward(g, ad::constant(preprocessed(x_adv))), y);
                loss = ad::scale(ad::add(nat, adv), 0.5);  // 1:1 natural/adversarial mixture
                rec.forward_batches += 2;
            }
            abort_on_nan(ad::value(loss), "train_head");
            ad::backward(loss);
            double gn = 0.0;
            opt.step(collect_grads(g, head_params, &gn), lr);
            rec.loss += ad::value(loss);
            rec.grad_norm += gn;
            ++batches;
        }
        rec.loss /= static_cast<double>(batches);
        rec.grad_norm /= static_cast<double>(batches);
        rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.records.push_back(rec);
    }
    return history;
}

}  // namespace cropd
