#pragma once

#include "cropd/pipeline.hpp"

namespace cropd {

enum class Schedule { Cosine, StepDecay, Constant };

struct TrainConfig {
    double learning_rate = 1.5e-3;
    double weight_decay = 5e-2;
    int64_t epochs = 100;
    int64_t batch_size = 128;
    int64_t warmup_epochs = 5;
    Schedule schedule = Schedule::Cosine;
    uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be positive");
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    }
};

struct EpochRecord {
    int64_t epoch = 0;
    double loss = 0.0;
    double recon_term = 0.0;
    double aux_term = 0.0;  // contrastive (CRoPD) or adversarial recon (ARAE)
    double grad_norm = 0.0;
    double wall_clock_s = 0.0;
    int64_t forward_batches = 0;
};

struct TrainHistory {
    std::vector<EpochRecord> records;
    void to_csv(const std::filesystem::path& path) const;
};

// First-order stochastic optimizer with decoupled weight decay.
class AdamW {
public:
    AdamW(std::vector<Matrix*> params, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
          double eps = 1e-8);
    // grads aligned with the param list; lr supplied per step (schedules).
    void step(const std::vector<Matrix>& grads, double lr);

private:
    std::vector<Matrix*> params_;
    std::vector<Matrix> m_, v_;
    double wd_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

double scheduled_lr(const TrainConfig& cfg, int64_t epoch);

inline void require_trainable(const TensorModel& m) {
    if (!m.trainable()) throw FrozenModelError();
}

// Algorithm step 1: clean supervised training of backbone + temporary head;
// the head is discarded and the backbone returned frozen.
Foundation pretrain_foundation(const std::vector<int64_t>& backbone_widths, const LabeledDataset& ds,
                               const TrainConfig& cfg);

// Algorithm step 2: label-free pre-processor training. No foundation model is
// touched anywhere in this operation.
std::pair<Autoencoder, TrainHistory> train_preprocessor(const AutoencoderSpec& spec, const LabeledDataset& ds,
                                                        PipelineVariant variant, double lambda_or_gamma,
                                                        const ThreatModel& tm, const TrainConfig& cfg,
                                                        double tau = 0.5, const AugmentationPolicy& aug = {});

enum class HeadMode { Clean, Robust };

// Preset for robust head training: PGD-10 at a fixed larger step size.
inline ThreatModel robust_head_attack(double eps, Norm p = Norm::Linf, double step_size = 0.007) {
    return {p, eps, 10, step_size, {}};
}

// Algorithm step 3: train pipe.head in place; everything upstream stays
// frozen. Robust mode trains on a 1:1 natural/adversarial mixture.
TrainHistory train_head(Pipeline& pipe, const LabeledDataset& ds, HeadMode mode, const ThreatModel& tm,
                        const TrainConfig& cfg);

}  // namespace cropd
