#pragma once

#include "cropd/pipeline.hpp"

namespace cropd {

struct EtaReport {
    double eta1 = 0.0;  // max same-input clean/adversarial embedding distance
    double eta2 = 0.0;  // min cross-class embedding distance (clean-clean and clean-adv)
    bool margin_ok = false;
    int64_t sample_count = 0;
    int64_t pairs_scanned = 0;
};

struct LipschitzEstimates {
    double L_en = 0.0;
    double l_en = 0.0;
    double L_rec = 0.0;
    double L_de_z = 0.0;  // L_rec / l_en
    double M_C = 0.0;     // L_de_z * exp(M)
};

struct BoundReport {
    double lhs = 0.0;       // adversarial CE on the held-out half
    double clean_ce = 0.0;  // clean CE on the held-out half
    double lcon = 0.0;      // adversarial contrastive loss on the held-out half
    double kappa_fitted = 0.0;
    bool kappa_supplied = false;
    bool holds_at_kappa = false;
    bool degenerate = false;  // lcon <= 0 on calibration
    double calib_lhs = 0.0, calib_clean_ce = 0.0, calib_lcon = 0.0;
    double M_hat = 0.0;  // max observed -log p_T, with 10% headroom
    LipschitzEstimates lipschitz;
};

struct WitnessReport {
    double clean_recon = 0.0;
    double adv_recon = 0.0;
    double clean_ce = 0.0;
    double adv_ce = 0.0;  // realized Gamma lower bound
    double epsilon = 0.0;
    double delta = 0.0;
    int64_t n = 0;
    int64_t d = 0;
};

// Embedding map used for the theory measurements: the normalized projector
// output when a pre-processor exists, otherwise row-normalized raw inputs.
Matrix theory_embedding(const std::optional<Autoencoder>& ae, const Matrix& x);

// Adversarial views via PGD on the batch contrastive objective in embedding
// space (clean embeddings as anchors).
Matrix contrastive_attack(std::optional<Autoencoder>& ae, const Matrix& x, double tau, const ThreatModel& tm);

EtaReport estimate_eta(Autoencoder& encoder, const LabeledDataset& ds, const ThreatModel& tm, double tau = 0.5,
                       int64_t exhaustive_limit = 2000, uint64_t subsample_seed = 0);

// Empirical Theorem-1 check. When kappa is absent, the smallest kappa making
// the mean-level bound hold is fitted on a calibration half and evaluated on
// the held-out half.
BoundReport check_theorem_bound(Pipeline& pipe, const LabeledDataset& ds, const ThreatModel& tm,
                                std::optional<double> kappa = std::nullopt, double tau = 0.5,
                                uint64_t split_seed = 0, int64_t lipschitz_pairs = 200);

// Empirical bracket of the Lipschitz behaviour of a row-wise map over sampled
// dataset pairs plus adversarially perturbed pairs within the budget.
std::pair<double, double> estimate_lipschitz(const std::function<Matrix(const Matrix&)>& fn,
                                             const LabeledDataset& ds, int64_t pair_budget, const ThreatModel& tm,
                                             uint64_t seed);

// The discrete counterexample: identity auto-encoder, brittle piecewise
// classifier, four measured losses.
WitnessReport proposition1_witness(int64_t n, int64_t d, double epsilon, double delta);

}  // namespace cropd
