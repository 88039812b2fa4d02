#pragma once

#include "cropd/attacks.hpp"
#include "cropd/data.hpp"
#include "cropd/models.hpp"

namespace cropd {

struct ContrastiveBatch {
    Matrix anchors;    // M x dim, unit rows (clean embeddings)
    Matrix positives;  // M x dim, unit rows (adversarial embeddings, row-aligned)
    double tau = 0.5;

    void validate() const;
};

double cosine_sim(const Vector& u, const Vector& v);

// -log[ exp(sim(positive, anchor)/tau) / sum_neg exp(sim(anchor, neg)/tau) ].
// The denominator sums over negatives only, so the value may be negative.
double contrastive_item_loss(const Vector& anchor, const Vector& positive, const std::vector<Vector>& negatives,
                             double tau);

// Mean of per-item losses with negatives X u X_adv minus the item's own pair.
double batch_contrastive_loss(const ContrastiveBatch& cb);

double reconstruction_loss(Autoencoder& ae, const Matrix& X);

double cross_entropy(const Matrix& logits, const Labels& labels);

struct CropdDiagnostics {
    double recon_term = 0.0;
    double contrastive_term = 0.0;
    Matrix x_adv;
    bool projector_degenerate = false;
};

// Algorithm-1-step-2 objective: reconstruction + lambda * adversarial
// contrastive term, with the inner sup approximated by FGSM on the
// contrastive loss against the current encoder. lambda == 0 reduces exactly
// to reconstruction_loss. The graph treats x_adv as fixed.
ad::Var cropd_objective_var(ad::Graph& g, Autoencoder& ae, const Matrix& X, double lambda, const ThreatModel& tm,
                            double tau, const AugmentationPolicy& aug, const std::vector<int64_t>& shape,
                            uint64_t seed, CropdDiagnostics* diag = nullptr);

std::pair<double, CropdDiagnostics> cropd_objective(Autoencoder& ae, const Matrix& X, double lambda,
                                                    const ThreatModel& tm, double tau,
                                                    const AugmentationPolicy& aug, const std::vector<int64_t>& shape,
                                                    uint64_t seed);

// Clean reconstruction + gamma * adversarial reconstruction, where the
// attack (FGSM) maximizes the reconstruction error against the clean target.
ad::Var arae_objective_var(ad::Graph& g, Autoencoder& ae, const Matrix& X, double gamma, const ThreatModel& tm,
                           CropdDiagnostics* diag = nullptr);

double arae_objective(Autoencoder& ae, const Matrix& X, double gamma, const ThreatModel& tm);

}  // namespace cropd
