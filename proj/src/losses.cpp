#include "cropd/losses.hpp"

#include <cmath>

namespace cropd {

void ContrastiveBatch::validate() const {
    if (anchors.rows() < 2) throw std::invalid_argument("ContrastiveBatch: need M >= 2");
    if (anchors.rows() != positives.rows() || anchors.cols() != positives.cols())
        throw std::invalid_argument("ContrastiveBatch: anchor/positive shape mismatch");
    if (!(tau > 0.0)) throw std::invalid_argument("ContrastiveBatch: tau must be positive");
    for (Eigen::Index i = 0; i < anchors.rows(); ++i)
        if (std::abs(anchors.row(i).norm() - 1.0) > 1e-6 || std::abs(positives.row(i).norm() - 1.0) > 1e-6)
            throw std::invalid_argument("ContrastiveBatch: rows must be unit norm");
}

double cosine_sim(const Vector& u, const Vector& v) {
    double nu = u.norm(), nv = v.norm();
    if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("cosine_sim: zero vector");
    return u.dot(v) / (nu * nv);
}

double contrastive_item_loss(const Vector& anchor, const Vector& positive, const std::vector<Vector>& negatives,
                             double tau) {
    if (negatives.empty()) throw std::invalid_argument("contrastive_item_loss: empty negative set");
    if (!(tau > 0.0)) throw std::invalid_argument("contrastive_item_loss: tau must be positive");
    double pos = cosine_sim(positive, anchor) / tau;
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> sims;
    sims.reserve(negatives.size());
    for (const auto& neg : negatives) {
        sims.push_back(cosine_sim(anchor, neg) / tau);
        mx = std::max(mx, sims.back());
    }
    double s = 0.0;
    for (double v : sims) s += std::exp(v - mx);
    return -pos + mx + std::log(s);
}

double batch_contrastive_loss(const ContrastiveBatch& cb) {
    cb.validate();
    return ad::value(ad::contrastive(ad::constant(cb.anchors), ad::constant(cb.positives), cb.tau));
}

double reconstruction_loss(Autoencoder& ae, const Matrix& X) {
    if (X.rows() == 0) throw std::invalid_argument("reconstruction_loss: empty batch");
    Matrix recon = ae.reconstruct_plain(X);
    return (recon - X).squaredNorm() / static_cast<double>(X.rows());
}

double cross_entropy(const Matrix& logits, const Labels& labels) {
    return ad::value(ad::softmax_xent(ad::constant(logits), labels));
}

namespace {

// FGSM on the contrastive loss: anchors fixed at the clean (augmented)
// embeddings, positives recomputed from the candidate point.
Matrix contrastive_fgsm(Autoencoder& ae, const Matrix& anchors, const Matrix& x_start, double tau,
                        const ThreatModel& tm) {
    LossGrad loss_of = [&](const Matrix& xc) {
        ad::Graph g;
        ad::Var xv = ad::leaf(xc);
        ad::Var pos = ae.project(g, ae.encode(g, xv));
        ad::Var loss = ad::contrastive(ad::constant(anchors), pos, tau);
        ad::backward(loss);
        return std::make_pair(ad::value(loss), xv->grad);
    };
    return fgsm(loss_of, x_start, tm);
}

}  // namespace

ad::Var cropd_objective_var(ad::Graph& g, Autoencoder& ae, const Matrix& X, double lambda, const ThreatModel& tm,
                            double tau, const AugmentationPolicy& aug, const std::vector<int64_t>& shape,
                            uint64_t seed, CropdDiagnostics* diag) {
    if (X.rows() == 0) throw std::invalid_argument("cropd_objective: empty batch");
    if (lambda < 0.0) throw std::invalid_argument("cropd_objective: lambda must be >= 0");

    ad::Var xv = ad::constant(X);
    ad::Var recon = ad::mse_rows(ae.decode(g, ae.encode(g, xv)), xv);
    if (diag) diag->recon_term = ad::value(recon);
    if (lambda == 0.0) {
        if (diag) diag->contrastive_term = 0.0;
        return recon;  // Vanilla reduction, bit-consistent with reconstruction_loss
    }
    if (X.rows() < 2) throw std::invalid_argument("cropd_objective: lambda > 0 needs batch size >= 2");

    Matrix x_anchor = aug.enabled ? augment(X, shape, aug, seed) : X;
    Matrix anchors = ae.project_plain(ae.encode_plain(x_anchor));
    Matrix x_adv = contrastive_fgsm(ae, anchors, X, tau, tm);

    ad::Var anchor_var = ae.project(g, ae.encode(g, ad::constant(x_anchor)));
    ad::Var pos_var = ae.project(g, ae.encode(g, ad::constant(x_adv)));
    ad::Var con = ad::contrastive(anchor_var, pos_var, tau);
    if (diag) {
        diag->contrastive_term = ad::value(con);
        diag->x_adv = x_adv;
        diag->projector_degenerate = ae.projector_degenerate();
    }
    return ad::add(recon, ad::scale(con, lambda));
}

std::pair<double, CropdDiagnostics> cropd_objective(Autoencoder& ae, const Matrix& X, double lambda,
                                                    const ThreatModel& tm, double tau,
                                                    const AugmentationPolicy& aug, const std::vector<int64_t>& shape,
                                                    uint64_t seed) {
    CropdDiagnostics diag;
    ad::Graph g;
    ad::Var loss = cropd_objective_var(g, ae, X, lambda, tm, tau, aug, shape, seed, &diag);
    return {ad::value(loss), diag};
}

ad::Var arae_objective_var(ad::Graph& g, Autoencoder& ae, const Matrix& X, double gamma, const ThreatModel& tm,
                           CropdDiagnostics* diag) {
    if (X.rows() == 0) throw std::invalid_argument("arae_objective: empty batch");
    if (gamma < 0.0) throw std::invalid_argument("arae_objective: gamma must be >= 0");

    ad::Var xv = ad::constant(X);
    ad::Var recon = ad::mse_rows(ae.decode(g, ae.encode(g, xv)), xv);
    if (diag) diag->recon_term = ad::value(recon);
    if (gamma == 0.0) return recon;

    LossGrad loss_of = [&](const Matrix& xc) {
        ad::Graph ga;
        ad::Var xcv = ad::leaf(xc);
        ad::Var l = ad::mse_rows(ae.decode(ga, ae.encode(ga, xcv)), ad::constant(X));
        ad::backward(l);
        return std::make_pair(ad::value(l), xcv->grad);
    };
    Matrix x_adv = fgsm(loss_of, X, tm);
    ad::Var adv_recon = ad::mse_rows(ae.decode(g, ae.encode(g, ad::constant(x_adv))), xv);
    if (diag) {
        diag->contrastive_term = ad::value(adv_recon);  // adversarial term slot
        diag->x_adv = x_adv;
    }
    return ad::add(recon, ad::scale(adv_recon, gamma));
}

double arae_objective(Autoencoder& ae, const Matrix& X, double gamma, const ThreatModel& tm) {
    ad::Graph g;
    return ad::value(arae_objective_var(g, ae, X, gamma, tm, nullptr));
}

}  // namespace cropd
