#include "cropd/theory.hpp"

#include <cmath>
#include <numeric>

namespace cropd {

Matrix theory_embedding(const std::optional<Autoencoder>& ae, const Matrix& x) {
    if (ae) {
        Autoencoder& a = const_cast<Autoencoder&>(*ae);
        return a.project_plain(a.encode_plain(x));
    }
    Matrix out = x;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        double nrm = out.row(i).norm();
        if (nrm < 1e-300) {
            out.row(i).setZero();
            out(i, 0) = 1.0;
        } else {
            out.row(i) /= nrm;
        }
    }
    return out;
}

Matrix contrastive_attack(std::optional<Autoencoder>& ae, const Matrix& x, double tau, const ThreatModel& tm) {
    Matrix anchors = theory_embedding(ae, x);
    LossGrad loss_of = [&](const Matrix& xc) {
        ad::Graph g;
        ad::Var xv = ad::leaf(xc);
        ad::Var emb;
        if (ae) {
            emb = ae->project(g, ae->encode(g, xv));
        } else {
            emb = ad::row_normalize(xv);
        }
        ad::Var loss = ad::contrastive(ad::constant(anchors), emb, tau);
        ad::backward(loss);
        return std::make_pair(ad::value(loss), xv->grad);
    };
    return pgd(loss_of, x, tm);
}

EtaReport estimate_eta(Autoencoder& encoder, const LabeledDataset& ds, const ThreatModel& tm, double tau,
                       int64_t exhaustive_limit, uint64_t subsample_seed) {
    ds.validate();
    std::vector<int64_t> class_counts(static_cast<size_t>(ds.num_classes), 0);
    for (auto y : ds.labels) ++class_counts[static_cast<size_t>(y)];
    int classes_present = 0;
    for (auto c : class_counts)
        if (c >= 2) ++classes_present;
    if (classes_present < 2)
        throw std::invalid_argument("estimate_eta: need at least 2 classes with 2 samples each");

    // Exhaustive below the limit, seeded subsample above it.
    std::vector<int64_t> idx(static_cast<size_t>(ds.size()));
    std::iota(idx.begin(), idx.end(), 0);
    if (ds.size() > exhaustive_limit) {
        Rng rng(subsample_seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(static_cast<size_t>(exhaustive_limit));
    }
    LabeledDataset sub = ds.subset(idx);
    const int64_t n = sub.size();

    std::optional<Autoencoder> ae = encoder;
    Matrix emb(n, encoder.spec().projector_out), emb_adv(n, encoder.spec().projector_out);
    const int64_t bs = 256;
    for (int64_t start = 0; start < n; start += bs) {
        int64_t count = std::min(bs, n - start);
        if (count < 2 && start > 0) {  // fold a lone trailing sample into the previous batch
            start -= 1;
            count += 1;
        }
        Matrix x = sub.inputs.middleRows(start, count);
        emb.middleRows(start, count) = theory_embedding(ae, x);
        emb_adv.middleRows(start, count) = theory_embedding(ae, contrastive_attack(ae, x, tau, tm));
    }

    EtaReport rep;
    rep.sample_count = n;
    rep.eta2 = std::numeric_limits<double>::infinity();
    for (int64_t i = 0; i < n; ++i) {
        rep.eta1 = std::max(rep.eta1, (emb.row(i) - emb_adv.row(i)).norm());
        ++rep.pairs_scanned;
    }
    for (int64_t i = 0; i < n; ++i) {
        for (int64_t j = i + 1; j < n; ++j) {
            ++rep.pairs_scanned;
            if (sub.labels[static_cast<size_t>(i)] == sub.labels[static_cast<size_t>(j)]) continue;
            rep.eta2 = std::min(rep.eta2, (emb.row(i) - emb.row(j)).norm());
            rep.eta2 = std::min(rep.eta2, (emb.row(i) - emb_adv.row(j)).norm());
            rep.eta2 = std::min(rep.eta2, (emb.row(j) - emb_adv.row(i)).norm());
        }
    }
    if (!std::isfinite(rep.eta2)) rep.eta2 = 0.0;
    rep.margin_ok = rep.eta2 > rep.eta1;
    return rep;
}

namespace {

struct HalfStats {
    double lhs = 0.0, clean_ce = 0.0, lcon = 0.0, max_nll = 0.0;
};

double per_sample_nll(const Matrix& logits, const Labels& y, Eigen::Index i) {
    double mx = logits.row(i).maxCoeff();
    double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    return lse - logits(i, y[static_cast<size_t>(i)]);
}

HalfStats half_stats(Pipeline& pipe, const LabeledDataset& half, const ThreatModel& tm, double tau) {
    HalfStats s;
    const int64_t n = half.size();
    const int64_t bs = 256;
    double lcon_weight = 0.0;
    for (int64_t start = 0; start < n; start += bs) {
        int64_t count = std::min(bs, n - start);
        if (count < 2 && start > 0) {
            start -= 1;
            count += 1;
        }
        Matrix x = half.inputs.middleRows(start, count);
        Labels y(half.labels.begin() + start, half.labels.begin() + start + count);
        Matrix x_adv = pgd(pipeline_ce_lossgrad(pipe, y), x, tm);

        Matrix logits_clean = pipe.forward_plain(x);
        Matrix logits_adv = pipe.forward_plain(x_adv);
        for (Eigen::Index i = 0; i < count; ++i) {
            double cn = per_sample_nll(logits_clean, y, i);
            double an = per_sample_nll(logits_adv, y, i);
            s.clean_ce += cn;
            s.lhs += an;
            s.max_nll = std::max({s.max_nll, cn, an});
        }

        ContrastiveBatch cb;
        cb.anchors = theory_embedding(pipe.autoencoder, x);
        cb.positives = theory_embedding(pipe.autoencoder, x_adv);
        cb.tau = tau;
        s.lcon += batch_contrastive_loss(cb) * static_cast<double>(count);
        lcon_weight += static_cast<double>(count);
    }
    s.clean_ce /= static_cast<double>(n);
    s.lhs /= static_cast<double>(n);
    s.lcon /= lcon_weight;
    return s;
}

}  // namespace

std::pair<double, double> estimate_lipschitz(const std::function<Matrix(const Matrix&)>& fn,
                                             const LabeledDataset& ds, int64_t pair_budget, const ThreatModel& tm,
                                             uint64_t seed) {
    if (pair_budget < 1) throw std::invalid_argument("estimate_lipschitz: pair_budget must be >= 1");
    Rng rng(seed);
    std::uniform_int_distribution<int64_t> pick(0, ds.size() - 1);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    double upper = 0.0, lower = std::numeric_limits<double>::infinity();
    auto consider = [&](const Matrix& a, const Matrix& b) {
        double dx = (a.row(0) - b.row(0)).norm();
        if (dx < 1e-12) return;  // coincident pair
        double dy = (fn(a).row(0) - fn(b).row(0)).norm();
        upper = std::max(upper, dy / dx);
        lower = std::min(lower, dy / dx);
    };
    for (int64_t k = 0; k < pair_budget; ++k) {
        int64_t i = pick(rng), j = pick(rng);
        consider(ds.inputs.row(i), ds.inputs.row(j));
        // adversarially perturbed pair within the budget
        Matrix x = ds.inputs.row(i);
        Matrix delta(1, ds.dim());
        for (Eigen::Index c = 0; c < ds.dim(); ++c) delta(0, c) = unif(rng) * tm.epsilon;
        Matrix x_pert = project_onto_ball(x + delta, x, tm);
        consider(x, x_pert);
    }
    if (!std::isfinite(lower)) lower = 0.0;
    return {upper, lower};
}

BoundReport check_theorem_bound(Pipeline& pipe, const LabeledDataset& ds, const ThreatModel& tm,
                                std::optional<double> kappa, double tau, uint64_t split_seed,
                                int64_t lipschitz_pairs) {
    pipe.validate();
    ds.validate();
    if (ds.size() < 4) throw std::invalid_argument("check_theorem_bound: dataset too small to split");

    std::vector<int64_t> idx(static_cast<size_t>(ds.size()));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(split_seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    size_t half = idx.size() / 2;
    LabeledDataset calib = ds.subset({idx.begin(), idx.begin() + static_cast<int64_t>(half)});
    LabeledDataset holdout = ds.subset({idx.begin() + static_cast<int64_t>(half), idx.end()});

    HalfStats cs = half_stats(pipe, calib, tm, tau);
    HalfStats hs = half_stats(pipe, holdout, tm, tau);

    BoundReport rep;
    rep.calib_lhs = cs.lhs;
    rep.calib_clean_ce = cs.clean_ce;
    rep.calib_lcon = cs.lcon;
    rep.lhs = hs.lhs;
    rep.clean_ce = hs.clean_ce;
    rep.lcon = hs.lcon;
    rep.M_hat = std::max(cs.max_nll, hs.max_nll) * 1.1;

    if (kappa) {
        rep.kappa_supplied = true;
        rep.kappa_fitted = *kappa;
    } else if (cs.lcon > 0.0) {
        rep.kappa_fitted = std::max(0.0, (cs.lhs - cs.clean_ce) / cs.lcon);
    } else {
        rep.degenerate = true;
        rep.kappa_fitted = 0.0;
    }
    rep.holds_at_kappa = rep.lhs <= rep.clean_ce + rep.kappa_fitted * rep.lcon;

    // Lipschitz machinery: encoder bracket, reconstruction bracket, derived
    // decoder constant and M_C.
    std::function<Matrix(const Matrix&)> enc_fn, rec_fn;
    if (pipe.autoencoder) {
        Autoencoder& ae = *pipe.autoencoder;
        enc_fn = [&ae](const Matrix& x) { return ae.encode_plain(x); };
        rec_fn = [&ae](const Matrix& x) { return ae.reconstruct_plain(x); };
    } else {
        enc_fn = [](const Matrix& x) { return x; };
        rec_fn = [](const Matrix& x) { return x; };
    }
    auto [L_en, l_en] = estimate_lipschitz(enc_fn, ds, lipschitz_pairs, tm, split_seed + 1);
    auto [L_rec, l_rec] = estimate_lipschitz(rec_fn, ds, lipschitz_pairs, tm, split_seed + 2);
    (void)l_rec;
    rep.lipschitz.L_en = L_en;
    rep.lipschitz.l_en = l_en;
    rep.lipschitz.L_rec = L_rec;
    rep.lipschitz.L_de_z = (l_en > 0.0) ? L_rec / l_en : std::numeric_limits<double>::infinity();
    rep.lipschitz.M_C = rep.lipschitz.L_de_z * std::exp(rep.M_hat);
    return rep;
}

WitnessReport proposition1_witness(int64_t n, int64_t d, double epsilon, double delta) {
    if (!(delta > 0.0 && delta < 0.5)) throw std::invalid_argument("proposition1_witness: need 0 < delta < 1/2");
    LabeledDataset ds = make_separated_discrete(n, d, epsilon, 0);

    WitnessReport rep;
    rep.n = n;
    rep.d = d;
    rep.epsilon = epsilon;
    rep.delta = delta;

    // Identity auto-encoder: reconstruction is the input itself.
    rep.clean_recon = 0.0;

    // Worst-case feasible perturbation (scaled fractionally inside the ball
    // so the measured loss stays within the analytic budget under rounding).
    double step = epsilon * (1.0 - 1e-12);
    Matrix x_adv = ds.inputs.array() + step;
    rep.adv_recon = (x_adv - ds.inputs).squaredNorm() / static_cast<double>(n);

    // Brittle piecewise classifier: probability 1-delta of the true label on
    // the exact data points, delta anywhere else inside the epsilon ball.
    auto p_true = [&](const RowVector& x_eval, int64_t i) {
        double dist = (x_eval - RowVector(ds.inputs.row(i))).cwiseAbs().maxCoeff();
        if (dist < 1e-12) return 1.0 - delta;
        if (dist <= epsilon + 1e-12) return delta;
        return 0.5;  // outside every ball: uninformative
    };
    double clean = 0.0, adv = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        clean += -std::log(p_true(ds.inputs.row(i), i));
        adv += -std::log(p_true(x_adv.row(i), i));
    }
    rep.clean_ce = clean / static_cast<double>(n);
    rep.adv_ce = adv / static_cast<double>(n);
    return rep;
}

}  // namespace cropd
