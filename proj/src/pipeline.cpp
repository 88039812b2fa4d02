#include "cropd/pipeline.hpp"

#include <algorithm>

namespace cropd {

std::string variant_name(PipelineVariant v) {
    switch (v) {
        case PipelineVariant::Identity: return "Identity";
        case PipelineVariant::Vanilla: return "Vanilla";
        case PipelineVariant::ARAE: return "ARAE";
        case PipelineVariant::CRoPD: return "CRoPD";
    }
    return "?";
}

PipelineVariant variant_from_name(const std::string& s) {
    if (s == "Identity") return PipelineVariant::Identity;
    if (s == "Vanilla") return PipelineVariant::Vanilla;
    if (s == "ARAE") return PipelineVariant::ARAE;
    if (s == "CRoPD") return PipelineVariant::CRoPD;
    throw std::invalid_argument("unknown pipeline variant: " + s);
}

ad::Var Pipeline::forward(ad::Graph& g, const ad::Var& x) {
    validate();
    ad::Var h = x;
    if (autoencoder) h = autoencoder->decode(g, autoencoder->encode(g, h));
    return head.forward(g, foundation.forward(g, h));
}

Matrix Pipeline::forward_plain(const Matrix& x) {
    ad::Graph g;
    return forward(g, ad::constant(x))->val;
}

LossGrad pipeline_ce_lossgrad(Pipeline& pipe, const Labels& labels) {
    return [&pipe, labels](const Matrix& x) {
        ad::Graph g;
        ad::Var xv = ad::leaf(x);
        ad::Var loss = ad::softmax_xent(pipe.forward(g, xv), labels);
        ad::backward(loss);
        return std::make_pair(ad::value(loss), xv->grad);
    };
}

CiInterval bootstrap_ci(const std::vector<uint8_t>& correct, int64_t repeats, uint64_t seed) {
    if (correct.empty()) throw std::invalid_argument("bootstrap_ci: empty vector");
    if (repeats < 100) throw std::invalid_argument("bootstrap_ci: repeats must be >= 100");
    const size_t n = correct.size();
    double mean = 0.0;
    for (auto b : correct) mean += b;
    mean /= static_cast<double>(n);

    Rng rng(seed);
    std::uniform_int_distribution<size_t> pick(0, n - 1);
    std::vector<double> stats(static_cast<size_t>(repeats));
    for (int64_t r = 0; r < repeats; ++r) {
        int64_t hits = 0;
        for (size_t i = 0; i < n; ++i) hits += correct[pick(rng)];
        stats[static_cast<size_t>(r)] = static_cast<double>(hits) / static_cast<double>(n);
    }
    std::sort(stats.begin(), stats.end());
    auto pct = [&](double q) {
        double idx = q * static_cast<double>(repeats - 1);
        size_t lo = static_cast<size_t>(idx);
        size_t hi = std::min(lo + 1, static_cast<size_t>(repeats - 1));
        double frac = idx - static_cast<double>(lo);
        return stats[lo] * (1.0 - frac) + stats[hi] * frac;
    };
    return {mean, pct(0.025), pct(0.975)};
}

namespace {

std::vector<uint8_t> correctness(Pipeline& pipe, const Matrix& x, const Labels& labels) {
    Matrix logits = pipe.forward_plain(x);
    std::vector<uint8_t> out(labels.size());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index argmax;
        logits.row(i).maxCoeff(&argmax);
        out[static_cast<size_t>(i)] = (static_cast<int32_t>(argmax) == labels[static_cast<size_t>(i)]) ? 1 : 0;
    }
    return out;
}

double budget_violation(const Matrix& x_adv, const Matrix& x, const ThreatModel& tm) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double dist = (tm.p == Norm::Linf) ? (x_adv.row(i) - x.row(i)).cwiseAbs().maxCoeff()
                                           : (x_adv.row(i) - x.row(i)).norm();
        worst = std::max(worst, dist - tm.epsilon);
    }
    return worst;
}

}  // namespace

EvalResult evaluate(Pipeline& pipe, const LabeledDataset& ds,
                    const std::vector<std::pair<std::string, ThreatModel>>& attacks, int64_t bootstrap_repeats,
                    uint64_t bootstrap_seed, int64_t batch_size) {
    pipe.validate();
    EvalResult res;
    const int64_t n = ds.size();
    res.per_sample_correct["clean"] = {};
    for (const auto& [name, tm] : attacks) {
        res.per_sample_correct[name] = {};
        res.attack_budget[name] = tm;
    }

    for (int64_t start = 0; start < n; start += batch_size) {
        int64_t count = std::min(batch_size, n - start);
        Matrix x = ds.inputs.middleRows(start, count);
        Labels y(ds.labels.begin() + start, ds.labels.begin() + start + count);

        auto clean_bits = correctness(pipe, x, y);
        auto& cv = res.per_sample_correct["clean"];
        cv.insert(cv.end(), clean_bits.begin(), clean_bits.end());

        for (const auto& [name, tm] : attacks) {
            Matrix x_adv = pgd(pipeline_ce_lossgrad(pipe, y), x, tm);
            res.max_budget_violation = std::max(res.max_budget_violation, budget_violation(x_adv, x, tm));
            auto bits = correctness(pipe, x_adv, y);
            auto& v = res.per_sample_correct[name];
            v.insert(v.end(), bits.begin(), bits.end());
        }
    }

    for (auto& [name, bits] : res.per_sample_correct) {
        CiInterval ci = bootstrap_ci(bits, bootstrap_repeats, bootstrap_seed);
        res.ci[name] = ci;
        if (name == "clean")
            res.clean_acc = ci.mean;
        else
            res.robust_acc[name] = ci.mean;
    }
    return res;
}

EvalResult transfer_evaluate(const Autoencoder& preproc, PipelineVariant variant, const Foundation& foundation,
                             const LinearHead& head, const LabeledDataset& target_ds,
                             const std::vector<std::pair<std::string, ThreatModel>>& attacks,
                             int64_t bootstrap_repeats, uint64_t bootstrap_seed) {
    Autoencoder ae = preproc;
    if (ae.spec().encoder_widths.front() != target_ds.dim())
        throw std::invalid_argument("transfer_evaluate: pre-processor input dim incompatible with target dataset");
    Pipeline pipe;
    pipe.variant = variant;
    pipe.autoencoder = std::move(ae);
    pipe.foundation = foundation;
    pipe.head = head;
    return evaluate(pipe, target_ds, attacks, bootstrap_repeats, bootstrap_seed);
}

}  // namespace cropd
