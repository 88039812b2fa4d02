#pragma once

#include "cropd/attacks.hpp"
#include "cropd/data.hpp"
#include "cropd/losses.hpp"
#include "cropd/models.hpp"

#include <map>
#include <optional>

namespace cropd {

enum class PipelineVariant { Identity, Vanilla, ARAE, CRoPD };

std::string variant_name(PipelineVariant v);
PipelineVariant variant_from_name(const std::string& s);

// head(foundation(decode(encode(x)))), or head(foundation(x)) for Identity.
struct Pipeline {
    PipelineVariant variant = PipelineVariant::Identity;
    std::optional<Autoencoder> autoencoder;
    Foundation foundation;
    LinearHead head;

    void validate() const {
        if ((variant == PipelineVariant::Identity) == autoencoder.has_value())
            throw std::invalid_argument("Pipeline: Identity iff no autoencoder");
    }

    ad::Var forward(ad::Graph& g, const ad::Var& x);
    Matrix forward_plain(const Matrix& x);
};

struct CiInterval {
    double mean = 0.0, lo = 0.0, hi = 0.0;
};

struct EvalResult {
    double clean_acc = 0.0;
    std::map<std::string, double> robust_acc;
    std::map<std::string, std::vector<uint8_t>> per_sample_correct;  // "clean" + one per attack
    std::map<std::string, CiInterval> ci;
    std::map<std::string, ThreatModel> attack_budget;
    double max_budget_violation = 0.0;  // post-hoc feasibility re-check
};

// White-box evaluation: each attack maximizes the full-pipeline cross-entropy
// of the true label, then the perturbed points are classified.
EvalResult evaluate(Pipeline& pipe, const LabeledDataset& ds,
                    const std::vector<std::pair<std::string, ThreatModel>>& attacks, int64_t bootstrap_repeats = 1000,
                    uint64_t bootstrap_seed = 0, int64_t batch_size = 200);

// Percentile bootstrap (2.5/97.5) resampled to the full vector size.
CiInterval bootstrap_ci(const std::vector<uint8_t>& correct, int64_t repeats, uint64_t seed);

// Evaluate with a pre-processor transplanted from another (source) training run.
EvalResult transfer_evaluate(const Autoencoder& preproc, PipelineVariant variant, const Foundation& foundation,
                             const LinearHead& head, const LabeledDataset& target_ds,
                             const std::vector<std::pair<std::string, ThreatModel>>& attacks,
                             int64_t bootstrap_repeats = 1000, uint64_t bootstrap_seed = 0);

// Untargeted CE attack objective through the whole pipeline.
LossGrad pipeline_ce_lossgrad(Pipeline& pipe, const Labels& labels);

}  // namespace cropd
