#pragma once

#include "cropd/tensor.hpp"

#include <functional>
#include <optional>

namespace cropd {

enum class Norm { L2, Linf };

struct ThreatModel {
    Norm p = Norm::Linf;
    double epsilon = 8.0 / 255.0;
    int64_t steps = 1;
    double step_size = 8.0 / 255.0;
    std::optional<std::pair<double, double>> clamp_range;

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("ThreatModel: epsilon must be positive");
        if (!(step_size > 0.0)) throw std::invalid_argument("ThreatModel: step_size must be positive");
        if (steps < 1) throw std::invalid_argument("ThreatModel: steps must be >= 1");
    }

    static ThreatModel fgsm_preset(double eps, Norm p = Norm::Linf) { return {p, eps, 1, eps, {}}; }
    static ThreatModel pgd10_preset(double eps, Norm p = Norm::Linf) { return {p, eps, 10, eps / 5.0, {}}; }
    static ThreatModel pgd20_preset(double eps, Norm p = Norm::Linf) { return {p, eps, 20, eps / 10.0, {}}; }
};

// Batch loss with gradient w.r.t. the inputs. Row-coupled losses are allowed;
// the attack perturbs the whole batch jointly.
using LossGrad = std::function<std::pair<double, Matrix>(const Matrix&)>;

// Per-row projection of x_adv onto the epsilon-ball around x (then clamp).
Matrix project_onto_ball(const Matrix& x_adv, const Matrix& x, const ThreatModel& tm);

// Single-step maximizer. Zero gradient rows are left unperturbed.
Matrix fgsm(const LossGrad& loss_of, const Matrix& x, const ThreatModel& tm);

// Iterated sign/normalized ascent with projection after every step; starts
// at x (no random start).
Matrix pgd(const LossGrad& loss_of, const Matrix& x, const ThreatModel& tm);

}  // namespace cropd
