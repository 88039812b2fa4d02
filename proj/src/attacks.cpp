#include "cropd/attacks.hpp"

namespace cropd {

Matrix project_onto_ball(const Matrix& x_adv, const Matrix& x, const ThreatModel& tm) {
    if (x_adv.rows() != x.rows() || x_adv.cols() != x.cols())
        throw std::invalid_argument("project_onto_ball: shape mismatch");
    Matrix delta = x_adv - x;
    if (tm.p == Norm::Linf) {
        delta = delta.cwiseMax(-tm.epsilon).cwiseMin(tm.epsilon);
    } else {
        for (Eigen::Index i = 0; i < delta.rows(); ++i) {
            double nrm = delta.row(i).norm();
            if (nrm > tm.epsilon) delta.row(i) *= tm.epsilon / nrm;
        }
    }
    Matrix out = x + delta;
    if (tm.clamp_range)
        out = out.cwiseMax(tm.clamp_range->first).cwiseMin(tm.clamp_range->second);
    return out;
}

namespace {

// Ascent direction: sign for Linf, per-row unit gradient for L2.
// Zero-gradient rows produce a zero step.
Matrix ascent_step(const Matrix& grad, const ThreatModel& tm) {
    if (tm.p == Norm::Linf) return grad.array().sign().matrix();
    Matrix dir = grad;
    for (Eigen::Index i = 0; i < dir.rows(); ++i) {
        double nrm = dir.row(i).norm();
        if (nrm > 0.0) dir.row(i) /= nrm;
    }
    return dir;
}

}  // namespace

Matrix fgsm(const LossGrad& loss_of, const Matrix& x, const ThreatModel& tm) {
    tm.validate();
    Matrix grad = loss_of(x).second;
    Matrix step = tm.epsilon * ascent_step(grad, tm);
    return project_onto_ball(x + step, x, tm);
}

Matrix pgd(const LossGrad& loss_of, const Matrix& x, const ThreatModel& tm) {
    tm.validate();
    Matrix cur = x;
    for (int64_t t = 0; t < tm.steps; ++t) {
        Matrix grad = loss_of(cur).second;
        cur = project_onto_ball(cur + tm.step_size * ascent_step(grad, tm), x, tm);
    }
    return cur;
}

}  // namespace cropd
