#include "cropd/oracles.hpp"

#include <cmath>

namespace cropd::oracles {

namespace {
double cos_sim(const RowVector& u, const RowVector& v) {
    return u.dot(v) / (u.norm() * v.norm());
}
}  // namespace

double naive_contrastive(const Matrix& anchors, const Matrix& positives, double tau) {
    const Eigen::Index m = anchors.rows();
    if (m < 2) throw std::invalid_argument("naive_contrastive: need M >= 2");
    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        RowVector anchor = anchors.row(i);
        RowVector positive = positives.row(i);
        double numerator = std::exp(cos_sim(positive, anchor) / tau);
        double denominator = 0.0;
        // negatives: every pool member except x_i and x_i^adv
        for (Eigen::Index j = 0; j < m; ++j) {
            if (j == i) continue;
            denominator += std::exp(cos_sim(anchor, RowVector(anchors.row(j))) / tau);
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            if (j == i) continue;
            denominator += std::exp(cos_sim(anchor, RowVector(positives.row(j))) / tau);
        }
        total += -std::log(numerator / denominator);
    }
    return total / static_cast<double>(m);
}

std::pair<Vector, double> linear_linf_max(const Vector& w, const Vector& x, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("linear_linf_max: eps must be positive");
    Vector x_star = x;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) > 0.0)
            x_star(i) += eps;
        else if (w(i) < 0.0)
            x_star(i) -= eps;
        // w(i) == 0: any feasible coordinate; keep x(i)
    }
    return {x_star, w.dot(x) + eps * w.template lpNorm<1>()};
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
    Matrix g(x.rows(), x.cols());
    Matrix xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double orig = xp.data()[i];
        xp.data()[i] = orig + step;
        double lp = f(xp);
        xp.data()[i] = orig - step;
        double lm = f(xp);
        xp.data()[i] = orig;
        g.data()[i] = (lp - lm) / (2.0 * step);
    }
    return g;
}

double logistic_regression_accuracy(const Matrix& train_x, const Labels& train_y, const Matrix& test_x,
                                    const Labels& test_y, int iters, double lr) {
    const Eigen::Index n = train_x.rows(), d = train_x.cols();
    Vector w = Vector::Zero(d);
    double b = 0.0;
    for (int it = 0; it < iters; ++it) {
        Vector gw = Vector::Zero(d);
        double gb = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double z = train_x.row(i).dot(w) + b;
            double p = 1.0 / (1.0 + std::exp(-z));
            double err = p - (train_y[static_cast<size_t>(i)] == 1 ? 1.0 : 0.0);
            gw += err * train_x.row(i).transpose();
            gb += err;
        }
        w -= lr / static_cast<double>(n) * gw;
        b -= lr / static_cast<double>(n) * gb;
    }
    int64_t correct = 0;
    for (Eigen::Index i = 0; i < test_x.rows(); ++i) {
        int pred = (test_x.row(i).dot(w) + b > 0.0) ? 1 : 0;
        if (pred == test_y[static_cast<size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_x.rows());
}

double binomial_ci_halfwidth(double p, int64_t n) {
    return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace cropd::oracles
