#pragma once

// Independent reference implementations used by tests and the theory checks.
// These must stay structurally independent of the main implementations; they
// depend on raw matrices only.

#include "cropd/tensor.hpp"

#include <functional>

namespace cropd::oracles {

struct OracleReport {
    std::string name;
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;
    int64_t trials = 0;
    bool pass = false;
};

// Direct double-loop translation of the per-item contrastive loss, averaged
// over anchors. Negatives enumerated explicitly as the 2M pool minus the pair.
double naive_contrastive(const Matrix& anchors, const Matrix& positives, double tau);

// Closed-form maximizer of <w, x'> over the infinity ball around x.
std::pair<Vector, double> linear_linf_max(const Vector& w, const Vector& x, double eps);

// Central differences per coordinate.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x, double step);

// Plain gradient-descent logistic regression; returns test accuracy.
double logistic_regression_accuracy(const Matrix& train_x, const Labels& train_y, const Matrix& test_x,
                                    const Labels& test_y, int iters = 500, double lr = 0.5);

// Normal-approximation half width of a 95% binomial interval.
double binomial_ci_halfwidth(double p, int64_t n);

}  // namespace cropd::oracles
