#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cropd/autodiff.hpp"
#include "cropd/oracles.hpp"

#include "helpers.hpp"

using namespace cropd;
using testutil::max_abs_diff;

namespace {

// Deterministic scalarizer: mean squared distance to a fixed target matrix.
double scalarized(const std::function<ad::Var(ad::Graph&, const ad::Var&)>& op, const Matrix& x,
                  const Matrix& target) {
    ad::Graph g;
    ad::Var y = op(g, ad::constant(x));
    return ad::value(ad::mse_rows(y, ad::constant(target)));
}

Matrix analytic_input_grad(const std::function<ad::Var(ad::Graph&, const ad::Var&)>& op, const Matrix& x,
                           const Matrix& target) {
    ad::Graph g;
    ad::Var in = ad::leaf(x);
    ad::Var y = op(g, in);
    ad::Var s = ad::mse_rows(y, ad::constant(target));
    ad::backward(s);
    return in->grad;
}

void check_input_grad(const std::function<ad::Var(ad::Graph&, const ad::Var&)>& op, const Matrix& x,
                      const Matrix& target, double tol = 2e-6) {
    Matrix analytic = analytic_input_grad(op, x, target);
    Matrix fd = oracles::finite_diff_grad([&](const Matrix& m) { return scalarized(op, m, target); }, x, 1e-5);
    CHECK(max_abs_diff(analytic, fd) < tol);
}

Matrix randm(Eigen::Index r, Eigen::Index c, uint64_t seed, double stddev = 1.0) {
    Rng rng(seed);
    return gaussian_matrix(r, c, rng, stddev);
}

}  // namespace

TEST_CASE("add/sub/scale gradients are exact") {
    Matrix a = randm(3, 4, 1), b = randm(3, 4, 2), t = randm(3, 4, 3);
    ad::Graph g;
    ad::Var va = ad::leaf(a), vb = ad::leaf(b);
    ad::Var s = ad::mse_rows(ad::scale(ad::sub(ad::add(va, vb), ad::constant(t)), 2.5), ad::constant(Matrix::Zero(3, 4)));
    ad::backward(s);
    // d/da of mean_i ||2.5 (a + b - t)||^2 = 2 * 2.5^2 * (a + b - t) / rows
    Matrix expect = 2.0 * 2.5 * 2.5 * (a + b - t) / 3.0;
    CHECK(max_abs_diff(va->grad, expect) < 1e-12);
    CHECK(max_abs_diff(vb->grad, expect) < 1e-12);
}

TEST_CASE("matmul gradient matches finite differences") {
    Matrix w = randm(4, 3, 10);
    Matrix x = randm(5, 4, 11), t = randm(5, 3, 12);
    check_input_grad([&](ad::Graph& g, const ad::Var& in) { return ad::matmul(in, g.param(w)); }, x, t);
    // parameter gradient too
    ad::Graph g;
    ad::Var in = ad::constant(x);
    ad::Var s = ad::mse_rows(ad::matmul(in, g.param(w)), ad::constant(t));
    ad::backward(s);
    Matrix fd = oracles::finite_diff_grad(
        [&](const Matrix& m) {
            Matrix diff = x * m - t;
            return diff.squaredNorm() / 5.0;
        },
        w, 1e-5);
    CHECK(max_abs_diff(g.grad_of(w), fd) < 2e-6);
}

TEST_CASE("linear layer gradients (weights, bias, input)") {
    Matrix w = randm(4, 2, 20);
    Matrix b = randm(1, 2, 21);
    Matrix x = randm(6, 4, 22), t = randm(6, 2, 23);
    ad::Graph g;
    ad::Var in = ad::leaf(x);
    ad::Var s = ad::mse_rows(ad::linear(in, g.param(w), g.param(b)), ad::constant(t));
    ad::backward(s);
    auto f = [&](const Matrix& ww, const Matrix& bb, const Matrix& xx) {
        Matrix y = (xx * ww).rowwise() + RowVector(bb.row(0));
        return (y - t).squaredNorm() / 6.0;
    };
    Matrix fdw = oracles::finite_diff_grad([&](const Matrix& m) { return f(m, b, x); }, w, 1e-5);
    Matrix fdb = oracles::finite_diff_grad([&](const Matrix& m) { return f(w, m, x); }, b, 1e-5);
    Matrix fdx = oracles::finite_diff_grad([&](const Matrix& m) { return f(w, b, m); }, x, 1e-5);
    CHECK(max_abs_diff(g.grad_of(w), fdw) < 2e-6);
    CHECK(max_abs_diff(g.grad_of(b), fdb) < 2e-6);
    CHECK(max_abs_diff(in->grad, fdx) < 2e-6);
}

TEST_CASE("relu gradient away from the kink") {
    Matrix x = randm(4, 5, 30);
    // push values away from zero so central differences are clean
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x.data()[i] += (x.data()[i] >= 0.0 ? 0.2 : -0.2);
    Matrix t = randm(4, 5, 31);
    check_input_grad([](ad::Graph&, const ad::Var& in) { return ad::relu(in); }, x, t);
}

TEST_CASE("gelu gradient matches finite differences") {
    Matrix x = randm(4, 5, 40), t = randm(4, 5, 41);
    check_input_grad([](ad::Graph&, const ad::Var& in) { return ad::gelu(in); }, x, t);
}

TEST_CASE("mask_cols blocks gradient on dropped columns") {
    RowVector mask(4);
    mask << 1.0, 0.0, 1.0, 0.0;
    Matrix x = randm(3, 4, 50), t = randm(3, 4, 51);
    check_input_grad([&](ad::Graph&, const ad::Var& in) { return ad::mask_cols(in, mask); }, x, t);
    Matrix g = analytic_input_grad([&](ad::Graph&, const ad::Var& in) { return ad::mask_cols(in, mask); }, x, t);
    CHECK(g.col(1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.col(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("row_normalize gradient and zero-row handling") {
    Matrix x = randm(3, 4, 60);
    Matrix t = randm(3, 4, 61);
    check_input_grad([](ad::Graph&, const ad::Var& in) { return ad::row_normalize(in); }, x, t);

    SUBCASE("zero row becomes e1 with zero gradient and raises the flag") {
        Matrix xz = x;
        xz.row(1).setZero();
        bool flag = false;
        ad::Graph g;
        ad::Var in = ad::leaf(xz);
        ad::Var y = ad::row_normalize(in, &flag);
        CHECK(flag);
        CHECK(y->val(1, 0) == 1.0);
        CHECK(y->val.row(1).tail(3).cwiseAbs().maxCoeff() == 0.0);
        ad::Var s = ad::mse_rows(y, ad::constant(t));
        ad::backward(s);
        CHECK(in->grad.row(1).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("unit rows stay fixed points") {
        Matrix u = testutil::unit_rows(x);
        ad::Graph g;
        ad::Var y = ad::row_normalize(ad::constant(u));
        CHECK(max_abs_diff(y->val, u) < 1e-12);
    }
}

TEST_CASE("mse_rows value and gradient") {
    Matrix a = randm(4, 3, 70), b = randm(4, 3, 71);
    ad::Graph g;
    ad::Var va = ad::leaf(a);
    ad::Var s = ad::mse_rows(va, ad::constant(b));
    CHECK(ad::value(s) == doctest::Approx((a - b).squaredNorm() / 4.0).epsilon(1e-12));
    ad::backward(s);
    CHECK(max_abs_diff(va->grad, 2.0 / 4.0 * (a - b)) < 1e-12);
}

TEST_CASE("softmax_xent values and gradient") {
    SUBCASE("uniform logits over K classes give log K") {
        Matrix z = Matrix::Zero(3, 2);
        Labels y = {0, 1, 0};
        ad::Var s = ad::softmax_xent(ad::constant(z), y);
        CHECK(ad::value(s) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("gradient is (softmax - onehot) / n") {
        Matrix z = randm(5, 3, 80);
        Labels y = {0, 2, 1, 1, 0};
        ad::Graph g;
        ad::Var in = ad::leaf(z);
        ad::Var s = ad::softmax_xent(in, y);
        ad::backward(s);
        Matrix fd = oracles::finite_diff_grad(
            [&](const Matrix& m) { return ad::value(ad::softmax_xent(ad::constant(m), y)); }, z, 1e-5);
        CHECK(max_abs_diff(in->grad, fd) < 2e-6);
    }
    SUBCASE("batch/label mismatch throws") {
        Matrix z = Matrix::Zero(3, 2);
        Labels y = {0, 1};
        CHECK_THROWS_AS(ad::softmax_xent(ad::constant(z), y), std::invalid_argument);
    }
    SUBCASE("label out of range throws") {
        Matrix z = Matrix::Zero(2, 2);
        Labels y = {0, 2};
        CHECK_THROWS_AS(ad::softmax_xent(ad::constant(z), y), std::invalid_argument);
    }
}

TEST_CASE("fused contrastive op matches the reference loop") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Eigen::Index M = 2 + static_cast<Eigen::Index>(seed % 7);
        Matrix A = testutil::unit_rows(randm(M, 6, 100 + seed));
        Matrix P = testutil::unit_rows(randm(M, 6, 200 + seed));
        double tau = 0.25 + 0.1 * static_cast<double>(seed % 5);
        double fused = ad::value(ad::contrastive(ad::constant(A), ad::constant(P), tau));
        double naive = oracles::naive_contrastive(A, P, tau);
        CHECK(fused == doctest::Approx(naive).epsilon(1e-10));
    }
}

TEST_CASE("contrastive gradients match finite differences") {
    Matrix A = testutil::unit_rows(randm(4, 5, 300));
    Matrix P = testutil::unit_rows(randm(4, 5, 301));
    double tau = 0.5;
    ad::Graph g;
    ad::Var va = ad::leaf(A), vp = ad::leaf(P);
    ad::Var s = ad::contrastive(va, vp, tau);
    ad::backward(s);
    Matrix fdA = oracles::finite_diff_grad(
        [&](const Matrix& m) { return ad::value(ad::contrastive(ad::constant(m), ad::constant(P), tau)); }, A, 1e-5);
    Matrix fdP = oracles::finite_diff_grad(
        [&](const Matrix& m) { return ad::value(ad::contrastive(ad::constant(A), ad::constant(m), tau)); }, P, 1e-5);
    CHECK(max_abs_diff(va->grad, fdA) < 2e-6);
    CHECK(max_abs_diff(vp->grad, fdP) < 2e-6);
}

TEST_CASE("contrastive argument validation") {
    Matrix one = testutil::unit_rows(randm(1, 4, 310));
    Matrix two = testutil::unit_rows(randm(2, 4, 311));
    CHECK_THROWS_AS(ad::contrastive(ad::constant(one), ad::constant(one), 0.5), std::invalid_argument);
    CHECK_THROWS_AS(ad::contrastive(ad::constant(two), ad::constant(two), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ad::contrastive(ad::constant(two), ad::constant(two), -1.0), std::invalid_argument);
}

TEST_CASE("shared parameters accumulate across uses") {
    Matrix w = randm(3, 3, 400);
    Matrix x = randm(2, 3, 401), t = randm(2, 3, 402);
    ad::Graph g;
    ad::Var vw = g.param(w);
    CHECK(g.param(w) == vw);  // same leaf on reuse
    ad::Var y = ad::add(ad::matmul(ad::constant(x), vw), ad::matmul(ad::constant(x), vw));
    ad::Var s = ad::mse_rows(y, ad::constant(t));
    ad::backward(s);
    Matrix fd = oracles::finite_diff_grad(
        [&](const Matrix& m) {
            Matrix yy = 2.0 * (x * m);
            return (yy - t).squaredNorm() / 2.0;
        },
        w, 1e-5);
    CHECK(max_abs_diff(g.grad_of(w), fd) < 2e-6);
}

TEST_CASE("backward requires a scalar root; constants take no gradient") {
    Matrix x = randm(2, 2, 500);
    ad::Var v = ad::leaf(x);
    CHECK_THROWS_AS(ad::backward(v), std::invalid_argument);

    ad::Var c = ad::constant(x);
    ad::Var s = ad::mse_rows(c, ad::constant(Matrix::Zero(2, 2)));
    ad::backward(s);
    CHECK(c->grad.cwiseAbs().maxCoeff() == 0.0);
}
