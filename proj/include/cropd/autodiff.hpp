#pragma once

// Small reverse-mode autodiff over Eigen matrices. Graphs are built per
// forward pass; parameters enter through Graph::param so one backward pass
// accumulates gradients for every use of a shared parameter.

#include "cropd/tensor.hpp"

#include <functional>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cropd::ad {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Matrix val;
    Matrix grad;  // allocated lazily by backward()
    std::vector<Var> parents;
    std::function<void(Node&)> backprop;  // scatter this->grad into parents
    bool requires_grad = true;

    explicit Node(Matrix v) : val(std::move(v)) {}
    void ensure_grad() {
        if (grad.size() == 0) grad = Matrix::Zero(val.rows(), val.cols());
    }
};

inline Var leaf(Matrix v) { return std::make_shared<Node>(std::move(v)); }

inline Var constant(Matrix v) {
    auto n = std::make_shared<Node>(std::move(v));
    n->requires_grad = false;
    return n;
}

// Maps parameter storage to graph leaves so every forward in one graph
// shares the same leaf (and hence accumulates into one gradient).
class Graph {
public:
    Var param(Matrix& m) {
        auto it = leaves_.find(&m);
        if (it != leaves_.end()) return it->second;
        Var v = leaf(m);
        leaves_.emplace(&m, v);
        order_.push_back(&m);
        return v;
    }
    const Matrix& grad_of(const Matrix& m) const {
        auto it = leaves_.find(const_cast<Matrix*>(&m));
        if (it == leaves_.end()) throw std::runtime_error("parameter not in graph");
        return it->second->grad;
    }
    bool contains(const Matrix& m) const { return leaves_.count(const_cast<Matrix*>(&m)) > 0; }
    const std::vector<Matrix*>& params() const { return order_; }

private:
    std::unordered_map<Matrix*, Var> leaves_;
    std::vector<Matrix*> order_;
};

namespace detail {
inline void topo(const Var& v, std::unordered_set<Node*>& seen, std::vector<Var>& out) {
    if (!v || seen.count(v.get())) return;
    seen.insert(v.get());
    for (auto& p : v->parents) topo(p, seen, out);
    out.push_back(v);
}
}  // namespace detail

inline void backward(const Var& root) {
    if (root->val.size() != 1) throw std::invalid_argument("backward requires a scalar root");
    std::unordered_set<Node*> seen;
    std::vector<Var> order;
    detail::topo(root, seen, order);
    for (auto& n : order) n->ensure_grad();
    root->grad(0, 0) = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node& n = **it;
        if (n.backprop) n.backprop(n);
    }
}

inline double value(const Var& v) { return v->val(0, 0); }

// ---- ops ----

inline Var add(const Var& a, const Var& b) {
    auto n = leaf(a->val + b->val);
    n->parents = {a, b};
    n->backprop = [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->grad += n.grad;
        if (n.parents[1]->requires_grad) n.parents[1]->grad += n.grad;
    };
    return n;
}

inline Var sub(const Var& a, const Var& b) {
    auto n = leaf(a->val - b->val);
    n->parents = {a, b};
    n->backprop = [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->grad += n.grad;
        if (n.parents[1]->requires_grad) n.parents[1]->grad -= n.grad;
    };
    return n;
}

inline Var scale(const Var& a, double s) {
    auto n = leaf(a->val * s);
    n->parents = {a};
    n->backprop = [s](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->grad += s * n.grad;
    };
    return n;
}

inline Var matmul(const Var& a, const Var& b) {
    auto n = leaf(a->val * b->val);
    n->parents = {a, b};
    n->backprop = [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->grad += n.grad * n.parents[1]->val.transpose();
        if (n.parents[1]->requires_grad) n.parents[1]->grad += n.parents[0]->val.transpose() * n.grad;
    };
    return n;
}

// y = x * W + b, b broadcast over rows (b is 1 x cols)
inline Var linear(const Var& x, const Var& w, const Var& b) {
    auto n = leaf((x->val * w->val).rowwise() + RowVector(b->val.row(0)));
    n->parents = {x, w, b};
    n->backprop = [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->grad += n.grad * n.parents[1]->val.transpose();
        if (n.parents[1]->requires_grad) n.parents[1]->grad += n.parents[0]->val.transpose() * n.grad;
        if (n.parents[2]->requires_grad) n.parents[2]->grad += n.grad.colwise().sum();
    };
    return n;
}

inline Var relu(const Var& a) {
    auto n = leaf(a->val.cwiseMax(0.0));
    n->parents = {a};
    n->backprop = [](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        n.parents[0]->grad += (n.parents[0]->val.array() > 0.0).cast<double>().matrix().cwiseProduct(n.grad);
    };
    return n;
}

inline Var gelu(const Var& a) {
    auto phi = [](double t) { return 0.5 * (1.0 + std::erf(t / std::sqrt(2.0))); };
    Matrix out = a->val.unaryExpr([&](double t) { return t * phi(t); });
    auto n = leaf(std::move(out));
    n->parents = {a};
    n->backprop = [phi](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        Matrix d = n.parents[0]->val.unaryExpr([&](double t) {
            double pdf = std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
            return phi(t) + t * pdf;
        });
        n.parents[0]->grad += d.cwiseProduct(n.grad);
    };
    return n;
}

// Elementwise product with a broadcast row vector (fixed, no grad to it).
inline Var mask_cols(const Var& a, const RowVector& mask) {
    Matrix out = a->val.array().rowwise() * mask.array();
    auto n = leaf(std::move(out));
    n->parents = {a};
    RowVector m = mask;
    n->backprop = [m](Node& n) {
        if (n.parents[0]->requires_grad)
            n.parents[0]->grad += (n.grad.array().rowwise() * m.array()).matrix();
    };
    return n;
}

// Per-row L2 normalization. A zero row becomes e1 (flagged) with zero gradient.
inline Var row_normalize(const Var& a, bool* degenerate_flag = nullptr) {
    Matrix out = a->val;
    std::vector<char> zero_row(static_cast<size_t>(a->val.rows()), 0);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        double nrm = out.row(i).norm();
        if (nrm < 1e-300) {
            out.row(i).setZero();
            out(i, 0) = 1.0;
            zero_row[static_cast<size_t>(i)] = 1;
            if (degenerate_flag) *degenerate_flag = true;
        } else {
            out.row(i) /= nrm;
        }
    }
    auto n = leaf(std::move(out));
    n->parents = {a};
    n->backprop = [zero_row](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        const Matrix& x = n.parents[0]->val;
        const Matrix& y = n.val;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (zero_row[static_cast<size_t>(i)]) continue;
            double nrm = x.row(i).norm();
            RowVector g = n.grad.row(i);
            double dot = g.dot(y.row(i));
            n.parents[0]->grad.row(i) += (g - dot * RowVector(y.row(i))) / nrm;
        }
    };
    return n;
}

// Mean over rows of the squared L2 distance between rows of a and b.
inline Var mse_rows(const Var& a, const Var& b) {
    double nrows = static_cast<double>(a->val.rows());
    Matrix diff = a->val - b->val;
    Matrix out(1, 1);
    out(0, 0) = diff.squaredNorm() / nrows;
    auto n = leaf(std::move(out));
    n->parents = {a, b};
    n->backprop = [nrows](Node& n) {
        Matrix d = (2.0 / nrows) * (n.parents[0]->val - n.parents[1]->val) * n.grad(0, 0);
        if (n.parents[0]->requires_grad) n.parents[0]->grad += d;
        if (n.parents[1]->requires_grad) n.parents[1]->grad -= d;
    };
    return n;
}

// Mean cross-entropy of softmax(logits) against integer labels.
inline Var softmax_xent(const Var& logits, const Labels& labels) {
    const Matrix& z = logits->val;
    if (static_cast<size_t>(z.rows()) != labels.size())
        throw std::invalid_argument("softmax_xent: batch/label mismatch");
    Matrix probs(z.rows(), z.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        int32_t y = labels[static_cast<size_t>(i)];
        if (y < 0 || y >= z.cols()) throw std::invalid_argument("softmax_xent: label out of range");
        double mx = z.row(i).maxCoeff();
        RowVector e = (z.row(i).array() - mx).exp();
        double s = e.sum();
        probs.row(i) = e / s;
        total += -(z(i, y) - mx - std::log(s));
    }
    Matrix out(1, 1);
    out(0, 0) = total / static_cast<double>(z.rows());
    auto n = leaf(std::move(out));
    n->parents = {logits};
    n->backprop = [probs, labels](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        Matrix d = probs;
        for (Eigen::Index i = 0; i < d.rows(); ++i) d(i, labels[static_cast<size_t>(i)]) -= 1.0;
        n.parents[0]->grad += (n.grad(0, 0) / static_cast<double>(d.rows())) * d;
    };
    return n;
}

// Batch adversarial contrastive loss over unit-norm rows.
// anchors = clean embeddings, positives = adversarial embeddings (row-aligned).
// Per row i, with pool G = [anchors; positives]:
//   l_i = -sim(pos_i, anc_i)/tau + log sum_{j != i, j != M+i} exp(sim(anc_i, G_j)/tau)
// and the result is the mean over rows. The denominator holds negatives only.
inline Var contrastive(const Var& anchors, const Var& positives, double tau) {
    const Matrix& A = anchors->val;
    const Matrix& P = positives->val;
    Eigen::Index M = A.rows();
    if (M < 2) throw std::invalid_argument("contrastive: need at least 2 pairs");
    if (tau <= 0.0) throw std::invalid_argument("contrastive: tau must be positive");
    Matrix G(2 * M, A.cols());
    G << A, P;
    Matrix S = (A * G.transpose()) / tau;  // M x 2M
    // Row-wise log-sum-exp over negatives, and softmax weights for backward.
    Matrix W = Matrix::Zero(M, 2 * M);
    Vector pos_sim(M);
    double total = 0.0;
    for (Eigen::Index i = 0; i < M; ++i) {
        pos_sim(i) = A.row(i).dot(P.row(i)) / tau;
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < 2 * M; ++j)
            if (j != i && j != M + i) mx = std::max(mx, S(i, j));
        double s = 0.0;
        for (Eigen::Index j = 0; j < 2 * M; ++j)
            if (j != i && j != M + i) s += std::exp(S(i, j) - mx);
        double lse = mx + std::log(s);
        for (Eigen::Index j = 0; j < 2 * M; ++j)
            if (j != i && j != M + i) W(i, j) = std::exp(S(i, j) - lse);
        total += -pos_sim(i) + lse;
    }
    Matrix out(1, 1);
    out(0, 0) = total / static_cast<double>(M);
    auto n = leaf(std::move(out));
    n->parents = {anchors, positives};
    n->backprop = [W, tau, M](Node& n) {
        const Matrix& A = n.parents[0]->val;
        const Matrix& P = n.parents[1]->val;
        double g = n.grad(0, 0) / (static_cast<double>(M) * tau);
        Matrix G(2 * M, A.cols());
        G << A, P;
        // d/dA from the log-sum-exp rows: W * G; d/dG from transpose: W^T * A.
        Matrix dA = g * (W * G);
        Matrix dG = g * (W.transpose() * A);
        Matrix dP = dG.bottomRows(M);
        dA += dG.topRows(M);
        // positive similarity term
        dA -= g * P;
        dP -= g * A;
        if (n.parents[0]->requires_grad) n.parents[0]->grad += dA;
        if (n.parents[1]->requires_grad) n.parents[1]->grad += dP;
    };
    return n;
}

}  // namespace cropd::ad
