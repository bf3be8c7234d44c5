// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/autograd.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

namespace mavid::ag {

namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<Node>;

Var make(Mat value, std::vector<NodePtr> parents, std::function<void(Node&)> fn) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    if (g_grad_enabled) {
        bool needs = false;
        for (const auto& p : parents) needs = needs || p->requires_grad;
        if (needs) {
            node->requires_grad = true;
            node->parents = std::move(parents);
            node->backward = std::move(fn);
        }
    }
    return Var(std::move(node));
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        fail(ErrorCode::DimensionMismatch, std::string(op) + ": shape mismatch");
}

}  // namespace

void Node::accumulate(const Mat& g) {
    if (!requires_grad) return;
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) grad = Mat::Zero(value.rows(), value.cols());
    grad += g;
}

Var constant(Mat value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Var(std::move(node));
}

Var parameter(Mat value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    node->grad = Mat::Zero(node->value.rows(), node->value.cols());
    return Var(std::move(node));
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Var& root) {
    if (!root.requires_grad()) return;
    if (root.rows() != 1 || root.cols() != 1) fail(ErrorCode::DimensionMismatch, "backward needs a scalar root");

    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack{{root.node().get(), 0}};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (p->requires_grad && p->backward && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (Node* n : order)
        if (n->backward) n->grad = Mat::Zero(n->value.rows(), n->value.cols());
    root.node()->grad = Mat::Ones(1, 1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward) (*it)->backward(**it);
}

Var matmul(const Var& a, const Var& b) {
    if (a.cols() != b.rows()) fail(ErrorCode::DimensionMismatch, "matmul: inner dimensions differ");
    Mat out = a.value() * b.value();
    auto pa = a.node(), pb = b.node();
    return make(std::move(out), {pa, pb}, [pa, pb](Node& self) {
        if (pa->requires_grad) pa->accumulate(self.grad * pb->value.transpose());
        if (pb->requires_grad) pb->accumulate(pa->value.transpose() * self.grad);
    });
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    auto pa = a.node(), pb = b.node();
    return make(a.value() + b.value(), {pa, pb}, [pa, pb](Node& self) {
        pa->accumulate(self.grad);
        pb->accumulate(self.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    auto pa = a.node(), pb = b.node();
    return make(a.value() - b.value(), {pa, pb}, [pa, pb](Node& self) {
        pa->accumulate(self.grad);
        pb->accumulate(-self.grad);
    });
}

Var add_row(const Var& a, const Var& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) fail(ErrorCode::DimensionMismatch, "add_row: bad row shape");
    Mat out = a.value();
    out.rowwise() += row.value().row(0);
    auto pa = a.node(), pr = row.node();
    return make(std::move(out), {pa, pr}, [pa, pr](Node& self) {
        pa->accumulate(self.grad);
        if (pr->requires_grad) pr->accumulate(self.grad.colwise().sum());
    });
}

Var scale(const Var& a, double s) {
    auto pa = a.node();
    return make(a.value() * s, {pa}, [pa, s](Node& self) { pa->accumulate(self.grad * s); });
}

Var gelu(const Var& a) {
    static constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
    static constexpr double k = 0.044715;
    const Mat& x = a.value();
    Mat th = (c * (x.array() + k * x.array().cube())).tanh().matrix();
    Mat out = (0.5 * x.array() * (1.0 + th.array())).matrix();
    auto pa = a.node();
    return make(std::move(out), {pa}, [pa, th](Node& self) {
        const auto& x = pa->value.array();
        auto dth = (1.0 - th.array().square()) * c * (1.0 + 3.0 * k * x.square());
        Mat d = (0.5 * (1.0 + th.array()) + 0.5 * x * dth).matrix();
        pa->accumulate(self.grad.cwiseProduct(d));
    });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
    const Eigen::Index n = x.cols();
    if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n)
        fail(ErrorCode::DimensionMismatch, "layer_norm: bad affine shape");
    const Mat& xv = x.value();
    Mat xhat(xv.rows(), n);
    Eigen::VectorXd inv_std(xv.rows());
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        double mean = xv.row(r).mean();
        double var = (xv.row(r).array() - mean).square().mean();
        inv_std(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
    }
    Mat out = xhat;
    out.array().rowwise() *= gain.value().row(0).array();
    out.rowwise() += bias.value().row(0);
    auto px = x.node(), pg = gain.node(), pb = bias.node();
    return make(std::move(out), {px, pg, pb}, [px, pg, pb, xhat, inv_std](Node& self) {
        const Mat& dy = self.grad;
        if (pg->requires_grad) pg->accumulate(dy.cwiseProduct(xhat).colwise().sum());
        if (pb->requires_grad) pb->accumulate(dy.colwise().sum());
        if (px->requires_grad) {
            Mat dxhat = dy;
            dxhat.array().rowwise() *= pg->value.row(0).array();
            Mat dx(dy.rows(), dy.cols());
            for (Eigen::Index r = 0; r < dy.rows(); ++r) {
                double m1 = dxhat.row(r).mean();
                double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
                dx.row(r) = inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
            }
            px->accumulate(dx);
        }
    });
}

Var embedding(const Var& table, const std::vector<int32_t>& ids) {
    Mat out(static_cast<Eigen::Index>(ids.size()), table.cols());
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= table.rows()) fail(ErrorCode::IndexOutOfRange, "embedding id out of range");
        out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
    }
    auto pt = table.node();
    return make(std::move(out), {pt}, [pt, ids](Node& self) {
        Mat g = Mat::Zero(pt->value.rows(), pt->value.cols());
        for (size_t i = 0; i < ids.size(); ++i) g.row(ids[i]) += self.grad.row(static_cast<Eigen::Index>(i));
        pt->accumulate(g);
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) fail(ErrorCode::InvalidArgument, "concat_rows: no parts");
    const Eigen::Index cols = parts.front().cols();
    Eigen::Index rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) fail(ErrorCode::DimensionMismatch, "concat_rows: column mismatch");
        rows += p.rows();
    }
    Mat out(rows, cols);
    std::vector<std::shared_ptr<Node>> parents;
    std::vector<Eigen::Index> offsets;
    Eigen::Index r = 0;
    for (const auto& p : parts) {
        if (p.rows() > 0) out.middleRows(r, p.rows()) = p.value();
        parents.push_back(p.node());
        offsets.push_back(r);
        r += p.rows();
    }
    return make(std::move(out), parents, [parents, offsets](Node& self) {
        for (size_t i = 0; i < parents.size(); ++i)
            if (parents[i]->requires_grad && parents[i]->value.rows() > 0)
                parents[i]->accumulate(self.grad.middleRows(offsets[i], parents[i]->value.rows()));
    });
}

Var slice_rows(const Var& a, Eigen::Index begin, Eigen::Index count) {
    if (begin < 0 || count < 0 || begin + count > a.rows()) fail(ErrorCode::IndexOutOfRange, "slice_rows out of range");
    auto pa = a.node();
    Mat out = a.value().middleRows(begin, count);
    return make(std::move(out), {pa}, [pa, begin, count](Node& self) {
        Mat g = Mat::Zero(pa->value.rows(), pa->value.cols());
        g.middleRows(begin, count) = self.grad;
        pa->accumulate(g);
    });
}

Var gather_rows(const Var& a, const std::vector<int>& rows) {
    Mat out(static_cast<Eigen::Index>(rows.size()), a.cols());
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= a.rows()) fail(ErrorCode::IndexOutOfRange, "gather_rows out of range");
        out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
    }
    auto pa = a.node();
    return make(std::move(out), {pa}, [pa, rows](Node& self) {
        Mat g = Mat::Zero(pa->value.rows(), pa->value.cols());
        for (size_t i = 0; i < rows.size(); ++i) g.row(rows[i]) += self.grad.row(static_cast<Eigen::Index>(i));
        pa->accumulate(g);
    });
}

Var attention(const Var& q, const Var& k, const Var& v, int n_heads, const AttentionMask* mask) {
    const Eigen::Index nq = q.rows(), nk = k.rows(), d = q.cols();
    if (k.cols() != d || v.cols() != d || v.rows() != nk) fail(ErrorCode::DimensionMismatch, "attention: bad shapes");
    if (n_heads <= 0 || d % n_heads != 0) fail(ErrorCode::DimensionMismatch, "attention: bad head count");
    if (mask && (mask->queries() != nq || mask->keys() != nk))
        fail(ErrorCode::DimensionMismatch, "attention: mask shape mismatch");
    const Eigen::Index dh = d / n_heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

    Mat out = Mat::Zero(nq, d);
    auto probs = std::make_shared<std::vector<Mat>>(static_cast<size_t>(n_heads));
    for (int h = 0; h < n_heads; ++h) {
        Mat scores = q.value().middleCols(h * dh, dh) * k.value().middleCols(h * dh, dh).transpose() * inv_sqrt;
        Mat& p = (*probs)[static_cast<size_t>(h)];
        p = Mat::Zero(nq, nk);
        for (Eigen::Index i = 0; i < nq; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < nk; ++j)
                if (!mask || (*mask)(static_cast<int>(i), static_cast<int>(j))) mx = std::max(mx, scores(i, j));
            if (mx == -std::numeric_limits<double>::infinity()) continue;
            double z = 0.0;
            for (Eigen::Index j = 0; j < nk; ++j) {
                if (mask && !(*mask)(static_cast<int>(i), static_cast<int>(j))) continue;
                p(i, j) = std::exp(scores(i, j) - mx);
                z += p(i, j);
            }
            p.row(i) /= z;
        }
        out.middleCols(h * dh, dh) = p * v.value().middleCols(h * dh, dh);
    }
    auto pq = q.node(), pk = k.node(), pv = v.node();
    return make(std::move(out), {pq, pk, pv}, [pq, pk, pv, probs, n_heads, dh, inv_sqrt](Node& self) {
        Mat dq = Mat::Zero(pq->value.rows(), pq->value.cols());
        Mat dk = Mat::Zero(pk->value.rows(), pk->value.cols());
        Mat dv = Mat::Zero(pv->value.rows(), pv->value.cols());
        for (int h = 0; h < n_heads; ++h) {
            const Mat& p = (*probs)[static_cast<size_t>(h)];
            Mat dout = self.grad.middleCols(h * dh, dh);
            dv.middleCols(h * dh, dh) += p.transpose() * dout;
            Mat dp = dout * pv->value.middleCols(h * dh, dh).transpose();
            Eigen::VectorXd rowdot = (dp.cwiseProduct(p)).rowwise().sum();
            Mat ds = p.cwiseProduct(dp.colwise() - rowdot) * inv_sqrt;
            dq.middleCols(h * dh, dh) += ds * pk->value.middleCols(h * dh, dh);
            dk.middleCols(h * dh, dh) += ds.transpose() * pq->value.middleCols(h * dh, dh);
        }
        pq->accumulate(dq);
        pk->accumulate(dk);
        pv->accumulate(dv);
    });
}

Var cross_entropy(const Var& logits, const std::vector<int32_t>& targets) {
    if (static_cast<Eigen::Index>(targets.size()) != logits.rows())
        fail(ErrorCode::LengthMismatch, "cross_entropy: one target per row required");
    const Mat& z = logits.value();
    Mat soft = Mat::Zero(z.rows(), z.cols());
    double total = 0.0;
    int count = 0;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        int32_t t = targets[static_cast<size_t>(r)];
        if (t < 0) continue;
        if (t >= z.cols()) fail(ErrorCode::IndexOutOfRange, "cross_entropy: target out of range");
        double mx = z.row(r).maxCoeff();
        Vec e = (z.row(r).array() - mx).exp().matrix();
        double s = e.sum();
        soft.row(r) = e / s;
        total += -(z(r, t) - mx - std::log(s));
        ++count;
    }
    Mat out(1, 1);
    out(0, 0) = count > 0 ? total / count : 0.0;
    auto pl = logits.node();
    return make(std::move(out), {pl}, [pl, soft, targets, count](Node& self) {
        if (count == 0) return;
        Mat g = soft;
        for (size_t r = 0; r < targets.size(); ++r)
            if (targets[r] >= 0) g(static_cast<Eigen::Index>(r), targets[r]) -= 1.0;
        pl->accumulate(g * (self.grad(0, 0) / count));
    });
}

Var mse(const Var& a, const Var& b) {
    check_same_shape(a, b, "mse");
    Mat diff = a.value() - b.value();
    const double n = static_cast<double>(diff.size());
    Mat out(1, 1);
    out(0, 0) = n > 0 ? diff.squaredNorm() / n : 0.0;
    auto pa = a.node(), pb = b.node();
    return make(std::move(out), {pa, pb}, [pa, pb, diff, n](Node& self) {
        if (n == 0) return;
        Mat g = diff * (2.0 * self.grad(0, 0) / n);
        pa->accumulate(g);
        pb->accumulate(-g);
    });
}

Var sum(const std::vector<Var>& scalars) {
    Mat out = Mat::Zero(1, 1);
    std::vector<std::shared_ptr<Node>> parents;
    for (const auto& s : scalars) {
        if (s.rows() != 1 || s.cols() != 1) fail(ErrorCode::DimensionMismatch, "sum: scalars only");
        out(0, 0) += s.scalar();
        parents.push_back(s.node());
    }
    return make(std::move(out), parents, [parents](Node& self) {
        for (const auto& p : parents) p->accumulate(self.grad);
    });
}

}  // namespace mavid::ag
