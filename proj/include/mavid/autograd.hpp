// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mavid/core_types.hpp"
#include "mavid/sequence.hpp"

// Minimal reverse-mode differentiation over dense row-major matrices.
// Graph nodes are recorded only while gradients are enabled on the calling
// thread and at least one input requires a gradient.
namespace mavid::ag {

struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    void accumulate(const Mat& g);
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    const Mat& value() const { return node_->value; }
    Mat& mutable_value() { return node_->value; }
    const Mat& grad() const { return node_->grad; }
    Mat& grad() { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    double scalar() const { return node_->value(0, 0); }
    bool defined() const { return static_cast<bool>(node_); }
    const std::shared_ptr<Node>& node() const { return node_; }

    void zero_grad() { node_->grad.setZero(node_->value.rows(), node_->value.cols()); }

private:
    std::shared_ptr<Node> node_;
};

Var constant(Mat value);
Var parameter(Mat value);

// Accumulates d(root)/d(leaf) into every reachable leaf with requires_grad.
void backward(const Var& root);

bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var add_row(const Var& a, const Var& row);  // broadcast a 1 x n row over every row of a
Var scale(const Var& a, double s);
Var gelu(const Var& a);
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
Var embedding(const Var& table, const std::vector<int32_t>& ids);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& a, Eigen::Index begin, Eigen::Index count);
Var gather_rows(const Var& a, const std::vector<int>& rows);

// Multi-head scaled dot-product attention on already projected q (Q x d),
// k and v (K x d). mask == nullptr means every key is visible. Rows whose
// visible key set is empty produce zeros.
Var attention(const Var& q, const Var& k, const Var& v, int n_heads, const AttentionMask* mask);

// Mean softmax cross-entropy over rows whose target is >= 0.
Var cross_entropy(const Var& logits, const std::vector<int32_t>& targets);
Var mse(const Var& a, const Var& b);
Var sum(const std::vector<Var>& scalars);

}  // namespace mavid::ag
