// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/nn.hpp"

#include <cmath>

namespace mavid::nn {

Var ParamStore::add(const std::string& name, Mat init) {
    for (const auto& [n, v] : entries_)
        if (n == name) fail(ErrorCode::InvalidArgument, "duplicate parameter " + name);
    Var p = ag::parameter(std::move(init));
    entries_.emplace_back(name, p);
    return p;
}

Var ParamStore::normal(const std::string& name, int rows, int cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return add(name, std::move(m));
}

Var ParamStore::zeros(const std::string& name, int rows, int cols) { return add(name, Mat::Zero(rows, cols)); }
Var ParamStore::ones(const std::string& name, int rows, int cols) { return add(name, Mat::Ones(rows, cols)); }

Var ParamStore::find(const std::string& name) const {
    for (const auto& [n, v] : entries_)
        if (n == name) return v;
    fail(ErrorCode::InvalidArgument, "unknown parameter " + name);
}

size_t ParamStore::scalar_count() const {
    size_t n = 0;
    for (const auto& [name, v] : entries_) n += static_cast<size_t>(v.value().size());
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [name, v] : entries_) v.zero_grad();
}

double ParamStore::grad_norm() const {
    double s = 0.0;
    for (const auto& [name, v] : entries_) s += v.grad().squaredNorm();
    return std::sqrt(s);
}

LayerNorm LayerNorm::make(ParamStore& ps, const std::string& name, int dim) {
    return {ps.ones(name + ".gain", 1, dim), ps.zeros(name + ".bias", 1, dim)};
}

Linear Linear::make(ParamStore& ps, const std::string& name, int in, int out, double stddev, std::mt19937_64& rng,
                    bool with_bias) {
    Linear l;
    l.weight = ps.normal(name + ".weight", in, out, stddev, rng);
    if (with_bias) l.bias = ps.zeros(name + ".bias", 1, out);
    return l;
}

AttentionBlock AttentionBlock::make(ParamStore& ps, const std::string& name, int d, int n_layers, std::mt19937_64& rng,
                                    bool cross) {
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    AttentionBlock b;
    b.ln_q = LayerNorm::make(ps, name + ".ln_q", d);
    if (cross) b.ln_kv = LayerNorm::make(ps, name + ".ln_kv", d);
    b.wq = ps.normal(name + ".wq", d, d, s, rng);
    b.wk = ps.normal(name + ".wk", d, d, s, rng);
    b.wv = ps.normal(name + ".wv", d, d, s, rng);
    b.wo = ps.normal(name + ".wo", d, d, s / std::sqrt(2.0 * n_layers), rng);
    return b;
}

Mlp Mlp::make(ParamStore& ps, const std::string& name, int d, int hidden, int n_layers, std::mt19937_64& rng) {
    Mlp m;
    m.ln = LayerNorm::make(ps, name + ".ln", d);
    m.fc1 = Linear::make(ps, name + ".fc1", d, hidden, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    m.fc2 = Linear::make(ps, name + ".fc2", hidden, d, 1.0 / std::sqrt(2.0 * n_layers * hidden), rng);
    return m;
}

Var self_attention(const AttentionBlock& b, const Var& x, int n_heads, const AttentionMask* mask) {
    Var h = b.ln_q(x);
    Var att = ag::attention(ag::matmul(h, b.wq), ag::matmul(h, b.wk), ag::matmul(h, b.wv), n_heads, mask);
    return ag::add(x, ag::matmul(att, b.wo));
}

Var cross_attention(const AttentionBlock& b, const Var& x, const Var& ctx, int n_heads, const AttentionMask* mask) {
    if (!ctx.defined() || ctx.rows() == 0) return x;
    Var hq = b.ln_q(x);
    Var hk = b.ln_kv(ctx);
    Var att = ag::attention(ag::matmul(hq, b.wq), ag::matmul(hk, b.wk), ag::matmul(hk, b.wv), n_heads, mask);
    return ag::add(x, ag::matmul(att, b.wo));
}

}  // namespace mavid::nn
