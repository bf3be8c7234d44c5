// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mavid/autograd.hpp"

namespace mavid::nn {

using ag::Var;

// Named, ordered parameter registry. Names are stable and double as checkpoint keys.
class ParamStore {
public:
    Var add(const std::string& name, Mat init);
    Var normal(const std::string& name, int rows, int cols, double stddev, std::mt19937_64& rng);
    Var zeros(const std::string& name, int rows, int cols);
    Var ones(const std::string& name, int rows, int cols);

    const std::vector<std::pair<std::string, Var>>& entries() const { return entries_; }
    Var find(const std::string& name) const;
    size_t scalar_count() const;

    void zero_grad();
    double grad_norm() const;

private:
    std::vector<std::pair<std::string, Var>> entries_;
};

struct LayerNorm {
    Var gain;
    Var bias;

    static LayerNorm make(ParamStore& ps, const std::string& name, int dim);
    Var operator()(const Var& x) const { return ag::layer_norm(x, gain, bias); }
};

struct Linear {
    Var weight;  // in x out
    Var bias;    // 1 x out, may be undefined

    static Linear make(ParamStore& ps, const std::string& name, int in, int out, double stddev,
                       std::mt19937_64& rng, bool with_bias = true);
    Var operator()(const Var& x) const {
        Var y = ag::matmul(x, weight);
        return bias.defined() ? ag::add_row(y, bias) : y;
    }
};

// Pre-norm attention block without projection biases, so a fully masked
// query row contributes exactly zero to the residual.
struct AttentionBlock {
    LayerNorm ln_q;
    LayerNorm ln_kv;  // cross-attention blocks only
    Var wq, wk, wv, wo;

    static AttentionBlock make(ParamStore& ps, const std::string& name, int d, int n_layers, std::mt19937_64& rng,
                               bool cross = false);
};

struct Mlp {
    LayerNorm ln;
    Linear fc1;
    Linear fc2;

    static Mlp make(ParamStore& ps, const std::string& name, int d, int hidden, int n_layers, std::mt19937_64& rng);
    Var operator()(const Var& x) const { return ag::add(x, fc2(ag::gelu(fc1(ln(x))))); }
};

// x + SA(LN(x)) under `mask`.
Var self_attention(const AttentionBlock& b, const Var& x, int n_heads, const AttentionMask* mask);

// x + CA(LN(x), LN(ctx)). An empty context returns x unchanged.
Var cross_attention(const AttentionBlock& b, const Var& x, const Var& ctx, int n_heads, const AttentionMask* mask);

}  // namespace mavid::nn
