// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/losses.hpp"

#include <cmath>

namespace mavid {

double ar_loss(const Mat& logits, const std::vector<int32_t>& targets, int condition_len) {
    if (condition_len < 0 || static_cast<Eigen::Index>(condition_len + targets.size()) > logits.rows())
        fail(ErrorCode::LengthMismatch, "logits shorter than condition + targets");
    if (targets.empty()) return 0.0;
    double total = 0.0;
    for (size_t i = 0; i < targets.size(); ++i) {
        const auto row = logits.row(condition_len + static_cast<Eigen::Index>(i));
        const int32_t t = targets[i];
        if (t < 0 || t >= row.size()) fail(ErrorCode::IndexOutOfRange, "target id outside vocabulary");
        const double mx = row.maxCoeff();
        const double lse = mx + std::log((row.array() - mx).exp().sum());
        total += lse - row(t);
    }
    return total / static_cast<double>(targets.size());
}

Mat flow_interpolate(const Mat& x0, const Mat& x1, double t) { return (1.0 - t) * x0 + t * x1; }

double diffusion_velocity_loss(const Mat& x0, const Mat& x1, double t, const Mat& predicted_v) {
    if (x0.rows() != x1.rows() || x0.cols() != x1.cols() || predicted_v.rows() != x0.rows() ||
        predicted_v.cols() != x0.cols())
        fail(ErrorCode::ShapeMismatch, "velocity loss operands differ in shape");
    if (!(t > 0.0 && t < 1.0)) fail(ErrorCode::InvalidArgument, "t must lie in (0, 1)");
    if (x0.size() == 0) return 0.0;
    return (predicted_v - (x1 - x0)).squaredNorm() / static_cast<double>(x0.size());
}

}  // namespace mavid
