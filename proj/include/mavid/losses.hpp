// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "mavid/core_types.hpp"

namespace mavid {

// Mean negative log-likelihood of `targets`; target i is scored against logits
// row condition_len + i, so the condition prefix never contributes.
double ar_loss(const Mat& logits, const std::vector<int32_t>& targets, int condition_len);

// Rectified-flow velocity loss: mean((predicted_v - (x1 - x0))^2). The point
// x_t = (1 - t) x0 + t x1 is where the prediction was made; t must lie in (0, 1).
double diffusion_velocity_loss(const Mat& x0, const Mat& x1, double t, const Mat& predicted_v);

Mat flow_interpolate(const Mat& x0, const Mat& x1, double t);

inline double total_loss(double l_ar, double l_diff) { return l_ar + l_diff; }

}  // namespace mavid
