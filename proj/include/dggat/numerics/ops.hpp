#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dggat/numerics/tensor.hpp"

namespace dggat::numerics {

// Differentiable operations. Each op records a backward node on the active
// tape when any input requires gradients; otherwise it only evaluates.
// Rank-1 inputs of length n are treated as [n x 1] columns where a matrix is
// expected.

/// [m x k] * [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);

/// Elementwise sum of two same-shape tensors.
Tensor add(const Tensor& a, const Tensor& b);

/// Adds a length-F bias to every row of an [N x F] tensor.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);

/// Elementwise product of two same-shape tensors.
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double factor);

/// Sum of all elements, as a [1] tensor.
Tensor sum(const Tensor& x);

/// max(x, slope * x), slope in (0, 1).
Tensor leaky_relu(const Tensor& x, double slope = 0.2);

Tensor elu(const Tensor& x);

/// Rows `index[e]` of an [N x F] tensor, stacked into [E x F].
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index);

/// Softmax of `scores` (E values) within each group of equal segment id.
/// Output has the shape of `scores`.
Tensor segment_softmax(const Tensor& scores, std::span<const std::size_t> segments);

/// Row i of the [num_segments x F] result is the sum over edges e with
/// segments[e] == i of weights[e] * values[e, :].
Tensor segment_weighted_sum(const Tensor& weights, const Tensor& values,
                            std::span<const std::size_t> segments,
                            std::size_t num_segments);

/// Column-wise concatenation of tensors with equal row counts.
Tensor concat_features(std::span<const Tensor> parts);

/// Row mean per group: groups[r] names the group of row r; every group in
/// [0, num_groups) must own at least one row.
Tensor mean_rows(const Tensor& x, std::span<const std::size_t> groups, std::size_t num_groups);

/// Mean of squared residuals, as a [1] tensor.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace dggat::numerics
