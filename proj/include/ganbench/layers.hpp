#pragma once

#include <cstddef>
#include <vector>

#include "ganbench/autograd.hpp"

namespace ganbench {

// Probability clamp applied inside log-losses; log is never evaluated
// closer to {0, 1} than this.
inline constexpr double kProbEps = 1e-7;

// Running statistics and hyperparameters for one batchnorm layer. The
// learned gamma/beta live in the model's ParamSet; this struct carries the
// non-learned state. Single-writer: one training loop per state.
struct BatchNormState {
    Tensor running_mean;  // [C]
    Tensor running_var;   // [C], elementwise >= 0
    double momentum = 0.1;
    double eps = 1e-5;
    bool training = true;
};

BatchNormState make_batchnorm_state(std::size_t channels, double momentum = 0.1, double eps = 1e-5);

namespace layers {

// x [B x n] . w [n x m] + b [m] -> [B x m]
Variable affine(const Variable& x, const Variable& w, const Variable& b);

// Cross-correlation, NCHW. x [B x C x H x W], k [F x C x Kh x Kw]
// -> [B x F x H' x W'] with H' = floor((H + 2 pad - Kh) / stride) + 1.
Variable conv2d(const Variable& x, const Variable& k, std::size_t stride, std::size_t pad);

// Adjoint of conv2d with the same kernel layout. x [B x F x H x W],
// k [F x C x Kh x Kw] -> [B x C x H'' x W''] with
// H'' = (H - 1) stride - 2 pad + Kh.
Variable conv2d_transpose(const Variable& x, const Variable& k, std::size_t stride, std::size_t pad);

// Square-window max pooling, no padding. Gradient routes to the first
// (row-major) maximum of each window.
Variable maxpool2d(const Variable& x, std::size_t window, std::size_t stride);

// Train mode normalizes with batch statistics (biased variance) and folds
// unbiased batch statistics into the running stats; eval mode normalizes
// with the running stats. x is [B x C] or [B x C x H x W]; gamma and beta
// are [C]. Train mode requires B >= 2.
Variable batchnorm(const Variable& x, const Variable& gamma, const Variable& beta, BatchNormState& state);

// Mean over all elements of -[t log p + (1 - t) log(1 - p)], with p
// clamped away from {0, 1} by kProbEps. targets holds 0/1 values shaped
// like p.
Variable bce_from_probability(const Variable& p, const Tensor& targets);
// All targets equal; target must be 0 or 1.
Variable bce_from_probability(const Variable& p, double target);

// Mean of -log softmax(logits)[label]; stabilized by max subtraction.
Variable softmax_cross_entropy(const Variable& logits, const std::vector<std::size_t>& labels);

// Multi-class hinge: mean over rows of sum_{j != y} max(0, margin + s_j - s_y).
Variable hinge_loss(const Variable& scores, const std::vector<std::size_t>& labels, double margin = 1.0);

// Mean over [B x C x H x W] spatial extents -> [B x C].
Variable global_avg_pool(const Variable& x);

// Zero-pads / crops the two trailing (spatial) axes of an NCHW tensor.
Variable pad2d(const Variable& x, std::size_t pad);
// Removes `margin` pixels from every spatial edge; adjoint of pad2d.
Variable crop2d(const Variable& x, std::size_t margin);

}  // namespace layers

}  // namespace ganbench
