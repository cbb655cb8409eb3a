#pragma once

#include "ganbench/autograd.hpp"

namespace ganbench::ops {

// Elementwise arithmetic. Shapes must match, or one operand must be
// broadcastable to the other by the trailing-dimension rule (align shapes
// at the right; each aligned extent equal, or 1 / absent on the smaller
// side). Exactly one operand may broadcast.
Variable add(const Variable& a, const Variable& b);
Variable sub(const Variable& a, const Variable& b);
Variable mul(const Variable& a, const Variable& b);
Variable div(const Variable& a, const Variable& b);

Variable neg(const Variable& a);
Variable scale(const Variable& a, double c);       // c * a
Variable add_const(const Variable& a, double c);   // a + c

Variable log(const Variable& a);
Variable exp(const Variable& a);
Variable sqrt(const Variable& a);
Variable tanh(const Variable& a);
Variable sigmoid(const Variable& a);
Variable relu(const Variable& a);
Variable leaky_relu(const Variable& a, double alpha);
// Elementwise clamp to [lo, hi]; gradient passes through inside the band
// and is zero where the input was clamped.
Variable clamp(const Variable& a, double lo, double hi);

// [m x k] . [k x n] -> [m x n]
Variable matmul(const Variable& a, const Variable& b);

Variable reshape(const Variable& a, Shape shape);

// Reductions over the given axes; empty axis list reduces everything.
// Reducing over zero elements is a domain error.
Variable reduce_sum(const Variable& a, const std::vector<std::size_t>& axes, bool keepdims = false);
Variable reduce_mean(const Variable& a, const std::vector<std::size_t>& axes, bool keepdims = false);
Variable sum_all(const Variable& a);
Variable mean_all(const Variable& a);

}  // namespace ganbench::ops
