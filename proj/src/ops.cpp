#include "ganbench/ops.hpp"

#include <algorithm>
#include <cmath>

#include "ganbench/errors.hpp"

namespace ganbench::ops {

namespace {

// Strides of `shape` aligned to the right of a rank-`out_rank` index space;
// broadcast extents (1 or absent) get stride 0.
std::vector<std::size_t> aligned_strides(const Shape& shape, const Shape& out) {
    std::vector<std::size_t> strides(out.size(), 0);
    std::size_t run = 1;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        std::size_t si = shape.size() - 1 - i;   // from the right
        std::size_t oi = out.size() - 1 - i;
        if (shape[si] == out[oi]) {
            strides[oi] = (shape[si] == 1) ? 0 : run;
        } else if (shape[si] == 1) {
            strides[oi] = 0;
        } else {
            throw DimensionError("shape " + shape_str(shape) + " does not broadcast to " + shape_str(out));
        }
        run *= shape[si];
    }
    return strides;
}

bool broadcastable_to(const Shape& small, const Shape& big) {
    if (small.size() > big.size()) return false;
    for (std::size_t i = 0; i < small.size(); ++i) {
        std::size_t s = small[small.size() - 1 - i];
        std::size_t b = big[big.size() - 1 - i];
        if (s != b && s != 1) return false;
    }
    return true;
}

struct BcastPlan {
    Shape out;
    std::vector<std::size_t> sa, sb;  // aligned strides for each operand
};

BcastPlan plan_binary(const char* name, const Shape& a, const Shape& b) {
    Shape out;
    if (a == b) {
        out = a;
    } else if (broadcastable_to(b, a)) {
        out = a;
    } else if (broadcastable_to(a, b)) {
        out = b;
    } else {
        throw DimensionError(std::string(name) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                             " neither match nor broadcast");
    }
    return BcastPlan{out, aligned_strides(a, out), aligned_strides(b, out)};
}

// Odometer walk over `out`; calls f(out_flat, a_flat, b_flat).
template <typename F>
void for_each_bcast(const Shape& out, const std::vector<std::size_t>& sa,
                    const std::vector<std::size_t>& sb, F&& f) {
    const std::size_t n = shape_numel(out);
    const std::size_t rank = out.size();
    std::vector<std::size_t> idx(rank, 0);
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < n; ++i) {
        f(i, ia, ib);
        for (std::size_t d = rank; d-- > 0;) {
            ++idx[d];
            ia += sa[d];
            ib += sb[d];
            if (idx[d] < out[d]) break;
            ia -= sa[d] * out[d];
            ib -= sb[d] * out[d];
            idx[d] = 0;
        }
    }
}

// Records a broadcast-aware binary op. FwdF: double(double,double);
// DaF/DbF: partial contribution given (a, b, upstream g).
template <typename FwdF, typename DaF, typename DbF>
Variable binary_op(const char* name, const Variable& a, const Variable& b, FwdF fwd, DaF da, DbF db) {
    if (a.tape == nullptr || a.tape != b.tape) {
        throw ContractError(std::string(name) + ": operands must share one tape");
    }
    BcastPlan plan = plan_binary(name, a.value.shape(), b.value.shape());

    std::vector<double> out(shape_numel(plan.out));
    {
        const double* pa = a.value.data();
        const double* pb = b.value.data();
        for_each_bcast(plan.out, plan.sa, plan.sb,
                       [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = fwd(pa[ia], pb[ib]); });
    }
    Tensor value = Tensor::from(plan.out, std::move(out));

    Tensor av = a.value, bv = b.value;
    auto backward = [plan, av, bv, da, db](const Tensor& g, Tape::Acc& acc) {
        double* ga = acc.buffer(0);
        double* gb = acc.buffer(1);
        const double* pa = av.data();
        const double* pb = bv.data();
        const double* pg = g.data();
        for_each_bcast(plan.out, plan.sa, plan.sb, [&](std::size_t i, std::size_t ia, std::size_t ib) {
            if (ga) ga[ia] += da(pa[ia], pb[ib], pg[i]);
            if (gb) gb[ib] += db(pa[ia], pb[ib], pg[i]);
        });
    };
    return a.tape->record(std::move(value), {&a, &b}, backward);
}

// Elementwise unary op. Backward sees the input and output values.
template <typename FwdF, typename DxF>
Variable unary_op(const char* name, const Variable& a, FwdF fwd, DxF dx) {
    if (a.tape == nullptr) {
        throw ContractError(std::string(name) + ": operand is not on a tape");
    }
    std::vector<double> out(a.value.numel());
    const double* pa = a.value.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(pa[i]);
    Tensor value = Tensor::from(a.value.shape(), std::move(out));

    Tensor av = a.value, ov = value;
    auto backward = [av, ov, dx](const Tensor& g, Tape::Acc& acc) {
        double* ga = acc.buffer(0);
        if (!ga) return;
        const double* px = av.data();
        const double* py = ov.data();
        const double* pg = g.data();
        for (std::size_t i = 0; i < av.numel(); ++i) ga[i] += dx(px[i], py[i]) * pg[i];
    };
    return a.tape->record(std::move(value), {&a}, backward);
}

}  // namespace

Variable add(const Variable& a, const Variable& b) {
    return binary_op(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double, double g) { return g; }, [](double, double, double g) { return g; });
}

Variable sub(const Variable& a, const Variable& b) {
    return binary_op(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double, double g) { return g; }, [](double, double, double g) { return -g; });
}

Variable mul(const Variable& a, const Variable& b) {
    return binary_op(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double, double y, double g) { return g * y; },
        [](double x, double, double g) { return g * x; });
}

Variable div(const Variable& a, const Variable& b) {
    return binary_op(
        "div", a, b, [](double x, double y) { return x / y; },
        [](double, double y, double g) { return g / y; },
        [](double x, double y, double g) { return -g * x / (y * y); });
}

Variable neg(const Variable& a) {
    return unary_op(
        "neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Variable scale(const Variable& a, double c) {
    return unary_op(
        "scale", a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Variable add_const(const Variable& a, double c) {
    return unary_op(
        "add_const", a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Variable log(const Variable& a) {
    return unary_op(
        "log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Variable exp(const Variable& a) {
    return unary_op(
        "exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Variable sqrt(const Variable& a) {
    return unary_op(
        "sqrt", a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return 0.5 / y; });
}

Variable tanh(const Variable& a) {
    return unary_op(
        "tanh", a, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

Variable sigmoid(const Variable& a) {
    return unary_op(
        "sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Variable relu(const Variable& a) {
    return unary_op(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Variable leaky_relu(const Variable& a, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ContractError("leaky_relu slope must lie in (0, 1)");
    }
    return unary_op(
        "leaky_relu", a, [alpha](double x) { return x > 0.0 ? x : alpha * x; },
        [alpha](double x, double) { return x > 0.0 ? 1.0 : alpha; });
}

Variable clamp(const Variable& a, double lo, double hi) {
    if (!(lo <= hi)) {
        throw ContractError("clamp requires lo <= hi");
    }
    return unary_op(
        "clamp", a, [lo, hi](double x) { return std::min(std::max(x, lo), hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Variable matmul(const Variable& a, const Variable& b) {
    if (a.tape == nullptr || a.tape != b.tape) {
        throw ContractError("matmul: operands must share one tape");
    }
    const Shape& sa = a.value.shape();
    const Shape& sb = b.value.shape();
    if (sa.size() != 2 || sb.size() != 2) {
        throw DimensionError("matmul expects rank-2 operands, got " + shape_str(sa) + " and " + shape_str(sb));
    }
    if (sa[1] != sb[0]) {
        throw DimensionError("matmul inner dimensions disagree: " + shape_str(sa) + " . " + shape_str(sb));
    }
    const std::size_t m = sa[0], k = sa[1], n = sb[1];

    std::vector<double> out(m * n, 0.0);
    {
        const double* pa = a.value.data();
        const double* pb = b.value.data();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t kk = 0; kk < k; ++kk) {
                const double aik = pa[i * k + kk];
                const double* brow = pb + kk * n;
                double* orow = out.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
            }
        }
    }
    Tensor value = Tensor::from(Shape{m, n}, std::move(out));

    Tensor av = a.value, bv = b.value;
    auto backward = [av, bv, m, k, n](const Tensor& g, Tape::Acc& acc) {
        const double* pg = g.data();
        if (double* ga = acc.buffer(0)) {  // ga = g . b^T
            const double* pb = bv.data();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double gij = pg[i * n + j];
                    const double* brow = pb + j;  // column j of b
                    for (std::size_t kk = 0; kk < k; ++kk) ga[i * k + kk] += gij * brow[kk * n];
                }
            }
        }
        if (double* gb = acc.buffer(1)) {  // gb = a^T . g
            const double* pa = av.data();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const double aik = pa[i * k + kk];
                    const double* grow = pg + i * n;
                    double* brow = gb + kk * n;
                    for (std::size_t j = 0; j < n; ++j) brow[j] += aik * grow[j];
                }
            }
        }
    };
    return a.tape->record(std::move(value), {&a, &b}, backward);
}

Variable reshape(const Variable& a, Shape shape) {
    if (a.tape == nullptr) {
        throw ContractError("reshape: operand is not on a tape");
    }
    if (shape_numel(shape) != a.value.numel()) {
        throw DimensionError("reshape from " + shape_str(a.value.shape()) + " to " + shape_str(shape) +
                             " changes element count");
    }
    Tensor value = Tensor::from_unchecked(shape, a.value.values());
    Shape in_shape = a.value.shape();
    auto backward = [in_shape](const Tensor& g, Tape::Acc& acc) {
        if (double* ga = acc.buffer(0)) {
            const double* pg = g.data();
            for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += pg[i];
        }
    };
    return a.tape->record(std::move(value), {&a}, backward);
}

namespace {

struct ReducePlan {
    Shape out;                       // result shape (respecting keepdims)
    Shape kept;                      // keepdims variant, for stride mapping
    std::vector<std::size_t> smap;   // aligned strides of kept within input space
    std::size_t count = 1;           // number of elements folded into each output
};

ReducePlan plan_reduce(const Variable& a, const std::vector<std::size_t>& axes, bool keepdims) {
    const Shape& in = a.value.shape();
    std::vector<bool> reduced(in.size(), false);
    if (axes.empty()) {
        reduced.assign(in.size(), true);
    } else {
        for (std::size_t ax : axes) {
            if (ax >= in.size()) {
                throw DimensionError("reduce: axis " + std::to_string(ax) + " out of range for shape " +
                                     shape_str(in));
            }
            reduced[ax] = true;
        }
    }

    ReducePlan plan;
    for (std::size_t d = 0; d < in.size(); ++d) {
        if (reduced[d]) {
            plan.count *= in[d];
            plan.kept.push_back(1);
            if (keepdims) plan.out.push_back(1);
        } else {
            plan.kept.push_back(in[d]);
            plan.out.push_back(in[d]);
        }
    }
    if (in.empty()) plan.count = 1;  // scalar input: nothing to fold
    if (plan.count == 0 || a.value.numel() == 0) {
        throw DomainError("reduction over zero elements");
    }
    return plan;
}

Variable reduce_impl(const Variable& a, const std::vector<std::size_t>& axes, bool keepdims, bool mean) {
    if (a.tape == nullptr) {
        throw ContractError("reduce: operand is not on a tape");
    }
    ReducePlan plan = plan_reduce(a, axes, keepdims);
    const Shape& in = a.value.shape();
    std::vector<std::size_t> strides = aligned_strides(plan.kept, in);

    std::vector<double> out(shape_numel(plan.out), 0.0);
    {
        const double* pa = a.value.data();
        // walk input space; map each element to its fold target
        std::vector<std::size_t> idx(in.size(), 0);
        std::size_t io = 0;
        for (std::size_t i = 0; i < a.value.numel(); ++i) {
            out[io] += pa[i];
            for (std::size_t d = in.size(); d-- > 0;) {
                ++idx[d];
                io += strides[d];
                if (idx[d] < in[d]) break;
                io -= strides[d] * in[d];
                idx[d] = 0;
            }
        }
    }
    const double denom = mean ? static_cast<double>(plan.count) : 1.0;
    if (mean) {
        for (double& v : out) v /= denom;
    }
    Tensor value = Tensor::from(plan.out, std::move(out));

    auto backward = [in, strides, denom](const Tensor& g, Tape::Acc& acc) {
        double* ga = acc.buffer(0);
        if (!ga) return;
        const double* pg = g.data();
        std::vector<std::size_t> idx(in.size(), 0);
        std::size_t io = 0;
        for (std::size_t i = 0; i < shape_numel(in); ++i) {
            ga[i] += pg[io] / denom;
            for (std::size_t d = in.size(); d-- > 0;) {
                ++idx[d];
                io += strides[d];
                if (idx[d] < in[d]) break;
                io -= strides[d] * in[d];
                idx[d] = 0;
            }
        }
    };
    return a.tape->record(std::move(value), {&a}, backward);
}

}  // namespace

Variable reduce_sum(const Variable& a, const std::vector<std::size_t>& axes, bool keepdims) {
    return reduce_impl(a, axes, keepdims, false);
}

Variable reduce_mean(const Variable& a, const std::vector<std::size_t>& axes, bool keepdims) {
    return reduce_impl(a, axes, keepdims, true);
}

Variable sum_all(const Variable& a) { return reduce_sum(a, {}, false); }
Variable mean_all(const Variable& a) { return reduce_mean(a, {}, false); }

}  // namespace ganbench::ops
