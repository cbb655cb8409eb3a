#include "ganbench/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ganbench/errors.hpp"
#include "ganbench/ops.hpp"

namespace ganbench {

BatchNormState make_batchnorm_state(std::size_t channels, double momentum, double eps) {
    if (channels == 0) throw ContractError("batchnorm needs at least one channel");
    if (!(momentum > 0.0 && momentum < 1.0)) throw ContractError("batchnorm momentum must lie in (0, 1)");
    if (!(eps > 0.0)) throw ContractError("batchnorm eps must be positive");
    return BatchNormState{Tensor::zeros({channels}), Tensor::ones({channels}), momentum, eps, true};
}

namespace layers {

namespace {

// One convolution instance. The "image" side is the larger spatial grid
// (conv2d input, conv2d_transpose output); the "feature" side is the
// smaller one. Both directions and all gradients walk the same index set:
//   image[b, c, oh*stride - pad + kh, ow*stride - pad + kw]
//   kernel[f, c, kh, kw]
//   feature[b, f, oh, ow]
// so transpose is the exact adjoint of forward by construction.
struct ConvGeom {
    std::size_t B, C, H, W;   // image side
    std::size_t F, OH, OW;    // feature side
    std::size_t KH, KW;
    std::size_t stride, pad;
};

// Calls f(image_index, kernel_index, feature_index) for every in-bounds
// triple, in a fixed order (deterministic accumulation).
template <typename F>
void conv_iterate(const ConvGeom& g, F&& f) {
    for (std::size_t b = 0; b < g.B; ++b) {
        for (std::size_t fo = 0; fo < g.F; ++fo) {
            for (std::size_t c = 0; c < g.C; ++c) {
                for (std::size_t oh = 0; oh < g.OH; ++oh) {
                    for (std::size_t kh = 0; kh < g.KH; ++kh) {
                        const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + kh) -
                                                  static_cast<std::ptrdiff_t>(g.pad);
                        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.H)) continue;
                        for (std::size_t ow = 0; ow < g.OW; ++ow) {
                            for (std::size_t kw = 0; kw < g.KW; ++kw) {
                                const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride + kw) -
                                                          static_cast<std::ptrdiff_t>(g.pad);
                                if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.W)) continue;
                                const std::size_t ii =
                                    ((b * g.C + c) * g.H + static_cast<std::size_t>(ih)) * g.W +
                                    static_cast<std::size_t>(iw);
                                const std::size_t ki = ((fo * g.C + c) * g.KH + kh) * g.KW + kw;
                                const std::size_t oi = ((b * g.F + fo) * g.OH + oh) * g.OW + ow;
                                f(ii, ki, oi);
                            }
                        }
                    }
                }
            }
        }
    }
}

// feature += image (*) kernel
void conv_gather(const ConvGeom& g, const double* image, const double* kernel, double* feature) {
    conv_iterate(g, [&](std::size_t ii, std::size_t ki, std::size_t oi) { feature[oi] += image[ii] * kernel[ki]; });
}

// image += feature (*) kernel  (adjoint scatter)
void conv_scatter(const ConvGeom& g, const double* feature, const double* kernel, double* image) {
    conv_iterate(g, [&](std::size_t ii, std::size_t ki, std::size_t oi) { image[ii] += feature[oi] * kernel[ki]; });
}

// kernel += image (*) feature
void conv_kernel_grad(const ConvGeom& g, const double* image, const double* feature, double* kernel) {
    conv_iterate(g, [&](std::size_t ii, std::size_t ki, std::size_t oi) { kernel[ki] += image[ii] * feature[oi]; });
}

void require_rank4(const char* name, const char* what, const Tensor& t) {
    if (t.rank() != 4) {
        throw DimensionError(std::string(name) + ": " + what + " must be rank 4, got " + shape_str(t.shape()));
    }
}

void require_same_tape(const char* name, const Variable& a, const Variable& b) {
    if (a.tape == nullptr || a.tape != b.tape) {
        throw ContractError(std::string(name) + ": operands must share one tape");
    }
}

}  // namespace

Variable affine(const Variable& x, const Variable& w, const Variable& b) {
    if (x.value.rank() != 2 || w.value.rank() != 2 || b.value.rank() != 1) {
        throw DimensionError("affine expects x [B x n], w [n x m], b [m], got " + shape_str(x.value.shape()) +
                             ", " + shape_str(w.value.shape()) + ", " + shape_str(b.value.shape()));
    }
    if (b.value.dim(0) != w.value.dim(1)) {
        throw DimensionError("affine bias length " + std::to_string(b.value.dim(0)) +
                             " does not match output width " + std::to_string(w.value.dim(1)));
    }
    return ops::add(ops::matmul(x, w), b);
}

Variable conv2d(const Variable& x, const Variable& k, std::size_t stride, std::size_t pad) {
    require_same_tape("conv2d", x, k);
    require_rank4("conv2d", "input", x.value);
    require_rank4("conv2d", "kernel", k.value);
    if (stride == 0) throw ContractError("conv2d stride must be >= 1");

    ConvGeom g{};
    g.B = x.value.dim(0);
    g.C = x.value.dim(1);
    g.H = x.value.dim(2);
    g.W = x.value.dim(3);
    g.F = k.value.dim(0);
    g.KH = k.value.dim(2);
    g.KW = k.value.dim(3);
    g.stride = stride;
    g.pad = pad;
    if (k.value.dim(1) != g.C) {
        throw DimensionError("conv2d kernel expects " + std::to_string(k.value.dim(1)) + " channels, input has " +
                             std::to_string(g.C));
    }
    if (g.H + 2 * pad < g.KH || g.W + 2 * pad < g.KW) {
        throw DimensionError("conv2d kernel " + shape_str(k.value.shape()) + " exceeds padded input " +
                             shape_str(x.value.shape()) + " with pad " + std::to_string(pad));
    }
    g.OH = (g.H + 2 * pad - g.KH) / stride + 1;
    g.OW = (g.W + 2 * pad - g.KW) / stride + 1;

    std::vector<double> out(g.B * g.F * g.OH * g.OW, 0.0);
    conv_gather(g, x.value.data(), k.value.data(), out.data());
    Tensor value = Tensor::from(Shape{g.B, g.F, g.OH, g.OW}, std::move(out));

    Tensor xv = x.value, kv = k.value;
    auto backward = [g, xv, kv](const Tensor& grad, Tape::Acc& acc) {
        if (double* gx = acc.buffer(0)) conv_scatter(g, grad.data(), kv.data(), gx);
        if (double* gk = acc.buffer(1)) conv_kernel_grad(g, xv.data(), grad.data(), gk);
    };
    return x.tape->record(std::move(value), {&x, &k}, backward);
}

Variable conv2d_transpose(const Variable& x, const Variable& k, std::size_t stride, std::size_t pad) {
    require_same_tape("conv2d_transpose", x, k);
    require_rank4("conv2d_transpose", "input", x.value);
    require_rank4("conv2d_transpose", "kernel", k.value);
    if (stride == 0) throw ContractError("conv2d_transpose stride must be >= 1");

    ConvGeom g{};
    g.B = x.value.dim(0);
    g.F = x.value.dim(1);   // feature side is the transpose input
    g.OH = x.value.dim(2);
    g.OW = x.value.dim(3);
    g.C = k.value.dim(1);
    g.KH = k.value.dim(2);
    g.KW = k.value.dim(3);
    g.stride = stride;
    g.pad = pad;
    if (k.value.dim(0) != g.F) {
        throw DimensionError("conv2d_transpose kernel expects " + std::to_string(k.value.dim(0)) +
                             " input channels, input has " + std::to_string(g.F));
    }
    const std::ptrdiff_t hout = static_cast<std::ptrdiff_t>((g.OH - 1) * stride + g.KH) -
                                static_cast<std::ptrdiff_t>(2 * pad);
    const std::ptrdiff_t wout = static_cast<std::ptrdiff_t>((g.OW - 1) * stride + g.KW) -
                                static_cast<std::ptrdiff_t>(2 * pad);
    if (hout < 1 || wout < 1) {
        throw DimensionError("conv2d_transpose output size " + std::to_string(hout) + "x" + std::to_string(wout) +
                             " is not positive");
    }
    g.H = static_cast<std::size_t>(hout);
    g.W = static_cast<std::size_t>(wout);

    std::vector<double> out(g.B * g.C * g.H * g.W, 0.0);
    conv_scatter(g, x.value.data(), k.value.data(), out.data());
    Tensor value = Tensor::from(Shape{g.B, g.C, g.H, g.W}, std::move(out));

    Tensor xv = x.value, kv = k.value;
    auto backward = [g, xv, kv](const Tensor& grad, Tape::Acc& acc) {
        if (double* gx = acc.buffer(0)) conv_gather(g, grad.data(), kv.data(), gx);
        if (double* gk = acc.buffer(1)) conv_kernel_grad(g, grad.data(), xv.data(), gk);
    };
    return x.tape->record(std::move(value), {&x, &k}, backward);
}

Variable maxpool2d(const Variable& x, std::size_t window, std::size_t stride) {
    if (x.tape == nullptr) throw ContractError("maxpool2d: operand is not on a tape");
    require_rank4("maxpool2d", "input", x.value);
    if (window == 0 || stride == 0) throw ContractError("maxpool2d window and stride must be >= 1");
    const std::size_t B = x.value.dim(0), C = x.value.dim(1), H = x.value.dim(2), W = x.value.dim(3);
    if (window > H || window > W) {
        throw DimensionError("maxpool2d window " + std::to_string(window) + " exceeds input " +
                             shape_str(x.value.shape()));
    }
    const std::size_t OH = (H - window) / stride + 1;
    const std::size_t OW = (W - window) / stride + 1;

    std::vector<double> out(B * C * OH * OW);
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    const double* px = x.value.data();
    std::size_t oi = 0;
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            const double* plane = px + (b * C + c) * H * W;
            for (std::size_t oh = 0; oh < OH; ++oh) {
                for (std::size_t ow = 0; ow < OW; ++ow, ++oi) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_i = 0;
                    for (std::size_t kh = 0; kh < window; ++kh) {
                        for (std::size_t kw = 0; kw < window; ++kw) {
                            const std::size_t ii = (oh * stride + kh) * W + (ow * stride + kw);
                            if (plane[ii] > best) {
                                best = plane[ii];
                                best_i = (b * C + c) * H * W + ii;
                            }
                        }
                    }
                    out[oi] = best;
                    (*argmax)[oi] = best_i;
                }
            }
        }
    }
    Tensor value = Tensor::from(Shape{B, C, OH, OW}, std::move(out));

    auto backward = [argmax](const Tensor& grad, Tape::Acc& acc) {
        double* gx = acc.buffer(0);
        if (!gx) return;
        const double* pg = grad.data();
        for (std::size_t i = 0; i < grad.numel(); ++i) gx[(*argmax)[i]] += pg[i];
    };
    return x.tape->record(std::move(value), {&x}, backward);
}

namespace {

// gamma/beta arrive as [C]; reshape so they broadcast over the trailing
// spatial axes of a rank-4 input.
Variable per_channel(const Variable& v, std::size_t rank) {
    if (rank == 2) return v;
    return ops::reshape(v, Shape{v.value.dim(0), 1, 1});
}

}  // namespace

Variable batchnorm(const Variable& x, const Variable& gamma, const Variable& beta, BatchNormState& state) {
    require_same_tape("batchnorm", x, gamma);
    require_same_tape("batchnorm", x, beta);
    const std::size_t rank = x.value.rank();
    if (rank != 2 && rank != 4) {
        throw DimensionError("batchnorm expects [B x C] or [B x C x H x W], got " + shape_str(x.value.shape()));
    }
    const std::size_t C = x.value.dim(1);
    if (gamma.value.shape() != Shape{C} || beta.value.shape() != Shape{C} ||
        state.running_mean.shape() != Shape{C} || state.running_var.shape() != Shape{C}) {
        throw DimensionError("batchnorm parameter shapes must all be [" + std::to_string(C) + "]");
    }

    const Variable g = per_channel(gamma, rank);
    const Variable b = per_channel(beta, rank);

    if (!state.training) {
        const std::size_t n_ch = C;
        std::vector<double> mu(state.running_mean.values());
        std::vector<double> inv(n_ch);
        for (std::size_t c = 0; c < n_ch; ++c) inv[c] = 1.0 / std::sqrt(state.running_var.at(c) + state.eps);
        Shape ch_shape = (rank == 2) ? Shape{C} : Shape{C, 1, 1};
        Variable mu_c = x.tape->constant(Tensor::from(ch_shape, std::move(mu)));
        Variable inv_c = x.tape->constant(Tensor::from(ch_shape, std::move(inv)));
        Variable norm = ops::mul(ops::sub(x, mu_c), inv_c);
        return ops::add(ops::mul(norm, g), b);
    }

    if (x.value.dim(0) < 2) {
        throw ContractError("batchnorm train mode needs batch size >= 2, got " + std::to_string(x.value.dim(0)));
    }

    std::vector<std::size_t> axes = (rank == 2) ? std::vector<std::size_t>{0} : std::vector<std::size_t>{0, 2, 3};
    Variable mu = ops::reduce_mean(x, axes, true);
    Variable xc = ops::sub(x, mu);
    Variable var_b = ops::reduce_mean(ops::mul(xc, xc), axes, true);  // biased
    Variable norm = ops::div(xc, ops::sqrt(ops::add_const(var_b, state.eps)));
    Variable out = ops::add(ops::mul(norm, g), b);

    // Fold unbiased batch statistics into the running stats.
    const double n = static_cast<double>(x.value.numel() / C);
    const double m = state.momentum;
    std::vector<double> new_mean(C), new_var(C);
    for (std::size_t c = 0; c < C; ++c) {
        new_mean[c] = (1.0 - m) * state.running_mean.at(c) + m * mu.value.at(c);
        const double unbiased = var_b.value.at(c) * n / (n - 1.0);
        new_var[c] = (1.0 - m) * state.running_var.at(c) + m * unbiased;
    }
    state.running_mean = Tensor::from(Shape{C}, std::move(new_mean));
    state.running_var = Tensor::from(Shape{C}, std::move(new_var));
    return out;
}

Variable bce_from_probability(const Variable& p, const Tensor& targets) {
    if (p.tape == nullptr) throw ContractError("bce_from_probability: operand is not on a tape");
    if (!p.value.same_shape(targets)) {
        throw DimensionError("bce_from_probability targets " + shape_str(targets.shape()) +
                             " do not match probabilities " + shape_str(p.value.shape()));
    }
    for (std::size_t i = 0; i < targets.numel(); ++i) {
        const double t = targets.at(i);
        if (t != 0.0 && t != 1.0) throw ContractError("bce_from_probability targets must be 0 or 1");
    }
    Variable pc = ops::clamp(p, kProbEps, 1.0 - kProbEps);
    Variable t = p.tape->constant(targets);
    Variable one_minus_t = p.tape->constant(Tensor::from(targets.shape(), [&] {
        std::vector<double> v(targets.numel());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 - targets.at(i);
        return v;
    }()));
    Variable log_p = ops::log(pc);
    Variable log_q = ops::log(ops::add_const(ops::neg(pc), 1.0));
    Variable ll = ops::add(ops::mul(t, log_p), ops::mul(one_minus_t, log_q));
    return ops::neg(ops::mean_all(ll));
}

Variable bce_from_probability(const Variable& p, double target) {
    if (target != 0.0 && target != 1.0) throw ContractError("bce_from_probability target must be 0 or 1");
    return bce_from_probability(p, Tensor::full(p.value.shape(), target));
}

Variable softmax_cross_entropy(const Variable& logits, const std::vector<std::size_t>& labels) {
    if (logits.tape == nullptr) throw ContractError("softmax_cross_entropy: operand is not on a tape");
    if (logits.value.rank() != 2) {
        throw DimensionError("softmax_cross_entropy expects [B x K] logits, got " + shape_str(logits.value.shape()));
    }
    const std::size_t B = logits.value.dim(0), K = logits.value.dim(1);
    if (labels.size() != B) {
        throw ContractError("softmax_cross_entropy got " + std::to_string(labels.size()) + " labels for batch " +
                            std::to_string(B));
    }
    for (std::size_t y : labels) {
        if (y >= K) throw ContractError("softmax_cross_entropy label " + std::to_string(y) + " out of range");
    }

    const double* pl = logits.value.data();
    // softmax probabilities, kept for the backward rule
    auto probs = std::make_shared<std::vector<double>>(B * K);
    double loss = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        const double* row = pl + i * K;
        double mx = row[0];
        for (std::size_t j = 1; j < K; ++j) mx = std::max(mx, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < K; ++j) denom += std::exp(row[j] - mx);
        const double log_denom = std::log(denom);
        for (std::size_t j = 0; j < K; ++j) (*probs)[i * K + j] = std::exp(row[j] - mx) / denom;
        loss += -(row[labels[i]] - mx - log_denom);
    }
    loss /= static_cast<double>(B);

    auto labels_copy = labels;
    auto backward = [probs, labels_copy, B, K](const Tensor& grad, Tape::Acc& acc) {
        double* gx = acc.buffer(0);
        if (!gx) return;
        const double gs = grad.item() / static_cast<double>(B);
        for (std::size_t i = 0; i < B; ++i) {
            for (std::size_t j = 0; j < K; ++j) {
                const double onehot = (j == labels_copy[i]) ? 1.0 : 0.0;
                gx[i * K + j] += gs * ((*probs)[i * K + j] - onehot);
            }
        }
    };
    return logits.tape->record(Tensor::scalar(loss), {&logits}, backward);
}

Variable hinge_loss(const Variable& scores, const std::vector<std::size_t>& labels, double margin) {
    if (scores.tape == nullptr) throw ContractError("hinge_loss: operand is not on a tape");
    if (scores.value.rank() != 2) {
        throw DimensionError("hinge_loss expects [B x K] scores, got " + shape_str(scores.value.shape()));
    }
    const std::size_t B = scores.value.dim(0), K = scores.value.dim(1);
    if (labels.size() != B) {
        throw ContractError("hinge_loss got " + std::to_string(labels.size()) + " labels for batch " +
                            std::to_string(B));
    }
    for (std::size_t y : labels) {
        if (y >= K) throw ContractError("hinge_loss label " + std::to_string(y) + " out of range");
    }

    const double* ps = scores.value.data();
    // active[i*K+j] = 1 when class j violates the margin for row i
    auto active = std::make_shared<std::vector<unsigned char>>(B * K, 0);
    double loss = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        const double sy = ps[i * K + labels[i]];
        for (std::size_t j = 0; j < K; ++j) {
            if (j == labels[i]) continue;
            const double v = margin + ps[i * K + j] - sy;
            if (v > 0.0) {
                loss += v;
                (*active)[i * K + j] = 1;
            }
        }
    }
    loss /= static_cast<double>(B);

    auto labels_copy = labels;
    auto backward = [active, labels_copy, B, K](const Tensor& grad, Tape::Acc& acc) {
        double* gx = acc.buffer(0);
        if (!gx) return;
        const double gs = grad.item() / static_cast<double>(B);
        for (std::size_t i = 0; i < B; ++i) {
            for (std::size_t j = 0; j < K; ++j) {
                if (!(*active)[i * K + j]) continue;
                gx[i * K + j] += gs;
                gx[i * K + labels_copy[i]] -= gs;
            }
        }
    };
    return scores.tape->record(Tensor::scalar(loss), {&scores}, backward);
}

Variable global_avg_pool(const Variable& x) {
    require_rank4("global_avg_pool", "input", x.value);
    return ops::reduce_mean(x, {2, 3}, false);
}

Variable pad2d(const Variable& x, std::size_t pad) {
    if (x.tape == nullptr) throw ContractError("pad2d: operand is not on a tape");
    require_rank4("pad2d", "input", x.value);
    if (pad == 0) return x;
    const std::size_t B = x.value.dim(0), C = x.value.dim(1), H = x.value.dim(2), W = x.value.dim(3);
    const std::size_t PH = H + 2 * pad, PW = W + 2 * pad;

    std::vector<double> out(B * C * PH * PW, 0.0);
    const double* px = x.value.data();
    for (std::size_t bc = 0; bc < B * C; ++bc) {
        for (std::size_t h = 0; h < H; ++h) {
            const double* src = px + (bc * H + h) * W;
            double* dst = out.data() + (bc * PH + h + pad) * PW + pad;
            std::copy(src, src + W, dst);
        }
    }
    Tensor value = Tensor::from(Shape{B, C, PH, PW}, std::move(out));

    auto backward = [B, C, H, W, PH, PW, pad](const Tensor& grad, Tape::Acc& acc) {
        double* gx = acc.buffer(0);
        if (!gx) return;
        const double* pg = grad.data();
        for (std::size_t bc = 0; bc < B * C; ++bc) {
            for (std::size_t h = 0; h < H; ++h) {
                const double* src = pg + (bc * PH + h + pad) * PW + pad;
                double* dst = gx + (bc * H + h) * W;
                for (std::size_t w = 0; w < W; ++w) dst[w] += src[w];
            }
        }
    };
    return x.tape->record(std::move(value), {&x}, backward);
}

Variable crop2d(const Variable& x, std::size_t margin) {
    if (x.tape == nullptr) throw ContractError("crop2d: operand is not on a tape");
    require_rank4("crop2d", "input", x.value);
    if (margin == 0) return x;
    const std::size_t B = x.value.dim(0), C = x.value.dim(1), H = x.value.dim(2), W = x.value.dim(3);
    if (2 * margin >= H || 2 * margin >= W) {
        throw DimensionError("crop2d margin " + std::to_string(margin) + " consumes the whole input " +
                             shape_str(x.value.shape()));
    }
    const std::size_t CH = H - 2 * margin, CW = W - 2 * margin;

    std::vector<double> out(B * C * CH * CW);
    const double* px = x.value.data();
    for (std::size_t bc = 0; bc < B * C; ++bc) {
        for (std::size_t h = 0; h < CH; ++h) {
            const double* src = px + (bc * H + h + margin) * W + margin;
            std::copy(src, src + CW, out.begin() + (bc * CH + h) * CW);
        }
    }
    Tensor value = Tensor::from(Shape{B, C, CH, CW}, std::move(out));

    auto backward = [B, C, H, W, CH, CW, margin](const Tensor& grad, Tape::Acc& acc) {
        double* gx = acc.buffer(0);
        if (!gx) return;
        const double* pg = grad.data();
        for (std::size_t bc = 0; bc < B * C; ++bc) {
            for (std::size_t h = 0; h < CH; ++h) {
                const double* src = pg + (bc * CH + h) * CW;
                double* dst = gx + (bc * H + h + margin) * W + margin;
                for (std::size_t w = 0; w < CW; ++w) dst[w] += src[w];
            }
        }
    };
    return x.tape->record(std::move(value), {&x}, backward);
}

}  // namespace layers

}  // namespace ganbench
