#include "ganbench/models.hpp"

#include <algorithm>

#include "ganbench/errors.hpp"
#include "ganbench/ops.hpp"

namespace ganbench {

std::string to_string(LayerKind k) {
    switch (k) {
        case LayerKind::Affine: return "affine";
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Conv2dTranspose: return "conv2d-transpose";
        case LayerKind::Maxpool: return "maxpool";
        case LayerKind::Batchnorm: return "batchnorm";
        case LayerKind::Relu: return "relu";
        case LayerKind::LeakyRelu: return "leaky-relu";
        case LayerKind::Tanh: return "tanh";
        case LayerKind::Sigmoid: return "sigmoid";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Reshape: return "reshape";
        case LayerKind::Pad2d: return "pad2d";
        case LayerKind::Crop2d: return "crop2d";
        case LayerKind::GlobalAvgPool: return "global-avg-pool";
        case LayerKind::Residual: return "residual";
    }
    throw ContractError("unknown layer kind");
}

namespace {

Tensor normal_tensor(Rng& rng, Shape shape, double mean, double stddev) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = mean + stddev * rng.normal();
    return Tensor::from(std::move(shape), std::move(v));
}

constexpr double kInitStd = 0.02;

LayerConfig make_affine(ModelSpec& m, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng) {
    LayerConfig lc;
    lc.kind = LayerKind::Affine;
    lc.in = in;
    lc.out = out;
    lc.param_names = {prefix + ".w", prefix + ".b"};
    m.params.add(lc.param_names[0], normal_tensor(rng, {in, out}, 0.0, kInitStd));
    m.params.add(lc.param_names[1], Tensor::zeros({out}));
    return lc;
}

LayerConfig make_conv(ModelSpec& m, const std::string& prefix, std::size_t in, std::size_t out,
                      std::size_t kernel, std::size_t stride, std::size_t pad, bool bias, Rng& rng) {
    LayerConfig lc;
    lc.kind = LayerKind::Conv2d;
    lc.in = in;
    lc.out = out;
    lc.kernel = kernel;
    lc.stride = stride;
    lc.pad = pad;
    lc.param_names = {prefix + ".k"};
    m.params.add(lc.param_names[0], normal_tensor(rng, {out, in, kernel, kernel}, 0.0, kInitStd));
    if (bias) {
        lc.param_names.push_back(prefix + ".b");
        m.params.add(lc.param_names[1], Tensor::zeros({out}));
    }
    return lc;
}

LayerConfig make_convT(ModelSpec& m, const std::string& prefix, std::size_t in, std::size_t out,
                       std::size_t kernel, std::size_t stride, std::size_t pad, Rng& rng) {
    LayerConfig lc;
    lc.kind = LayerKind::Conv2dTranspose;
    lc.in = in;
    lc.out = out;
    lc.kernel = kernel;
    lc.stride = stride;
    lc.pad = pad;
    lc.param_names = {prefix + ".k"};
    m.params.add(lc.param_names[0], normal_tensor(rng, {in, out, kernel, kernel}, 0.0, kInitStd));
    return lc;
}

LayerConfig make_bn(ModelSpec& m, const std::string& prefix, std::size_t channels, Rng& rng) {
    LayerConfig lc;
    lc.kind = LayerKind::Batchnorm;
    lc.in = lc.out = channels;
    lc.param_names = {prefix + ".gamma", prefix + ".beta"};
    m.params.add(lc.param_names[0], normal_tensor(rng, {channels}, 1.0, kInitStd));
    m.params.add(lc.param_names[1], Tensor::zeros({channels}));
    lc.bn_index = m.bn_states.size();
    m.bn_states.push_back(make_batchnorm_state(channels));
    return lc;
}

LayerConfig act(LayerKind kind, double alpha = 0.2) {
    LayerConfig lc;
    lc.kind = kind;
    lc.alpha = alpha;
    return lc;
}

LayerConfig make_maxpool(std::size_t window, std::size_t stride) {
    LayerConfig lc;
    lc.kind = LayerKind::Maxpool;
    lc.window = window;
    lc.stride = stride;
    return lc;
}

LayerConfig make_reshape(Shape per_sample) {
    LayerConfig lc;
    lc.kind = LayerKind::Reshape;
    lc.reshape_to = std::move(per_sample);
    return lc;
}

LayerConfig make_margin(LayerKind kind, std::size_t margin) {
    LayerConfig lc;
    lc.kind = kind;
    lc.margin = margin;
    return lc;
}

Variable apply_layer(ModelSpec& m, Tape& tape, const std::vector<Variable>& bound, const LayerConfig& lc,
                     Variable x, bool training);

Variable apply_stack(ModelSpec& m, Tape& tape, const std::vector<Variable>& bound,
                     const std::vector<LayerConfig>& stack, Variable x, bool training) {
    for (const LayerConfig& lc : stack) x = apply_layer(m, tape, bound, lc, x, training);
    return x;
}

Variable apply_layer(ModelSpec& m, Tape& tape, const std::vector<Variable>& bound, const LayerConfig& lc,
                     Variable x, bool training) {
    auto param = [&](std::size_t i) -> const Variable& { return bound.at(m.params.index_of(lc.param_names.at(i))); };
    switch (lc.kind) {
        case LayerKind::Affine:
            return layers::affine(x, param(0), param(1));
        case LayerKind::Conv2d: {
            Variable y = layers::conv2d(x, param(0), lc.stride, lc.pad);
            if (lc.param_names.size() > 1) {
                y = ops::add(y, ops::reshape(param(1), Shape{lc.out, 1, 1}));
            }
            return y;
        }
        case LayerKind::Conv2dTranspose:
            return layers::conv2d_transpose(x, param(0), lc.stride, lc.pad);
        case LayerKind::Maxpool:
            return layers::maxpool2d(x, lc.window, lc.stride);
        case LayerKind::Batchnorm: {
            BatchNormState& state = m.bn_states.at(lc.bn_index);
            state.training = training;
            return layers::batchnorm(x, param(0), param(1), state);
        }
        case LayerKind::Relu:
            return ops::relu(x);
        case LayerKind::LeakyRelu:
            return ops::leaky_relu(x, lc.alpha);
        case LayerKind::Tanh:
            return ops::tanh(x);
        case LayerKind::Sigmoid:
            return ops::sigmoid(x);
        case LayerKind::Flatten: {
            const std::size_t b = x.value.dim(0);
            return ops::reshape(x, Shape{b, x.value.numel() / b});
        }
        case LayerKind::Reshape: {
            Shape full{x.value.dim(0)};
            full.insert(full.end(), lc.reshape_to.begin(), lc.reshape_to.end());
            return ops::reshape(x, std::move(full));
        }
        case LayerKind::Pad2d:
            return layers::pad2d(x, lc.margin);
        case LayerKind::Crop2d:
            return layers::crop2d(x, lc.margin);
        case LayerKind::GlobalAvgPool:
            return layers::global_avg_pool(x);
        case LayerKind::Residual: {
            Variable f = apply_stack(m, tape, bound, lc.branch, x, training);
            Variable skip = lc.projection.empty() ? x : apply_stack(m, tape, bound, lc.projection, x, training);
            return ops::add(f, skip);
        }
    }
    throw ContractError("unknown layer kind");
}

}  // namespace

ForwardResult model_forward(ModelSpec& model, Tape& tape, const std::vector<Variable>& bound,
                            const Variable& x, bool training) {
    if (bound.size() != model.params.size()) {
        throw ContractError("model_forward got " + std::to_string(bound.size()) + " bound variables for " +
                            std::to_string(model.params.size()) + " parameters");
    }
    ForwardResult result;
    Variable h = x;
    Variable tap;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        h = apply_layer(model, tape, bound, model.layers[i], h, training);
        if (!model.aux_layers.empty() && i == model.aux_tap) tap = h;
    }
    result.main = h;
    if (!model.aux_layers.empty()) {
        if (model.aux_tap >= model.layers.size()) {
            throw ContractError("aux tap index out of range");
        }
        result.aux = apply_stack(model, tape, bound, model.aux_layers, tap, training);
        result.has_aux = true;
    }
    return result;
}

ModelSpec build_generator(std::size_t noise_dim, std::size_t out_channels, std::size_t out_size,
                          std::size_t width, Rng& rng) {
    if (noise_dim < 1) throw ContractError("generator noise dimension must be >= 1");
    if (out_channels < 1) throw ContractError("generator needs at least one output channel");
    if (out_size != 28 && out_size != 32) {
        throw ContractError("generator output size must be 28 or 32, got " + std::to_string(out_size));
    }
    if (width < 1) throw ContractError("generator width must be >= 1");

    ModelSpec m;
    m.kind = "generator";
    m.input_shape = {noise_dim};
    m.output_shape = {out_channels, out_size, out_size};

    const std::size_t w4 = 4 * width, w2 = 2 * width;
    m.layers.push_back(make_affine(m, "l0", noise_dim, w4 * 4 * 4, rng));
    m.layers.push_back(make_reshape({w4, 4, 4}));
    m.layers.push_back(make_bn(m, "l2", w4, rng));
    m.layers.push_back(act(LayerKind::Relu));
    m.layers.push_back(make_convT(m, "l4", w4, w2, 4, 2, 1, rng));   // 4 -> 8
    m.layers.push_back(make_bn(m, "l5", w2, rng));
    m.layers.push_back(act(LayerKind::Relu));
    m.layers.push_back(make_convT(m, "l7", w2, width, 4, 2, 1, rng));  // 8 -> 16
    m.layers.push_back(make_bn(m, "l8", width, rng));
    m.layers.push_back(act(LayerKind::Relu));
    m.layers.push_back(make_convT(m, "l10", width, out_channels, 4, 2, 1, rng));  // 16 -> 32
    m.layers.push_back(act(LayerKind::Tanh));
    if (out_size == 28) m.layers.push_back(make_margin(LayerKind::Crop2d, 2));
    return m;
}

namespace {

// Shared by the discriminator and the classifier: pad (28 only), three
// stride-2 conv blocks (no batchnorm on the first), flatten. Returns the
// flattened feature width.
std::size_t build_conv_trunk(ModelSpec& m, std::size_t in_channels, std::size_t in_size, std::size_t width,
                             Rng& rng) {
    if (in_channels < 1) throw ContractError("discriminator needs at least one input channel");
    if (in_size != 28 && in_size != 32) {
        throw ContractError("discriminator input size must be 28 or 32, got " + std::to_string(in_size));
    }
    if (width < 1) throw ContractError("discriminator width must be >= 1");

    const std::size_t w2 = 2 * width, w4 = 4 * width;
    if (in_size == 28) m.layers.push_back(make_margin(LayerKind::Pad2d, 2));
    const std::string p = "l" + std::to_string(m.layers.size());
    m.layers.push_back(make_conv(m, p, in_channels, width, 4, 2, 1, false, rng));  // 32 -> 16
    m.layers.push_back(act(LayerKind::LeakyRelu, 0.2));
    const std::string p2 = "l" + std::to_string(m.layers.size());
    m.layers.push_back(make_conv(m, p2, width, w2, 4, 2, 1, false, rng));  // 16 -> 8
    const std::string p3 = "l" + std::to_string(m.layers.size());
    m.layers.push_back(make_bn(m, p3, w2, rng));
    m.layers.push_back(act(LayerKind::LeakyRelu, 0.2));
    const std::string p4 = "l" + std::to_string(m.layers.size());
    m.layers.push_back(make_conv(m, p4, w2, w4, 4, 2, 1, false, rng));  // 8 -> 4
    const std::string p5 = "l" + std::to_string(m.layers.size());
    m.layers.push_back(make_bn(m, p5, w4, rng));
    m.layers.push_back(act(LayerKind::LeakyRelu, 0.2));
    LayerConfig flat;
    flat.kind = LayerKind::Flatten;
    m.layers.push_back(flat);
    return w4 * 4 * 4;
}

}  // namespace

ModelSpec build_discriminator(std::size_t in_channels, std::size_t in_size, std::size_t width, Rng& rng) {
    ModelSpec m;
    m.kind = "discriminator";
    m.input_shape = {in_channels, in_size, in_size};
    m.output_shape = {1};
    const std::size_t feat = build_conv_trunk(m, in_channels, in_size, width, rng);
    const std::string p = "l" + std::to_string(m.layers.size());
    m.layers.push_back(make_affine(m, p, feat, 1, rng));
    m.layers.push_back(act(LayerKind::Sigmoid));
    return m;
}

ModelSpec build_gan_classifier(std::size_t in_channels, std::size_t in_size, std::size_t num_classes,
                               std::size_t width, Rng& rng) {
    if (num_classes < 2) throw ContractError("classifier needs at least two classes");
    ModelSpec m;
    m.kind = "gan-classifier";
    m.input_shape = {in_channels, in_size, in_size};
    m.output_shape = {1};
    const std::size_t feat = build_conv_trunk(m, in_channels, in_size, width, rng);
    m.aux_tap = m.layers.size() - 1;  // flatten output feeds both heads
    const std::string p = "l" + std::to_string(m.layers.size());
    m.layers.push_back(make_affine(m, p, feat, 1, rng));
    m.layers.push_back(act(LayerKind::Sigmoid));
    m.aux_layers.push_back(make_affine(m, "aux0", feat, num_classes, rng));
    return m;
}

ModelSpec build_cnn(std::size_t in_channels, std::size_t in_size, std::size_t num_classes, std::size_t width,
                    Rng& rng) {
    if (in_channels < 1 || num_classes < 2) throw ContractError("cnn needs >= 1 channel and >= 2 classes");
    if (width < 1) throw ContractError("cnn width must be >= 1");
    if (in_size < 4) {
        throw ContractError("cnn input size " + std::to_string(in_size) + " is too small for two pooling stages");
    }
    ModelSpec m;
    m.kind = "cnn";
    m.input_shape = {in_channels, in_size, in_size};

    m.layers.push_back(make_conv(m, "l0", in_channels, width, 3, 1, 1, true, rng));
    m.layers.push_back(act(LayerKind::Relu));
    m.layers.push_back(make_maxpool(2, 2));
    const std::size_t s1 = (in_size - 2) / 2 + 1;
    m.layers.push_back(make_conv(m, "l3", width, 2 * width, 3, 1, 1, true, rng));
    m.layers.push_back(act(LayerKind::Relu));
    m.layers.push_back(make_maxpool(2, 2));
    const std::size_t s2 = (s1 - 2) / 2 + 1;
    LayerConfig flat;
    flat.kind = LayerKind::Flatten;
    m.layers.push_back(flat);
    const std::size_t feat = 2 * width * s2 * s2;
    const std::size_t hidden = 8 * width;
    m.layers.push_back(make_affine(m, "l7", feat, hidden, rng));
    m.layers.push_back(act(LayerKind::Relu));
    m.layers.push_back(make_affine(m, "l9", hidden, num_classes, rng));
    m.output_shape = {num_classes};
    return m;
}

ModelSpec build_resnet(std::size_t in_channels, std::size_t in_size, std::size_t num_classes,
                       std::size_t blocks, std::size_t width, Rng& rng) {
    if (in_channels < 1 || num_classes < 2) throw ContractError("resnet needs >= 1 channel and >= 2 classes");
    if (blocks < 1) throw ContractError("resnet needs at least one residual block");
    if (width < 1) throw ContractError("resnet width must be >= 1");
    if (in_size < 4) throw ContractError("resnet input size too small");

    ModelSpec m;
    m.kind = "resnet";
    m.input_shape = {in_channels, in_size, in_size};
    m.output_shape = {num_classes};

    m.layers.push_back(make_conv(m, "l0", in_channels, width, 3, 1, 1, false, rng));
    m.layers.push_back(make_bn(m, "l1", width, rng));
    m.layers.push_back(act(LayerKind::Relu));

    std::size_t channels = width;
    // The middle block downsamples and doubles width so the projection
    // path is exercised; the rest preserve shape.
    const std::size_t down_at = blocks / 2;
    for (std::size_t i = 0; i < blocks; ++i) {
        const bool down = blocks >= 2 && i == down_at;
        const std::size_t cout = down ? channels * 2 : channels;
        const std::size_t stride = down ? 2 : 1;
        const std::string p = "l" + std::to_string(m.layers.size());

        LayerConfig res;
        res.kind = LayerKind::Residual;
        res.in = channels;
        res.out = cout;
        res.branch.push_back(make_conv(m, p + ".b0", channels, cout, 3, stride, 1, false, rng));
        res.branch.push_back(make_bn(m, p + ".b1", cout, rng));
        res.branch.push_back(act(LayerKind::Relu));
        res.branch.push_back(make_conv(m, p + ".b3", cout, cout, 3, 1, 1, false, rng));
        res.branch.push_back(make_bn(m, p + ".b4", cout, rng));
        if (down) {
            res.projection.push_back(make_conv(m, p + ".p0", channels, cout, 1, 2, 0, false, rng));
        }
        m.layers.push_back(std::move(res));
        channels = cout;
    }

    LayerConfig gap;
    gap.kind = LayerKind::GlobalAvgPool;
    m.layers.push_back(gap);
    const std::string p = "l" + std::to_string(m.layers.size());
    m.layers.push_back(make_affine(m, p, channels, num_classes, rng));
    return m;
}

ModelSpec build_linear_svm(std::size_t in_dim, std::size_t num_classes, Rng& rng) {
    if (in_dim < 1 || num_classes < 2) throw ContractError("svm needs >= 1 input and >= 2 classes");
    ModelSpec m;
    m.kind = "linear-svm";
    m.input_shape = {in_dim};
    m.output_shape = {num_classes};
    LayerConfig flat;
    flat.kind = LayerKind::Flatten;
    m.layers.push_back(flat);
    m.layers.push_back(make_affine(m, "l1", in_dim, num_classes, rng));
    return m;
}

ModelSpec build_mlp_generator(std::size_t noise_dim, std::size_t out_dim, std::size_t hidden, Rng& rng) {
    if (noise_dim < 1) throw ContractError("generator noise dimension must be >= 1");
    if (out_dim < 1 || hidden < 1) throw ContractError("mlp generator needs positive widths");
    ModelSpec m;
    m.kind = "mlp-generator";
    m.input_shape = {noise_dim};
    m.output_shape = {1, 1, out_dim};
    m.layers.push_back(make_affine(m, "l0", noise_dim, hidden, rng));
    m.layers.push_back(act(LayerKind::Relu));
    m.layers.push_back(make_affine(m, "l2", hidden, hidden, rng));
    m.layers.push_back(act(LayerKind::Relu));
    m.layers.push_back(make_affine(m, "l4", hidden, out_dim, rng));
    m.layers.push_back(act(LayerKind::Tanh));
    m.layers.push_back(make_reshape({1, 1, out_dim}));
    return m;
}

ModelSpec build_mlp_discriminator(std::size_t in_dim, std::size_t hidden, Rng& rng) {
    if (in_dim < 1 || hidden < 1) throw ContractError("mlp discriminator needs positive widths");
    ModelSpec m;
    m.kind = "mlp-discriminator";
    m.input_shape = {in_dim};
    m.output_shape = {1};
    LayerConfig flat;
    flat.kind = LayerKind::Flatten;
    m.layers.push_back(flat);
    m.layers.push_back(make_affine(m, "l1", in_dim, hidden, rng));
    m.layers.push_back(act(LayerKind::LeakyRelu, 0.2));
    m.layers.push_back(make_affine(m, "l3", hidden, hidden, rng));
    m.layers.push_back(act(LayerKind::LeakyRelu, 0.2));
    m.layers.push_back(make_affine(m, "l5", hidden, 1, rng));
    m.layers.push_back(act(LayerKind::Sigmoid));
    return m;
}

namespace {

std::size_t cfg_size(const nlohmann::json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() <= 0) {
        throw ContractError(std::string("config field ") + key + " must be a positive integer");
    }
    return v.get<std::size_t>();
}

}  // namespace

ModelSpec build_model_from_config(const nlohmann::json& config, std::uint64_t seed) {
    if (!config.is_object() || !config.contains("model")) {
        throw ContractError("model config must be an object with a \"model\" field");
    }
    const std::string kind = config.at("model").get<std::string>();
    Rng rng(seed);
    ModelSpec m;
    if (kind == "generator") {
        m = build_generator(cfg_size(config, "noise_dim", 100), cfg_size(config, "channels", 1),
                            cfg_size(config, "size", 28), cfg_size(config, "width", 32), rng);
    } else if (kind == "discriminator") {
        m = build_discriminator(cfg_size(config, "channels", 1), cfg_size(config, "size", 28),
                                cfg_size(config, "width", 32), rng);
    } else if (kind == "gan-classifier") {
        m = build_gan_classifier(cfg_size(config, "channels", 1), cfg_size(config, "size", 28),
                                 cfg_size(config, "classes", 10), cfg_size(config, "width", 32), rng);
    } else if (kind == "cnn") {
        m = build_cnn(cfg_size(config, "channels", 1), cfg_size(config, "size", 28),
                      cfg_size(config, "classes", 10), cfg_size(config, "width", 8), rng);
    } else if (kind == "resnet") {
        m = build_resnet(cfg_size(config, "channels", 1), cfg_size(config, "size", 28),
                         cfg_size(config, "classes", 10), cfg_size(config, "blocks", 3),
                         cfg_size(config, "width", 16), rng);
    } else if (kind == "linear-svm") {
        std::size_t in_dim = 0;
        if (config.contains("in_dim")) {
            in_dim = cfg_size(config, "in_dim", 0);
        } else {
            const std::size_t c = cfg_size(config, "channels", 1);
            const std::size_t s = cfg_size(config, "size", 28);
            in_dim = c * s * s;
        }
        m = build_linear_svm(in_dim, cfg_size(config, "classes", 10), rng);
    } else if (kind == "mlp-generator") {
        m = build_mlp_generator(cfg_size(config, "noise_dim", 8), cfg_size(config, "out_dim", 2),
                                cfg_size(config, "hidden", 32), rng);
    } else if (kind == "mlp-discriminator") {
        m = build_mlp_discriminator(cfg_size(config, "in_dim", 2), cfg_size(config, "hidden", 32), rng);
    } else {
        throw ContractError("unknown model kind: " + kind);
    }
    m.config = config;
    validate_model(m);
    return m;
}

void validate_model(const ModelSpec& model) {
    for (const LayerConfig& lc : model.layers) {
        if (lc.kind == LayerKind::Batchnorm && lc.bn_index >= model.bn_states.size()) {
            throw ContractError("batchnorm layer references a missing state slot");
        }
    }
    // Dry eval-mode forward on a two-sample zero batch; throws if any
    // adjacent pair of layers fails to compose.
    ModelSpec scratch = model;
    Shape batch_shape{2};
    batch_shape.insert(batch_shape.end(), model.input_shape.begin(), model.input_shape.end());
    Tape tape;
    std::vector<Variable> bound = bind(tape, scratch.params, false);
    Variable x = tape.constant(Tensor::zeros(batch_shape));
    ForwardResult out = model_forward(scratch, tape, bound, x, false);
    Shape expect{2};
    expect.insert(expect.end(), model.output_shape.begin(), model.output_shape.end());
    if (out.main.value.shape() != expect) {
        throw ContractError("model forward produced " + shape_str(out.main.value.shape()) + ", declared " +
                            shape_str(expect));
    }
}

}  // namespace ganbench
