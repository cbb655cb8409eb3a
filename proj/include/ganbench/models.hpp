#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ganbench/autograd.hpp"
#include "ganbench/layers.hpp"
#include "ganbench/params.hpp"
#include "ganbench/rng.hpp"

namespace ganbench {

enum class LayerKind {
    Affine,
    Conv2d,
    Conv2dTranspose,
    Maxpool,
    Batchnorm,
    Relu,
    LeakyRelu,
    Tanh,
    Sigmoid,
    Flatten,
    Reshape,
    Pad2d,
    Crop2d,
    GlobalAvgPool,
    Residual,
};

std::string to_string(LayerKind k);

// One step of a model's forward procedure. Parameters are referenced by
// name into the model's ParamSet; batchnorm state by index into the
// model's state list. Residual layers nest their branch (and optional
// skip projection) as sublists.
struct LayerConfig {
    LayerKind kind = LayerKind::Relu;
    std::size_t in = 0, out = 0;                 // channel / feature widths
    std::size_t kernel = 0, stride = 1, pad = 0;  // conv / transpose
    std::size_t window = 0;                       // maxpool
    double alpha = 0.2;                           // leaky-relu slope
    Shape reshape_to;                             // per-sample target shape
    std::size_t margin = 0;                       // pad2d / crop2d amount
    std::size_t bn_index = static_cast<std::size_t>(-1);
    std::vector<std::string> param_names;         // layer-kind specific order
    std::vector<LayerConfig> branch;              // residual F(x)
    std::vector<LayerConfig> projection;          // residual skip; empty = identity
};

// A built network: structure, parameters, and batchnorm state. The layer
// list (and any aux head) is fixed after build; params are updated by
// optimizers, bn states by training forwards.
struct ModelSpec {
    std::string kind;
    Shape input_shape;    // per sample
    Shape output_shape;   // per sample
    std::vector<LayerConfig> layers;
    std::vector<LayerConfig> aux_layers;  // second head; empty for single-head models
    std::size_t aux_tap = 0;              // layer index whose OUTPUT feeds the aux head
    ParamSet params;
    std::vector<BatchNormState> bn_states;
    nlohmann::json config;                // enough to rebuild the structure
};

struct ForwardResult {
    Variable main;
    Variable aux;        // valid only when has_aux
    bool has_aux = false;
};

// Runs the model's layer program on x (a batch shaped
// [B x input_shape...]). `bound` are the tape leaves for model.params in
// ParamSet order. Train-mode forwards update batchnorm running stats.
ForwardResult model_forward(ModelSpec& model, Tape& tape, const std::vector<Variable>& bound,
                            const Variable& x, bool training);

// Builders. Widths are the narrowest block's channel count; deeper blocks
// double it. All parameters are drawn from `rng` (normal, std 0.02; bn
// gamma centered at 1, beta zero).
ModelSpec build_generator(std::size_t noise_dim, std::size_t out_channels, std::size_t out_size,
                          std::size_t width, Rng& rng);
ModelSpec build_discriminator(std::size_t in_channels, std::size_t in_size, std::size_t width, Rng& rng);
ModelSpec build_gan_classifier(std::size_t in_channels, std::size_t in_size, std::size_t num_classes,
                               std::size_t width, Rng& rng);
ModelSpec build_cnn(std::size_t in_channels, std::size_t in_size, std::size_t num_classes, std::size_t width,
                    Rng& rng);
ModelSpec build_resnet(std::size_t in_channels, std::size_t in_size, std::size_t num_classes,
                       std::size_t blocks, std::size_t width, Rng& rng);
ModelSpec build_linear_svm(std::size_t in_dim, std::size_t num_classes, Rng& rng);
// Small dense nets for the 2-D toy mixture experiments.
ModelSpec build_mlp_generator(std::size_t noise_dim, std::size_t out_dim, std::size_t hidden, Rng& rng);
ModelSpec build_mlp_discriminator(std::size_t in_dim, std::size_t hidden, Rng& rng);

// Dispatches on config["model"]; see the builders for recognized kinds.
// The full config is echoed into the returned spec.
ModelSpec build_model_from_config(const nlohmann::json& config, std::uint64_t seed);

// Structural sanity: shapes compose (dry eval-mode forward on a batch of
// 2), names unique, bn indices valid. Throws on violation.
void validate_model(const ModelSpec& model);

}  // namespace ganbench
