#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ganbench/autograd.hpp"
#include "ganbench/params.hpp"

namespace ganbench {

enum class OptimizerKind { Sgd, AdaptiveMoment };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Sgd;
    double lr = 0.01;
    // Adaptive-moment settings; ignored by plain sgd.
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

OptimizerKind optimizer_kind_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

// Applies one update rule to a ParamSet. Moment buffers are lazily shaped
// on the first step and then stay aligned with the parameters.
class Optimizer {
  public:
    explicit Optimizer(OptimizerConfig config);

    // One update from the gradients of `bound` (the tape leaves for
    // `params`, in ParamSet order). NaN/Inf gradients are a numeric error.
    void step(ParamSet& params, const Gradients& grads, const std::vector<Variable>& bound);

    const OptimizerConfig& config() const { return config_; }
    std::uint64_t step_count() const { return step_count_; }

  private:
    OptimizerConfig config_;
    std::uint64_t step_count_ = 0;
    std::vector<std::vector<double>> m_;  // first moments, per parameter
    std::vector<std::vector<double>> v_;  // second moments, per parameter
};

// Free-function form of the Eq.-style rule: theta <- theta - lr * grad.
void sgd_step(ParamSet& params, const std::vector<Tensor>& grads, double lr);

}  // namespace ganbench
