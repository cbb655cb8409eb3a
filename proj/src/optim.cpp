#include "ganbench/optim.hpp"

#include <cmath>

#include "ganbench/errors.hpp"

namespace ganbench {

OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::Sgd;
    if (s == "adaptive-moment") return OptimizerKind::AdaptiveMoment;
    throw ContractError("unknown optimizer kind: " + s);
}

std::string to_string(OptimizerKind k) {
    return k == OptimizerKind::Sgd ? "sgd" : "adaptive-moment";
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
    if (!(config_.lr > 0.0)) throw ContractError("learning rate must be positive");
    if (config_.kind == OptimizerKind::AdaptiveMoment) {
        if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0) || !(config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
            throw ContractError("moment decay rates must lie in [0, 1)");
        }
        if (!(config_.eps > 0.0)) throw ContractError("adaptive eps must be positive");
    }
}

void Optimizer::step(ParamSet& params, const Gradients& grads, const std::vector<Variable>& bound) {
    if (bound.size() != params.size()) {
        throw ContractError("optimizer got " + std::to_string(bound.size()) + " bound variables for " +
                            std::to_string(params.size()) + " parameters");
    }

    if (config_.kind == OptimizerKind::Sgd) {
        std::vector<Tensor> gs;
        gs.reserve(params.size());
        for (const Variable& v : bound) gs.push_back(grads.at(v));
        sgd_step(params, gs, config_.lr);
        ++step_count_;
        return;
    }

    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].value.numel(), 0.0);
            v_[i].assign(params[i].value.numel(), 0.0);
        }
    } else if (m_.size() != params.size()) {
        throw ContractError("optimizer state holds " + std::to_string(m_.size()) +
                            " moment buffers for " + std::to_string(params.size()) + " parameters");
    }

    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double bc1 = 1.0 - std::pow(config_.beta1, t);
    const double bc2 = 1.0 - std::pow(config_.beta2, t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor g = grads.at(bound[i]);
        if (!g.same_shape(params[i].value)) {
            throw ContractError("gradient shape " + shape_str(g.shape()) + " does not match parameter " +
                                params[i].name);
        }
        if (!g.all_finite()) {
            throw NumericError("non-finite gradient for parameter " + params[i].name);
        }
        if (m_[i].size() != g.numel()) {
            throw ContractError("moment buffer for " + params[i].name + " is misshapen");
        }
        std::vector<double> theta(params[i].value.values());
        const double* pg = g.data();
        for (std::size_t j = 0; j < theta.size(); ++j) {
            m_[i][j] = config_.beta1 * m_[i][j] + (1.0 - config_.beta1) * pg[j];
            v_[i][j] = config_.beta2 * v_[i][j] + (1.0 - config_.beta2) * pg[j] * pg[j];
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            theta[j] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
        }
        Tensor updated = Tensor::from_unchecked(params[i].value.shape(), std::move(theta));
        if (!updated.all_finite()) {
            throw NumericError("parameter " + params[i].name + " became non-finite during the update");
        }
        params[i].value = updated;
    }
}

void sgd_step(ParamSet& params, const std::vector<Tensor>& grads, double lr) {
    if (!(lr > 0.0)) throw ContractError("learning rate must be positive");
    if (grads.size() != params.size()) {
        throw ContractError("sgd_step got " + std::to_string(grads.size()) + " gradients for " +
                            std::to_string(params.size()) + " parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor& g = grads[i];
        if (!g.same_shape(params[i].value)) {
            throw ContractError("gradient shape " + shape_str(g.shape()) + " does not match parameter " +
                                params[i].name);
        }
        if (!g.all_finite()) {
            throw NumericError("non-finite gradient for parameter " + params[i].name);
        }
        std::vector<double> theta(params[i].value.values());
        const double* pg = g.data();
        for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= lr * pg[j];
        Tensor updated = Tensor::from_unchecked(params[i].value.shape(), std::move(theta));
        if (!updated.all_finite()) {
            throw NumericError("parameter " + params[i].name + " became non-finite during the update");
        }
        params[i].value = updated;
    }
}

}  // namespace ganbench
