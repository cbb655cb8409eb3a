#include "ganbench/autograd.hpp"

#include <cmath>

#include "ganbench/errors.hpp"

namespace ganbench {

Tensor Gradients::at(const Variable& v) const {
    if (!v.requires_grad) {
        throw ContractError("gradient requested for a variable that does not require gradients");
    }
    auto it = by_node_.find(v.id);
    if (it == by_node_.end()) {
        return zeros_like(v.value);  // parameter unreachable from the loss
    }
    return it->second;
}

bool Gradients::reached(const Variable& v) const { return by_node_.count(v.id) != 0; }

Variable Tape::leaf(Tensor value, bool requires_grad) {
    Node n;
    n.shape = value.shape();
    n.needs_grad = requires_grad;
    n.is_leaf = true;
    nodes_.push_back(std::move(n));
    return Variable{std::move(value), this, static_cast<int>(nodes_.size() - 1), requires_grad};
}

int Tape::check_input(const Variable& v) const {
    if (v.tape != this) {
        throw ContractError("variable does not belong to this tape");
    }
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
        throw ContractError("variable has an invalid node id");
    }
    return v.id;
}

Variable Tape::record(Tensor value, const std::vector<const Variable*>& inputs, BackwardFn backward) {
    Node n;
    n.shape = value.shape();
    n.inputs.reserve(inputs.size());
    for (const Variable* v : inputs) {
        n.inputs.push_back(check_input(*v));
        n.needs_grad = n.needs_grad || nodes_[n.inputs.back()].needs_grad;
    }
    const bool needs_grad = n.needs_grad;
    if (needs_grad) {
        n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return Variable{std::move(value), this, static_cast<int>(nodes_.size() - 1), needs_grad};
}

void Tape::Acc::add(std::size_t slot, const Tensor& grad) {
    const auto& node = tape_.nodes_[node_id_];
    if (slot >= node.inputs.size()) {
        throw ContractError("backward rule wrote to a slot that does not exist");
    }
    int target = node.inputs[slot];
    const auto& tnode = tape_.nodes_[target];
    if (!tnode.needs_grad) return;
    if (grad.shape() != tnode.shape) {
        throw DimensionError("gradient shape " + shape_str(grad.shape()) +
                             " does not match input shape " + shape_str(tnode.shape));
    }
    GradBuf& buf = bufs_[target];
    if (!buf.set) {
        buf.acc.assign(shape_numel(tnode.shape), 0.0);
        buf.set = true;
    }
    const double* g = grad.data();
    for (std::size_t i = 0; i < buf.acc.size(); ++i) buf.acc[i] += g[i];
}

double* Tape::Acc::buffer(std::size_t slot) {
    const auto& node = tape_.nodes_[node_id_];
    if (slot >= node.inputs.size()) {
        throw ContractError("backward rule asked for a slot that does not exist");
    }
    int target = node.inputs[slot];
    const auto& tnode = tape_.nodes_[target];
    if (!tnode.needs_grad) return nullptr;
    GradBuf& buf = bufs_[target];
    if (!buf.set) {
        buf.acc.assign(shape_numel(tnode.shape), 0.0);
        buf.set = true;
    }
    return buf.acc.data();
}

Gradients Tape::backward(const Variable& loss) const {
    int root = check_input(loss);
    if (shape_numel(nodes_[root].shape) != 1) {
        throw ContractError("backward requires a scalar loss, got shape " +
                            shape_str(nodes_[root].shape));
    }

    std::vector<GradBuf> bufs(nodes_.size());
    bufs[root].acc.assign(1, 1.0);
    bufs[root].set = true;

    for (int id = root; id >= 0; --id) {
        const Node& node = nodes_[id];
        if (!bufs[id].set || !node.needs_grad || !node.backward) continue;
        Tensor out_grad = Tensor::from_unchecked(node.shape, bufs[id].acc);
        Acc acc(*this, id, bufs);
        node.backward(out_grad, acc);
    }

    Gradients result;
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        const Node& node = nodes_[id];
        if (node.is_leaf && node.needs_grad && bufs[id].set) {
            // Freeze through the checked path: a NaN gradient fails fast here.
            result.by_node_.emplace(static_cast<int>(id),
                                    Tensor::from(node.shape, std::move(bufs[id].acc)));
        }
    }
    return result;
}

std::vector<Variable> bind(Tape& tape, const ParamSet& params, bool requires_grad) {
    std::vector<Variable> vars;
    vars.reserve(params.size());
    for (const auto& e : params) {
        vars.push_back(tape.leaf(e.value, requires_grad));
    }
    return vars;
}

namespace {

double eval_scalar(const ScalarGraphFn& f, const ParamSet& params) {
    Tape tape;
    auto vars = bind(tape, params, false);
    return f(tape, vars).value.item();
}

}  // namespace

double finite_diff_check(const ScalarGraphFn& f, const ParamSet& params, double h) {
    if (h <= 0.0) {
        throw ContractError("finite_diff_check requires h > 0");
    }

    // Analytic pass.
    Tape tape;
    auto vars = bind(tape, params, true);
    Variable loss = f(tape, vars);
    Gradients grads = tape.backward(loss);

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor analytic = grads.at(vars[pi]);
        const Tensor& base = params[pi].value;
        for (std::size_t i = 0; i < base.numel(); ++i) {
            auto perturbed = [&](double delta) {
                ParamSet copy;
                for (std::size_t pj = 0; pj < params.size(); ++pj) {
                    if (pj == pi) {
                        std::vector<double> vals = params[pj].value.values();
                        vals[i] += delta;
                        copy.add(params[pj].name, Tensor::from(params[pj].value.shape(), std::move(vals)));
                    } else {
                        copy.add(params[pj].name, params[pj].value);
                    }
                }
                return eval_scalar(f, copy);
            };
            const double numeric = (perturbed(h) - perturbed(-h)) / (2.0 * h);
            const double a = analytic.at(i);
            if (!std::isfinite(a) || !std::isfinite(numeric)) {
                throw NumericError("finite_diff_check: non-finite gradient at " + params[pi].name);
            }
            const double rel = std::fabs(a - numeric) / std::max(1e-8, std::fabs(a) + std::fabs(numeric));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace ganbench
