#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "ganbench/params.hpp"
#include "ganbench/tensor.hpp"

namespace ganbench {

class Tape;

// A value recorded on a tape. Copies are cheap (the tensor buffer is
// shared); the id addresses the tape node that produced the value.
struct Variable {
    Tensor value;
    Tape* tape = nullptr;
    int id = -1;
    bool requires_grad = false;
};

// Result of Tape::backward. Holds gradients for requires-grad leaves that
// the loss reaches; leaves it does not reach read back as zeros.
class Gradients {
  public:
    Tensor at(const Variable& v) const;
    bool reached(const Variable& v) const;
    std::size_t reached_count() const { return by_node_.size(); }

  private:
    friend class Tape;
    std::unordered_map<int, Tensor> by_node_;
};

// Wengert list: an append-only record of the forward computation. One tape
// per forward pass; backward replays it in reverse exactly once. A tape
// must be driven by a single logical thread of control.
class Tape {
  public:
    class Acc;
    using BackwardFn = std::function<void(const Tensor& out_grad, Acc& acc)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Variable leaf(Tensor value, bool requires_grad = false);
    Variable constant(Tensor value) { return leaf(std::move(value), false); }
    Variable constant(double value) { return leaf(Tensor::scalar(value), false); }

    // Appends an op node. `backward` receives the upstream gradient and an
    // accumulation sink addressed by input slot. It is dropped when no
    // input needs gradients.
    Variable record(Tensor value, const std::vector<const Variable*>& inputs, BackwardFn backward);

    // Reverse sweep from a scalar loss. Pure: a second call returns an
    // identical gradient map.
    Gradients backward(const Variable& loss) const;

    std::size_t node_count() const { return nodes_.size(); }

    // Accumulation sink handed to backward rules.
    class Acc {
      public:
        // Adds `grad` (shaped like the slot's input) into that input's buffer.
        void add(std::size_t slot, const Tensor& grad);
        // Raw accumulation buffer for kernels that scatter in place;
        // nullptr when the input does not need gradients.
        double* buffer(std::size_t slot);

      private:
        friend class Tape;
        Acc(const Tape& tape, int node_id, std::vector<struct GradBuf>& bufs)
            : tape_(tape), node_id_(node_id), bufs_(bufs) {}
        const Tape& tape_;
        int node_id_;
        std::vector<struct GradBuf>& bufs_;
    };

  private:
    struct Node {
        std::vector<int> inputs;
        Shape shape;
        bool needs_grad = false;
        bool is_leaf = false;
        BackwardFn backward;
    };

    int check_input(const Variable& v) const;

    std::vector<Node> nodes_;
};

// Scratch gradient buffer used during a backward sweep.
struct GradBuf {
    std::vector<double> acc;
    bool set = false;
};

// Builds a scalar loss on the given tape from variables bound to a ParamSet
// (same order as the set's entries).
using ScalarGraphFn = std::function<Variable(Tape&, const std::vector<Variable>&)>;

// Binds every entry of `params` onto `tape` as a leaf.
std::vector<Variable> bind(Tape& tape, const ParamSet& params, bool requires_grad);

// Compares the analytic gradient of f against central finite differences
// with step h. Returns the max over all coordinates of
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
double finite_diff_check(const ScalarGraphFn& f, const ParamSet& params, double h = 1e-5);

}  // namespace ganbench
