#pragma once

#include <string>
#include <vector>

#include "ganbench/tensor.hpp"

namespace ganbench {

// Named, ordered collection of tensors. Order is the binding order used by
// tapes and optimizers; names are unique and are the checkpoint keys.
class ParamSet {
  public:
    struct Entry {
        std::string name;
        Tensor value;
    };

    void add(std::string name, Tensor value);
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    Entry& operator[](std::size_t i) { return entries_.at(i); }
    const Entry& operator[](std::size_t i) const { return entries_.at(i); }

    bool has(const std::string& name) const;
    std::size_t index_of(const std::string& name) const;  // throws ContractError if absent
    const Tensor& value_of(const std::string& name) const { return entries_.at(index_of(name)).value; }

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    std::size_t total_scalars() const;

  private:
    std::vector<Entry> entries_;
};

}  // namespace ganbench
