#include "ganbench/params.hpp"

#include "ganbench/errors.hpp"

namespace ganbench {

void ParamSet::add(std::string name, Tensor value) {
    if (has(name)) {
        throw ContractError("duplicate parameter name: " + name);
    }
    entries_.push_back(Entry{std::move(name), std::move(value)});
}

bool ParamSet::has(const std::string& name) const {
    for (const Entry& e : entries_) {
        if (e.name == name) return true;
    }
    return false;
}

std::size_t ParamSet::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return i;
    }
    throw ContractError("no parameter named " + name);
}

std::size_t ParamSet::total_scalars() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += e.value.numel();
    return n;
}

}  // namespace ganbench
