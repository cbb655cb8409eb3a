#include "ganbench/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "ganbench/errors.hpp"

namespace ganbench {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {

bool buffer_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace

Tensor Tensor::from(Shape shape, std::vector<double> values) {
    Tensor t = from_unchecked(std::move(shape), std::move(values));
    if (!t.all_finite()) {
        throw NumericError("tensor contains NaN or Inf (shape " + shape_str(t.shape()) + ")");
    }
    return t;
}

Tensor Tensor::from_unchecked(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size()) {
        throw DimensionError("tensor data length " + std::to_string(values.size()) +
                             " does not match shape " + shape_str(shape));
    }
    return Tensor(std::move(shape), std::make_shared<const std::vector<double>>(std::move(values)));
}

Tensor Tensor::zeros(Shape shape) {
    std::size_t n = shape_numel(shape);
    return from_unchecked(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(Shape shape, double value) {
    std::size_t n = shape_numel(shape);
    Tensor t = from_unchecked(std::move(shape), std::vector<double>(n, value));
    if (!std::isfinite(value)) {
        throw NumericError("tensor fill value is not finite");
    }
    return t;
}

Tensor Tensor::scalar(double value) { return full(Shape{}, value); }

double Tensor::item() const {
    if (numel() != 1) {
        throw ContractError("item() requires a single-element tensor, got shape " + shape_str(shape_));
    }
    return (*data_)[0];
}

bool Tensor::all_finite() const { return buffer_finite(*data_); }

Tensor zeros_like(const Tensor& t) { return Tensor::zeros(t.shape()); }
Tensor ones_like(const Tensor& t) { return Tensor::ones(t.shape()); }

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.data(), b.data(), a.numel() * sizeof(double)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("max_abs_diff: shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        m = std::max(m, std::fabs(a.at(i) - b.at(i)));
    }
    return m;
}

}  // namespace ganbench
