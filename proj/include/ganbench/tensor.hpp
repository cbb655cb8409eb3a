#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace ganbench {

// Extent list; empty shape denotes a scalar.
using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense n-dimensional array of doubles, row-major. Values are immutable
// once constructed; the data buffer is shared between copies. Every
// checked constructor rejects non-finite values so NaN/Inf cannot travel
// silently through the engine.
class Tensor {
  public:
    Tensor() : Tensor(scalar(0.0)) {}

    static Tensor from(Shape shape, std::vector<double> values);
    // Skips the finiteness scan; for callers that deliberately need
    // non-finite payloads (tests, raw buffers known safe).
    static Tensor from_unchecked(Shape shape, std::vector<double> values);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor ones(Shape shape) { return full(std::move(shape), 1.0); }
    static Tensor scalar(double value);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_->size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

    const double* data() const { return data_->data(); }
    const std::vector<double>& values() const { return *data_; }
    double at(std::size_t flat_index) const { return data_->at(flat_index); }

    // Value of a single-element tensor.
    double item() const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

  private:
    Tensor(Shape shape, std::shared_ptr<const std::vector<double>> data)
        : shape_(std::move(shape)), data_(std::move(data)) {}

    Shape shape_;
    std::shared_ptr<const std::vector<double>> data_;
};

Tensor zeros_like(const Tensor& t);
Tensor ones_like(const Tensor& t);

// Exact elementwise equality (bitwise on the double payload).
bool bitwise_equal(const Tensor& a, const Tensor& b);
// Max absolute elementwise difference; shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace ganbench
