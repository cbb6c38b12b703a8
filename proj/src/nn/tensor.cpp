#include "sct/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sct::nn {

std::size_t element_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int s : shape) {
        if (s < 0) throw ShapeError("negative tensor extent");
        n *= static_cast<std::size_t>(s);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_))
        throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string());
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

std::string Tensor::shape_string() const { return shape_to_string(shape_); }

void expect_shape(const Tensor& t, const std::vector<int>& expected, const char* what) {
    if (t.shape() != expected)
        throw ShapeError(std::string(what) + ": expected shape " + shape_to_string(expected) + ", got " +
                         t.shape_string());
}

void add_inplace(Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("add_inplace: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

}  // namespace sct::nn
