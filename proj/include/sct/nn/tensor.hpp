#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sct::nn {

class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense double-precision array. Volumetric activations use [N, C, D, H, W];
/// token sequences use [N, T, E]. Last axis is contiguous.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, double fill = 0.0);
    Tensor(std::vector<int> shape, std::vector<double> data);

    const std::vector<int>& shape() const { return shape_; }
    int dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    void fill(double v);
    Tensor zeros_like() const { return Tensor(shape_); }

    bool all_finite() const;
    std::string shape_string() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

std::size_t element_count(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

/// Throws ShapeError with `what` in the message unless t has exactly `expected` shape.
void expect_shape(const Tensor& t, const std::vector<int>& expected, const char* what);

/// a += b, element-wise.
void add_inplace(Tensor& a, const Tensor& b);

}  // namespace sct::nn
