#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace hydrodeep {

/// Dense row-major tensor of 64-bit floats. Ranks used in practice are 1..3.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    /// Zero-filled tensor of the given shape.
    explicit Tensor(std::vector<std::size_t> s);

    /// Tensor with explicit contents; product(shape) must equal data.size().
    Tensor(std::vector<std::size_t> s, std::vector<double> d);

    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor vector1d(std::vector<double> v);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const;

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    double& at(std::size_t i, std::size_t j);
    double at(std::size_t i, std::size_t j) const;
    double& at(std::size_t i, std::size_t j, std::size_t k);
    double at(std::size_t i, std::size_t j, std::size_t k) const;

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    void fill(double v);
    bool all_finite() const;

    /// Throws ParameterError naming `what` if any entry is NaN or infinite.
    void require_finite(const char* what) const;

    std::string shape_string() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

/// Throws DimensionError unless the two shapes match.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace hydrodeep
