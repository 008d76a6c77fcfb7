#include "hydrodeep/tensor.hpp"

#include <cmath>
#include <sstream>

#include "hydrodeep/errors.hpp"

namespace hydrodeep {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_product(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_product(shape) != data.size()) {
        throw DimensionError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_string());
    }
}

Tensor Tensor::vector1d(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor({n}, std::move(v));
}

std::size_t Tensor::dim(std::size_t i) const {
    if (i >= shape.size()) throw DimensionError("tensor dim index out of range");
    return shape[i];
}

double& Tensor::at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
double Tensor::at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

double& Tensor::at(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
}
double Tensor::at(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
}

void Tensor::fill(double v) {
    for (double& x : data) x = v;
}

bool Tensor::all_finite() const {
    for (double x : data) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void Tensor::require_finite(const char* what) const {
    if (!all_finite()) {
        throw ParameterError(std::string(what) + ": non-finite entry in tensor " + shape_string());
    }
}

std::string Tensor::shape_string() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                             b.shape_string());
    }
}

}  // namespace hydrodeep
