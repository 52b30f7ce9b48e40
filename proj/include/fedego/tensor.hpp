#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace fedego {

/// Row-major so that one sample (node, position) is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { identity, relu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Named flat view over one parameter tensor (matrix or vector).
template <class T>
struct BasicTensorRef {
    std::string name;
    std::span<T> values;
    std::array<std::size_t, 2> dims{0, 0};
    std::size_t rank = 2;
};

using TensorRef = BasicTensorRef<double>;
using ConstTensorRef = BasicTensorRef<const double>;

inline TensorRef tensor_ref(std::string name, Matrix& m) {
    return {std::move(name), {m.data(), static_cast<std::size_t>(m.size())},
            {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, 2};
}
inline ConstTensorRef tensor_ref(std::string name, const Matrix& m) {
    return {std::move(name), {m.data(), static_cast<std::size_t>(m.size())},
            {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, 2};
}
inline TensorRef tensor_ref(std::string name, Vector& v) {
    return {std::move(name), {v.data(), static_cast<std::size_t>(v.size())},
            {static_cast<std::size_t>(v.size()), 0}, 1};
}
inline ConstTensorRef tensor_ref(std::string name, const Vector& v) {
    return {std::move(name), {v.data(), static_cast<std::size_t>(v.size())},
            {static_cast<std::size_t>(v.size()), 0}, 1};
}

inline Matrix apply_activation(Activation a, const Matrix& z) {
    if (a == Activation::relu) return z.cwiseMax(0.0);
    return z;
}

/// Multiplies `grad` in place by the activation derivative evaluated at pre-activation `z`.
inline void apply_activation_grad(Activation a, const Matrix& z, Matrix& grad) {
    if (a == Activation::relu) grad = (z.array() > 0.0).select(grad, 0.0);
}

}  // namespace fedego
