#pragma once

#include "fedego/model.hpp"
#include "fedego/nn.hpp"

#include <string>
#include <vector>

namespace fedego {

struct TensorGradCheck {
    std::string name;
    std::size_t coordinates = 0;
    double max_abs_error = 0.0;
    /// max |analytic - numeric| over the tensor, divided by the tensor's
    /// largest gradient magnitude (floored at 1e-8).
    double max_relative_error = 0.0;
};

struct GradCheckReport {
    std::vector<TensorGradCheck> tensors;
    double max_relative_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Central differences (f(x+h) - f(x-h)) / 2h on every coordinate, compared
/// against model_backward.
GradCheckReport finite_difference_gradcheck(const ModelParams& model, const EgoBatch& batch, double step,
                                            double tolerance);

}  // namespace fedego
