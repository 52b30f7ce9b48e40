#pragma once

#include "fedego/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace fedego {

struct AdamConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam. Moments are allocated on the first step and must stay
/// congruent with the parameters afterwards.
struct AdamState {
    AdamConfig config;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    std::uint64_t step = 0;
};

void adam_step(AdamState& state, std::span<const TensorRef> params, std::span<const ConstTensorRef> grads);
void adam_step(AdamState& state, ModelParams& params, const Gradients& grads);
void adam_step(AdamState& state, PersonalizationParams& params, const PersonalizationParams& grads);

}  // namespace fedego
