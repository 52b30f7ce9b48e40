#include "fedego/adam.hpp"

#include "fedego/errors.hpp"

#include <cmath>
#include <string>

namespace fedego {

void adam_step(AdamState& state, std::span<const TensorRef> params, std::span<const ConstTensorRef> grads) {
    if (params.size() != grads.size()) throw ShapeError("adam: parameter and gradient tensor counts differ");
    if (state.first_moment.empty()) {
        for (const auto& p : params) {
            state.first_moment.emplace_back(p.values.size(), 0.0);
            state.second_moment.emplace_back(p.values.size(), 0.0);
        }
    }
    if (state.first_moment.size() != params.size()) throw ShapeError("adam: state tracks a different tensor count");
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (params[t].values.size() != grads[t].values.size() || state.first_moment[t].size() != params[t].values.size()) {
            throw ShapeError("adam: tensor '" + params[t].name + "' is not congruent with its gradient or state");
        }
    }

    const auto& c = state.config;
    ++state.step;
    const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto& m = state.first_moment[t];
        auto& v = state.second_moment[t];
        auto p = params[t].values;
        auto g = grads[t].values;
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
}

void adam_step(AdamState& state, ModelParams& params, const Gradients& grads) {
    auto p = tensors(params);
    auto g = tensors(grads);
    adam_step(state, p, g);
}

void adam_step(AdamState& state, PersonalizationParams& params, const PersonalizationParams& grads) {
    auto p = tensors(params);
    auto g = tensors(grads);
    adam_step(state, p, g);
}

}  // namespace fedego
