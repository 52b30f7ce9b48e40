#include "fedego/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace fedego {

GradCheckReport finite_difference_gradcheck(const ModelParams& model, const EgoBatch& batch, double step,
                                            double tolerance) {
    const auto analytic = model_backward(model, batch);
    auto grads = tensors(analytic.grads);
    ModelParams probe = model;
    auto params = tensors(probe);

    GradCheckReport report;
    report.tolerance = tolerance;
    for (std::size_t t = 0; t < params.size(); ++t) {
        TensorGradCheck check{params[t].name, params[t].values.size(), 0.0, 0.0};
        double scale = 0.0;
        for (std::size_t i = 0; i < params[t].values.size(); ++i) {
            double& x = params[t].values[i];
            const double saved = x;
            x = saved + step;
            const double up = model_loss(probe, batch);
            x = saved - step;
            const double down = model_loss(probe, batch);
            x = saved;
            const double numeric = (up - down) / (2.0 * step);
            const double exact = grads[t].values[i];
            check.max_abs_error = std::max(check.max_abs_error, std::abs(exact - numeric));
            scale = std::max({scale, std::abs(exact), std::abs(numeric)});
        }
        check.max_relative_error = check.max_abs_error / std::max(scale, 1e-8);
        report.max_relative_error = std::max(report.max_relative_error, check.max_relative_error);
        report.tensors.push_back(std::move(check));
    }
    report.passed = report.max_relative_error < tolerance;
    return report;
}

}  // namespace fedego
