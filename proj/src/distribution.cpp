#include "fedego/distribution.hpp"

#include "fedego/errors.hpp"

#include <cmath>
#include <string>

namespace fedego {

DistributionVector::DistributionVector(std::vector<double> probs) : probs_(std::move(probs)) {
    double total = 0.0;
    for (double p : probs_) {
        if (!(p >= 0.0)) throw ConfigError("distribution entries must be non-negative");
        total += p;
    }
    if (!probs_.empty() && std::abs(total - 1.0) > 1e-9) {
        throw ConfigError("distribution entries sum to " + std::to_string(total) + ", expected 1");
    }
}

DistributionVector DistributionVector::from_labels(std::span<const int> labels, std::size_t num_classes) {
    if (labels.empty()) throw ConfigError("distribution of an empty label set");
    std::vector<double> counts(num_classes, 0.0);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw ConfigError("label outside class range");
        counts[static_cast<std::size_t>(y)] += 1.0;
    }
    for (double& c : counts) c /= static_cast<double>(labels.size());
    return DistributionVector(std::move(counts));
}

DistributionVector distribution_vector(const Matrix& soft_labels) {
    if (soft_labels.rows() == 0) throw ConfigError("distribution_vector needs at least one row");
    Eigen::RowVectorXd mean = soft_labels.colwise().sum() / static_cast<double>(soft_labels.rows());
    return DistributionVector(std::vector<double>(mean.data(), mean.data() + mean.size()));
}

double earth_movers_distance(const DistributionVector& a, const DistributionVector& b) {
    if (a.size() != b.size()) throw ShapeError("EMD between distributions of different class counts");
    double d = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) d += std::abs(a[c] - b[c]);
    return d;
}

}  // namespace fedego
