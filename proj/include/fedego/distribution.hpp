#pragma once

#include "fedego/tensor.hpp"

#include <span>
#include <vector>

namespace fedego {

/// Label distribution over C classes (entries >= 0, summing to 1).
class DistributionVector {
public:
    DistributionVector() = default;
    explicit DistributionVector(std::vector<double> probs);

    /// Normalized class histogram of hard labels.
    static DistributionVector from_labels(std::span<const int> labels, std::size_t num_classes);

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t c) const { return probs_[c]; }
    const std::vector<double>& probs() const noexcept { return probs_; }

private:
    std::vector<double> probs_;
};

/// Column-wise mean of one-hot or convex label rows.
DistributionVector distribution_vector(const Matrix& soft_labels);

/// Earth mover's distance as the L1 gap between two distributions, in [0, 2].
double earth_movers_distance(const DistributionVector& a, const DistributionVector& b);

}  // namespace fedego
