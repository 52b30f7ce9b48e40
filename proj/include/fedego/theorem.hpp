#pragma once

#include "fedego/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fedego {

struct AlignmentTrial {
    std::uint64_t seed = 0;
    std::size_t hops = 0;
    std::size_t fanout = 0;
    std::size_t batch = 0;
    /// max |a - b| / max(|a|, |b|, 1e-12) over the center logits.
    double output_gap = 0.0;
    /// Largest deviation of a per-layer embedding sum between the alignments.
    double layer_sum_gap = 0.0;
    bool outputs_agree = false;
    bool sums_agree = false;
};

struct AlignmentCheckReport {
    Activation activation = Activation::identity;
    std::vector<AlignmentTrial> trials;
    std::size_t output_violations = 0;
    std::size_t sum_violations = 0;
};

/// Each trial samples a batch of ego-graphs from a small synthetic graph,
/// mashes it under two random alignments and compares the center outputs of
/// one personalization stack applied to both mashed graphs.
AlignmentCheckReport check_alignment_invariance(std::size_t trials, std::uint64_t seed, Activation activation,
                                                double output_tolerance = 1e-5, double sum_tolerance = 1e-9);

}  // namespace fedego
