#pragma once

#include "fedego/model.hpp"

#include <iosfwd>
#include <span>

namespace fedego {

/// Coordinate-wise mean, accumulated in input order.
ReductionParams average_reduction(std::span<const ReductionParams> clients);
PersonalizationParams average_personalization(std::span<const PersonalizationParams> clients);
ModelParams average_model(std::span<const ModelParams> clients);

/// lambda * global + (1 - lambda) * local, elementwise.
PersonalizationParams mix_personalization(const PersonalizationParams& local, const PersonalizationParams& global,
                                          double lambda);

/// absolute: |local - global|. relative: |local - global| / |global|.
/// elementwise: |(local - global) / global| with the division per entry.
/// All norms are 2-norms over the flattened tensors.
enum class DivergenceMode { relative, absolute, elementwise };

struct WeightDivergence {
    double value = 0.0;
    /// Entries skipped in elementwise mode because |global| < 1e-12.
    std::size_t skipped = 0;
};

/// Relative mode throws NumericError when the global weights are all zero.
WeightDivergence weight_divergence(const PersonalizationParams& local, const PersonalizationParams& global,
                                   DivergenceMode mode);

/// Largest flattened 2-norm distance between any two parameter sets.
double max_pairwise_distance(std::span<const ModelParams> models);

/// Size on the wire at 4 bytes per value.
template <class Params>
std::size_t parameter_bytes(const Params& p) {
    return 4 * parameter_count(p);
}

/// "FEGO" checkpoint: version, tensor count, then per tensor name, rank, dims
/// and row-major float32 LE values.
void write_checkpoint(std::ostream& out, const ModelParams& model);
ModelParams read_checkpoint(std::istream& in, Activation reduction_activation = Activation::relu,
                            Activation activation = Activation::relu);

}  // namespace fedego
