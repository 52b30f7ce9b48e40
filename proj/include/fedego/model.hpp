#pragma once

#include "fedego/rng.hpp"
#include "fedego/tensor.hpp"

#include <vector>

namespace fedego {

struct DenseLayer {
    Matrix weight;  // [d_out x d_in]
    Vector bias;    // [d_out]
};

/// Client-side MLP mapping raw features to reduction embeddings.
struct ReductionParams {
    std::vector<DenseLayer> layers;
    Activation activation = Activation::relu;

    std::size_t input_dim() const { return static_cast<std::size_t>(layers.front().weight.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(layers.back().weight.rows()); }
};

/// GraphSAGE stack over the ego shape (one bias-free weight per hop) followed
/// by a linear classifier.
struct PersonalizationParams {
    std::vector<Matrix> sage;  // layer l: [d_h x d_in]
    Matrix classifier_weight;  // [C x d_h]
    Vector classifier_bias;    // [C]
    Activation activation = Activation::relu;

    std::size_t num_classes() const { return static_cast<std::size_t>(classifier_weight.rows()); }
    std::size_t input_dim() const {
        return static_cast<std::size_t>(sage.empty() ? classifier_weight.cols() : sage.front().cols());
    }
};

struct ModelParams {
    ReductionParams reduction;
    PersonalizationParams personalization;
};

/// Gradients mirror the parameter layout exactly.
using Gradients = ModelParams;

struct ModelConfig {
    std::size_t reduction_dim = 64;
    std::size_t hidden_dim = 64;
    std::size_t reduction_layers = 1;
    Activation reduction_activation = Activation::relu;
    Activation activation = Activation::relu;
};

/// Glorot-uniform weights, zero biases.
ReductionParams init_reduction(std::size_t input_dim, const ModelConfig& config, Rng& rng);
PersonalizationParams init_personalization(std::size_t hops, std::size_t num_classes, const ModelConfig& config,
                                           Rng& rng);
ModelParams init_model(std::size_t input_dim, std::size_t hops, std::size_t num_classes, const ModelConfig& config,
                       Rng& rng);

/// Flat named views of every tensor, in a fixed order.
std::vector<TensorRef> tensors(ReductionParams& p);
std::vector<ConstTensorRef> tensors(const ReductionParams& p);
std::vector<TensorRef> tensors(PersonalizationParams& p);
std::vector<ConstTensorRef> tensors(const PersonalizationParams& p);
std::vector<TensorRef> tensors(ModelParams& p);
std::vector<ConstTensorRef> tensors(const ModelParams& p);

ReductionParams zeros_like(const ReductionParams& p);
PersonalizationParams zeros_like(const PersonalizationParams& p);
ModelParams zeros_like(const ModelParams& p);

template <class Params>
std::size_t parameter_count(const Params& p) {
    std::size_t n = 0;
    for (const auto& t : tensors(p)) n += t.values.size();
    return n;
}

}  // namespace fedego
