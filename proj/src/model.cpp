#include "fedego/model.hpp"

#include "fedego/errors.hpp"

#include <cmath>
#include <random>
#include <string>
#include <type_traits>

namespace fedego {

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "identity" || name == "linear") return Activation::identity;
    throw ConfigError("unknown activation '" + std::string(name) + "'");
}

namespace {

Matrix glorot(std::size_t out, std::size_t in, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    return w;
}

}  // namespace

ReductionParams init_reduction(std::size_t input_dim, const ModelConfig& config, Rng& rng) {
    if (config.reduction_layers == 0) throw ConfigError("reduction needs at least one layer");
    ReductionParams p;
    p.activation = config.reduction_activation;
    std::size_t in = input_dim;
    for (std::size_t l = 0; l < config.reduction_layers; ++l) {
        p.layers.push_back({glorot(config.reduction_dim, in, rng),
                            Vector::Zero(static_cast<Eigen::Index>(config.reduction_dim))});
        in = config.reduction_dim;
    }
    return p;
}

PersonalizationParams init_personalization(std::size_t hops, std::size_t num_classes, const ModelConfig& config,
                                           Rng& rng) {
    PersonalizationParams p;
    p.activation = config.activation;
    std::size_t in = config.reduction_dim;
    for (std::size_t l = 0; l < hops; ++l) {
        p.sage.push_back(glorot(config.hidden_dim, in, rng));
        in = config.hidden_dim;
    }
    p.classifier_weight = glorot(num_classes, in, rng);
    p.classifier_bias = Vector::Zero(static_cast<Eigen::Index>(num_classes));
    return p;
}

ModelParams init_model(std::size_t input_dim, std::size_t hops, std::size_t num_classes, const ModelConfig& config,
                       Rng& rng) {
    ModelParams m;
    m.reduction = init_reduction(input_dim, config, rng);
    m.personalization = init_personalization(hops, num_classes, config, rng);
    return m;
}

namespace {

template <class P>
auto reduction_views(P& p) {
    std::vector<BasicTensorRef<std::conditional_t<std::is_const_v<P>, const double, double>>> out;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        out.push_back(tensor_ref("reduction." + std::to_string(l) + ".weight", p.layers[l].weight));
        out.push_back(tensor_ref("reduction." + std::to_string(l) + ".bias", p.layers[l].bias));
    }
    return out;
}

template <class P>
auto personalization_views(P& p) {
    std::vector<BasicTensorRef<std::conditional_t<std::is_const_v<P>, const double, double>>> out;
    for (std::size_t l = 0; l < p.sage.size(); ++l) {
        out.push_back(tensor_ref("sage." + std::to_string(l) + ".weight", p.sage[l]));
    }
    out.push_back(tensor_ref("classifier.weight", p.classifier_weight));
    out.push_back(tensor_ref("classifier.bias", p.classifier_bias));
    return out;
}

}  // namespace

std::vector<TensorRef> tensors(ReductionParams& p) { return reduction_views(p); }
std::vector<ConstTensorRef> tensors(const ReductionParams& p) { return reduction_views(p); }
std::vector<TensorRef> tensors(PersonalizationParams& p) { return personalization_views(p); }
std::vector<ConstTensorRef> tensors(const PersonalizationParams& p) { return personalization_views(p); }

std::vector<TensorRef> tensors(ModelParams& p) {
    auto out = tensors(p.reduction);
    auto more = tensors(p.personalization);
    out.insert(out.end(), more.begin(), more.end());
    return out;
}

std::vector<ConstTensorRef> tensors(const ModelParams& p) {
    auto out = tensors(p.reduction);
    auto more = tensors(p.personalization);
    out.insert(out.end(), more.begin(), more.end());
    return out;
}

ReductionParams zeros_like(const ReductionParams& p) {
    ReductionParams z = p;
    for (auto& l : z.layers) {
        l.weight.setZero();
        l.bias.setZero();
    }
    return z;
}

PersonalizationParams zeros_like(const PersonalizationParams& p) {
    PersonalizationParams z = p;
    for (auto& w : z.sage) w.setZero();
    z.classifier_weight.setZero();
    z.classifier_bias.setZero();
    return z;
}

ModelParams zeros_like(const ModelParams& p) { return {zeros_like(p.reduction), zeros_like(p.personalization)}; }

}  // namespace fedego
