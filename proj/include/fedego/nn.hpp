#pragma once

#include "fedego/ego.hpp"
#include "fedego/graph.hpp"
#include "fedego/model.hpp"

#include <span>
#include <vector>

namespace fedego {

/// Reduction MLP applied row-wise: r <- act(W r + b) per layer.
Matrix reduction_forward(const ReductionParams& params, const Matrix& features);

struct SageOutput {
    Vector logits;            // [C]
    Vector center_embedding;  // [d_h]
};

/// Mean-aggregator GraphSAGE over one fixed-shape ego-graph. Layer l updates
/// every position that still has children: p <- act(W_l p + W_l mean(children)).
SageOutput sage_forward_ego(const PersonalizationParams& params, const Matrix& position_embeddings,
                            const EgoShape& shape);

/// Batched form: `position_embeddings` stacks B ego-graphs of S rows each.
/// Returns center logits [B x C]; optionally the center embeddings [B x d_h].
Matrix sage_forward_batch(const PersonalizationParams& params, const Matrix& position_embeddings,
                          const EgoShape& shape, Matrix* center_embeddings = nullptr);

Matrix softmax_rows(const Matrix& logits);

/// Mean over rows of -sum_c y_c log softmax(z)_c, logs clamped at log(1e-12).
double soft_cross_entropy(const Matrix& logits, const Matrix& soft_targets);

/// Ego-graphs of one mini-batch with the raw features they reference. Each
/// distinct node's feature row is stored once; `rows` maps (member, position)
/// to that row.
struct EgoBatch {
    EgoShape shape;
    Matrix features;
    std::vector<Eigen::Index> rows;  // B*S entries
    Matrix targets;                  // [B x C] center targets

    std::size_t size() const { return static_cast<std::size_t>(targets.rows()); }
};

/// Targets are the one-hot center labels.
EgoBatch make_ego_batch(const Graph& graph, std::span<const EgoGraph> egos);

/// Reduction embeddings of every (member, position) row of the batch ([B*S x d_r]).
Matrix batch_position_embeddings(const ReductionParams& params, const EgoBatch& batch);

Matrix predict_logits(const ModelParams& model, const EgoBatch& batch);
double model_loss(const ModelParams& model, const EgoBatch& batch);

struct ModelBackward {
    double loss = 0.0;
    Gradients grads;
    /// Reduction embeddings produced by the forward pass ([B*S x d_r]).
    Matrix position_embeddings;
};

/// Center-node loss and its exact gradient w.r.t. every parameter.
ModelBackward model_backward(const ModelParams& model, const EgoBatch& batch);

struct PersonalizationBackward {
    double loss = 0.0;
    PersonalizationParams grads;
};

/// Loss and gradient of the personalization layers alone on precomputed
/// position embeddings (the server's training path on mashed ego-graphs).
PersonalizationBackward personalization_backward(const PersonalizationParams& params,
                                                 const Matrix& position_embeddings, const EgoShape& shape,
                                                 const Matrix& targets);

}  // namespace fedego
