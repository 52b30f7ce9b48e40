#pragma once

#include "fedego/ego.hpp"
#include "fedego/graph.hpp"
#include "fedego/model.hpp"
#include "fedego/nn.hpp"

#include <span>
#include <vector>

namespace fedego {

/// Micro-averaged F1; for single-label multiclass data this is accuracy.
double micro_f1(std::span<const int> predictions, std::span<const int> truths);

/// Unweighted mean of per-class F1 over classes seen in either array.
double macro_f1(std::span<const int> predictions, std::span<const int> truths);

struct Metrics {
    double micro_f1 = 0.0;
    double macro_f1 = 0.0;
    double loss = 0.0;
    std::size_t samples = 0;
};

/// Evaluation nodes with one pre-sampled ego-graph each. Sampling happens once
/// so every model evaluated against the set sees identical inputs.
struct EvalSet {
    std::vector<NodeId> nodes;
    std::vector<int> truths;
    EgoBatch batch;

    bool empty() const { return nodes.empty(); }
};

EvalSet make_eval_set(const Graph& graph, std::span<const NodeId> nodes, const EgoShape& shape, Rng& rng);

/// Read-only: argmax of the center logits against the node labels.
Metrics evaluate_model(const ModelParams& model, const EvalSet& eval);

Metrics evaluate_model(const ModelParams& model, const Graph& graph, std::span<const NodeId> nodes,
                       const EgoShape& shape, Rng& eval_rng);

}  // namespace fedego
