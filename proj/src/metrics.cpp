#include "fedego/metrics.hpp"

#include "fedego/errors.hpp"

#include <algorithm>
#include <map>

namespace fedego {

namespace {

void check_pair(std::span<const int> predictions, std::span<const int> truths) {
    if (predictions.size() != truths.size()) throw ShapeError("prediction and truth counts differ");
    if (predictions.empty()) throw ConfigError("F1 over zero samples");
}

}  // namespace

double micro_f1(std::span<const int> predictions, std::span<const int> truths) {
    check_pair(predictions, truths);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) correct += predictions[i] == truths[i];
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double macro_f1(std::span<const int> predictions, std::span<const int> truths) {
    check_pair(predictions, truths);
    struct Counts {
        std::size_t tp = 0, fp = 0, fn = 0;
    };
    std::map<int, Counts> per_class;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == truths[i]) {
            ++per_class[truths[i]].tp;
        } else {
            ++per_class[predictions[i]].fp;
            ++per_class[truths[i]].fn;
        }
    }
    double sum = 0.0;
    for (const auto& [label, c] : per_class) {
        sum += 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
    }
    return sum / static_cast<double>(per_class.size());
}

EvalSet make_eval_set(const Graph& graph, std::span<const NodeId> nodes, const EgoShape& shape, Rng& rng) {
    EvalSet set;
    if (nodes.empty()) return set;
    std::vector<EgoGraph> egos;
    egos.reserve(nodes.size());
    for (NodeId v : nodes) {
        egos.push_back(sample_ego_graph(graph, v, shape, rng));
        set.truths.push_back(graph.label(v));
    }
    set.nodes.assign(nodes.begin(), nodes.end());
    set.batch = make_ego_batch(graph, egos);
    return set;
}

Metrics evaluate_model(const ModelParams& model, const EvalSet& eval) {
    if (eval.empty()) throw ConfigError("evaluation over an empty node set");
    Matrix logits = predict_logits(model, eval.batch);
    std::vector<int> predictions(eval.nodes.size());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best = 0;
        logits.row(i).maxCoeff(&best);
        predictions[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    Metrics m;
    m.samples = eval.nodes.size();
    m.micro_f1 = micro_f1(predictions, eval.truths);
    m.macro_f1 = macro_f1(predictions, eval.truths);
    m.loss = soft_cross_entropy(logits, eval.batch.targets);
    return m;
}

Metrics evaluate_model(const ModelParams& model, const Graph& graph, std::span<const NodeId> nodes,
                       const EgoShape& shape, Rng& eval_rng) {
    if (nodes.empty()) throw ConfigError("evaluation over an empty node set");
    return evaluate_model(model, make_eval_set(graph, nodes, shape, eval_rng));
}

}  // namespace fedego
