#include "fedego/theorem.hpp"

#include "fedego/ego.hpp"
#include "fedego/graph.hpp"
#include "fedego/model.hpp"
#include "fedego/nn.hpp"
#include "fedego/rng.hpp"

#include <algorithm>
#include <cmath>

namespace fedego {

namespace {

Matrix mash_with_alignment(const std::vector<EgoGraph>& egos, const Matrix& node_embeddings, Rng& rng) {
    const EgoShape& shape = egos.front().shape;
    std::vector<Matrix> embeddings;
    std::vector<Matrix> labels;
    for (const auto& ego : egos) {
        const EgoGraph aligned = permute_alignment(ego, random_alignment(shape, rng));
        Matrix e(static_cast<Eigen::Index>(shape.positions()), node_embeddings.cols());
        for (std::size_t p = 0; p < shape.positions(); ++p) {
            e.row(static_cast<Eigen::Index>(p)) = node_embeddings.row(aligned.node_at[p]);
        }
        embeddings.push_back(std::move(e));
        labels.push_back(Matrix::Zero(static_cast<Eigen::Index>(shape.positions()), 1));
    }
    return mash_batch(shape, embeddings, labels).embeddings;
}

double layer_sum_gap(const EgoShape& shape, const Matrix& a, const Matrix& b) {
    double gap = 0.0;
    for (std::size_t j = 0; j <= shape.hops(); ++j) {
        const auto range = shape.layer(j);
        const auto begin = static_cast<Eigen::Index>(range.begin);
        const auto size = static_cast<Eigen::Index>(range.size());
        const Vector sa = a.middleRows(begin, size).colwise().sum().transpose();
        const Vector sb = b.middleRows(begin, size).colwise().sum().transpose();
        gap = std::max(gap, (sa - sb).cwiseAbs().maxCoeff());
    }
    return gap;
}

}  // namespace

AlignmentCheckReport check_alignment_invariance(std::size_t trials, std::uint64_t seed, Activation activation,
                                                double output_tolerance, double sum_tolerance) {
    AlignmentCheckReport report;
    report.activation = activation;
    for (std::size_t t = 0; t < trials; ++t) {
        AlignmentTrial trial;
        trial.seed = derive_seed(seed, StreamKind::theorem_check, t);
        Rng rng(trial.seed);
        trial.hops = 1 + rng() % 3;
        trial.fanout = 2 + rng() % 3;
        trial.batch = 1 + rng() % 6;

        SyntheticGraphConfig graph_config;
        graph_config.num_nodes = 60;
        graph_config.num_classes = 3;
        graph_config.feature_dim = 6;
        graph_config.intra_edge_prob = 0.15;
        graph_config.inter_edge_prob = 0.05;
        graph_config.seed = trial.seed;
        const Graph graph = generate_synthetic_graph(graph_config);

        ModelConfig model_config;
        model_config.reduction_dim = 5;
        model_config.hidden_dim = 4;
        model_config.activation = activation;
        const ModelParams model =
            init_model(graph.feature_dim(), trial.hops, graph.num_classes(), model_config, rng);
        const Matrix node_embeddings = reduction_forward(model.reduction, graph.features());

        const EgoShape shape(trial.hops, trial.fanout);
        std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(graph.num_nodes() - 1));
        std::vector<EgoGraph> egos;
        for (std::size_t b = 0; b < trial.batch; ++b) egos.push_back(sample_ego_graph(graph, pick(rng), shape, rng));

        const Matrix first = mash_with_alignment(egos, node_embeddings, rng);
        const Matrix second = mash_with_alignment(egos, node_embeddings, rng);
        const Vector out_a = sage_forward_ego(model.personalization, first, shape).logits;
        const Vector out_b = sage_forward_ego(model.personalization, second, shape).logits;

        const double scale = std::max({out_a.cwiseAbs().maxCoeff(), out_b.cwiseAbs().maxCoeff(), 1e-12});
        trial.output_gap = (out_a - out_b).cwiseAbs().maxCoeff() / scale;
        trial.layer_sum_gap = layer_sum_gap(shape, first, second);
        trial.outputs_agree = trial.output_gap <= output_tolerance;
        trial.sums_agree = trial.layer_sum_gap <= sum_tolerance;
        report.output_violations += !trial.outputs_agree;
        report.sum_violations += !trial.sums_agree;
        report.trials.push_back(trial);
    }
    return report;
}

}  // namespace fedego
