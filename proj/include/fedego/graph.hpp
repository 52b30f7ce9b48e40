#pragma once

#include "fedego/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace fedego {

using NodeId = std::int32_t;
using Edge = std::pair<NodeId, NodeId>;

/// Immutable attributed graph: dense features, integer labels and a
/// symmetric adjacency in compressed (CSR) form with sorted neighbor lists.
class Graph {
public:
    Graph() = default;

    /// Builds the symmetric adjacency from an undirected edge list. Duplicate
    /// edges (in either direction) collapse and self-loops are dropped.
    Graph(Matrix features, std::vector<int> labels, std::size_t num_classes,
          std::span<const Edge> edges);

    std::size_t num_nodes() const noexcept { return labels_.size(); }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(features_.cols()); }
    /// Number of distinct undirected edges.
    std::size_t num_edges() const noexcept { return adjacency_.size() / 2; }

    const Matrix& features() const noexcept { return features_; }
    const std::vector<int>& labels() const noexcept { return labels_; }
    int label(NodeId v) const { return labels_[static_cast<std::size_t>(v)]; }

    std::span<const NodeId> neighbors(NodeId v) const {
        auto b = offsets_[static_cast<std::size_t>(v)];
        auto e = offsets_[static_cast<std::size_t>(v) + 1];
        return {adjacency_.data() + b, e - b};
    }
    std::size_t degree(NodeId v) const { return neighbors(v).size(); }
    bool has_edge(NodeId u, NodeId v) const;
    bool valid(NodeId v) const noexcept { return v >= 0 && static_cast<std::size_t>(v) < num_nodes(); }

    /// Subgraph induced by `nodes`; node i of the result is nodes[i].
    Graph induced_subgraph(std::span<const NodeId> nodes) const;

private:
    Matrix features_;
    std::vector<int> labels_;
    std::size_t num_classes_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> adjacency_;
};

struct LoadOptions {
    bool l1_normalize = false;
};

/// Reads a node file (`id<TAB>label<TAB>f_1 ... f_d`) and an edge file
/// (`src dst` per line, `#` comments). Ids are remapped densely in node-file
/// order; the class count is 1 + the largest label.
Graph load_graph(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path,
                 const LoadOptions& options = {});

struct SyntheticGraphConfig {
    std::size_t num_nodes = 200;
    std::size_t num_classes = 4;
    std::size_t feature_dim = 16;
    double intra_edge_prob = 0.1;
    double inter_edge_prob = 0.01;
    /// Standard deviation of each class-centroid coordinate.
    double centroid_scale = 1.0;
    double noise_stddev = 1.0;
    std::uint64_t seed = 0;
};

/// Planted-partition graph: node i has class i mod C, features are the class
/// centroid plus Gaussian noise, and each pair is linked independently with
/// the intra- or inter-class probability.
Graph generate_synthetic_graph(const SyntheticGraphConfig& config);

/// Stand-in with the size, class count and sparsity of the Cora citation
/// graph (2708 nodes, 7 classes, mean degree near 4).
SyntheticGraphConfig cora_like_config(std::uint64_t seed = 0);

}  // namespace fedego
