#pragma once

#include "fedego/graph.hpp"
#include "fedego/rng.hpp"
#include "fedego/tensor.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace fedego {

/// Number of positions in a fixed-fanout ego tree: 1 + n + ... + n^k.
/// Throws ConfigError on overflow or n == 0.
std::size_t shape_positions(std::size_t k, std::size_t n);

/// Half-open range of positions.
struct PositionRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool operator==(const PositionRange&) const = default;
};

/// Fixed shape S(k, n) of a k-hop ego-graph with fanout n. Positions are
/// numbered breadth-first, so layer j occupies [offset(j), offset(j) + n^j)
/// and the children of position p are n*p+1 .. n*p+n.
class EgoShape {
public:
    EgoShape() = default;
    EgoShape(std::size_t k, std::size_t n);

    std::size_t hops() const noexcept { return k_; }
    std::size_t fanout() const noexcept { return n_; }
    std::size_t positions() const noexcept { return positions_; }

    PositionRange layer(std::size_t j) const;
    std::size_t layer_of(std::size_t position) const;
    /// Positions in layers 0..j (the parents still valid after k-j propagation steps).
    std::size_t positions_through_layer(std::size_t j) const;

    /// Throws ConfigError for positions in the deepest layer or out of range.
    PositionRange children_of(std::size_t position) const;

    bool operator==(const EgoShape&) const = default;

private:
    std::size_t k_ = 0;
    std::size_t n_ = 1;
    std::size_t positions_ = 1;
};

struct EgoGraph {
    EgoShape shape;
    std::vector<NodeId> node_at;
    int center_label = 0;

    NodeId center() const { return node_at.front(); }
};

/// Breadth-first fixed-shape sampling: every parent draws `n` children
/// uniformly with replacement from its neighbors, or repeats itself when it
/// has none.
EgoGraph sample_ego_graph(const Graph& graph, NodeId center, const EgoShape& shape, Rng& rng);

/// One permutation per layer 1..k; entry t gives the new in-layer index of the
/// node at in-layer index t. Permutations below layer 1 must keep every node
/// inside its sibling block; a parent's subtree moves with it.
using LayerPermutations = std::vector<std::vector<std::size_t>>;

EgoGraph permute_alignment(const EgoGraph& ego, const LayerPermutations& permutations);

/// Uniformly random valid alignment for `shape`.
LayerPermutations random_alignment(const EgoShape& shape, Rng& rng);

/// Mixup over a batch of aligned ego-graphs: per-position mean of reduction
/// embeddings and labels. Carries no node ids.
struct MashedEgoGraph {
    EgoShape shape;
    Matrix embeddings;   // [S x d_r]
    Matrix soft_labels;  // [S x C]

    std::size_t reduction_dim() const { return static_cast<std::size_t>(embeddings.cols()); }
    std::size_t num_classes() const { return static_cast<std::size_t>(soft_labels.cols()); }
};

MashedEgoGraph mash_batch(const EgoShape& shape, std::span<const Matrix> member_embeddings,
                          std::span<const Matrix> member_labels);

/// One-hot labels of every position of `ego` ([S x C]).
Matrix position_labels(const Graph& graph, const EgoGraph& ego);

/// Binary form: "MEGO", k, n, d_r, C as uint32 LE, then embeddings and
/// soft labels as row-major float32 LE.
void write_mashed(std::ostream& out, const MashedEgoGraph& mashed);
MashedEgoGraph read_mashed(std::istream& in);

}  // namespace fedego
