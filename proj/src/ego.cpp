#include "fedego/ego.hpp"

#include "binary_io.hpp"
#include "fedego/errors.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace fedego {

std::size_t shape_positions(std::size_t k, std::size_t n) {
    if (n == 0) throw ConfigError("ego shape fanout must be >= 1");
    std::size_t total = 1;
    std::size_t layer = 1;
    for (std::size_t j = 1; j <= k; ++j) {
        if (layer > std::numeric_limits<std::size_t>::max() / n) throw ConfigError("ego shape size overflows");
        layer *= n;
        if (total > std::numeric_limits<std::size_t>::max() - layer) throw ConfigError("ego shape size overflows");
        total += layer;
    }
    return total;
}

EgoShape::EgoShape(std::size_t k, std::size_t n) : k_(k), n_(n), positions_(shape_positions(k, n)) {}

std::size_t EgoShape::positions_through_layer(std::size_t j) const {
    return shape_positions(std::min(j, k_), n_);
}

PositionRange EgoShape::layer(std::size_t j) const {
    if (j > k_) throw ConfigError("layer " + std::to_string(j) + " beyond hop count " + std::to_string(k_));
    std::size_t begin = j == 0 ? 0 : positions_through_layer(j - 1);
    return {begin, positions_through_layer(j)};
}

std::size_t EgoShape::layer_of(std::size_t position) const {
    if (position >= positions_) throw ConfigError("position " + std::to_string(position) + " outside shape");
    std::size_t j = 0;
    while (position >= positions_through_layer(j)) ++j;
    return j;
}

PositionRange EgoShape::children_of(std::size_t position) const {
    if (position >= positions_) throw ConfigError("position " + std::to_string(position) + " outside shape");
    if (k_ == 0 || position >= positions_through_layer(k_ - 1)) {
        throw ConfigError("position " + std::to_string(position) + " lies in the deepest layer");
    }
    return {n_ * position + 1, n_ * position + n_ + 1};
}

EgoGraph sample_ego_graph(const Graph& graph, NodeId center, const EgoShape& shape, Rng& rng) {
    if (!graph.valid(center)) throw ConfigError("invalid ego-graph center " + std::to_string(center));
    EgoGraph ego;
    ego.shape = shape;
    ego.node_at.resize(shape.positions());
    ego.node_at[0] = center;
    ego.center_label = graph.label(center);
    const auto n = shape.fanout();
    const auto parents = shape.hops() == 0 ? 0 : shape.positions_through_layer(shape.hops() - 1);
    for (std::size_t p = 0; p < parents; ++p) {
        const NodeId u = ego.node_at[p];
        auto nb = graph.neighbors(u);
        for (std::size_t c = 0; c < n; ++c) {
            NodeId child = u;
            if (!nb.empty()) {
                std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
                child = nb[pick(rng)];
            }
            ego.node_at[n * p + 1 + c] = child;
        }
    }
    return ego;
}

EgoGraph permute_alignment(const EgoGraph& ego, const LayerPermutations& permutations) {
    const auto& shape = ego.shape;
    const auto n = shape.fanout();
    if (permutations.size() != shape.hops()) {
        throw ShapeError("expected " + std::to_string(shape.hops()) + " layer permutations, got " +
                         std::to_string(permutations.size()));
    }
    for (std::size_t j = 1; j <= shape.hops(); ++j) {
        const auto& perm = permutations[j - 1];
        const auto size = shape.layer(j).size();
        if (perm.size() != size) {
            throw ShapeError("layer " + std::to_string(j) + " permutation has " + std::to_string(perm.size()) +
                             " entries, layer has " + std::to_string(size));
        }
        std::vector<bool> seen(size, false);
        for (std::size_t t = 0; t < size; ++t) {
            if (perm[t] >= size || seen[perm[t]]) {
                throw ConfigError("layer " + std::to_string(j) + " mapping is not a permutation");
            }
            seen[perm[t]] = true;
            if (perm[t] / n != t / n) {
                throw ConfigError("layer " + std::to_string(j) + " permutation moves a node out of its sibling block");
            }
        }
    }

    std::vector<std::size_t> new_pos(shape.positions(), 0);
    for (std::size_t j = 1; j <= shape.hops(); ++j) {
        const auto range = shape.layer(j);
        const auto& perm = permutations[j - 1];
        for (std::size_t p = range.begin; p < range.end; ++p) {
            const auto parent = (p - 1) / n;
            const auto slot = perm[p - range.begin] % n;
            new_pos[p] = n * new_pos[parent] + 1 + slot;
        }
    }
    EgoGraph out = ego;
    for (std::size_t p = 0; p < shape.positions(); ++p) out.node_at[new_pos[p]] = ego.node_at[p];
    return out;
}

LayerPermutations random_alignment(const EgoShape& shape, Rng& rng) {
    const auto n = shape.fanout();
    LayerPermutations perms;
    std::vector<std::size_t> slots(n);
    for (std::size_t j = 1; j <= shape.hops(); ++j) {
        const auto size = shape.layer(j).size();
        std::vector<std::size_t> perm(size);
        for (std::size_t block = 0; block < size / n; ++block) {
            std::iota(slots.begin(), slots.end(), 0);
            std::shuffle(slots.begin(), slots.end(), rng);
            for (std::size_t s = 0; s < n; ++s) perm[block * n + s] = block * n + slots[s];
        }
        perms.push_back(std::move(perm));
    }
    return perms;
}

MashedEgoGraph mash_batch(const EgoShape& shape, std::span<const Matrix> member_embeddings,
                          std::span<const Matrix> member_labels) {
    if (member_embeddings.empty()) throw ConfigError("mash_batch needs at least one member");
    if (member_embeddings.size() != member_labels.size()) {
        throw ShapeError("mash_batch: embedding and label member counts differ");
    }
    const auto s = static_cast<Eigen::Index>(shape.positions());
    const auto dr = member_embeddings.front().cols();
    const auto c = member_labels.front().cols();
    MashedEgoGraph out{shape, Matrix::Zero(s, dr), Matrix::Zero(s, c)};
    for (std::size_t i = 0; i < member_embeddings.size(); ++i) {
        const auto& e = member_embeddings[i];
        const auto& y = member_labels[i];
        if (e.rows() != s || e.cols() != dr || y.rows() != s || y.cols() != c) {
            throw ShapeError("mash_batch: member " + std::to_string(i) + " does not match the batch shape");
        }
        out.embeddings += e;
        out.soft_labels += y;
    }
    const double inv = 1.0 / static_cast<double>(member_embeddings.size());
    out.embeddings *= inv;
    out.soft_labels *= inv;
    return out;
}

Matrix position_labels(const Graph& graph, const EgoGraph& ego) {
    Matrix y = Matrix::Zero(static_cast<Eigen::Index>(ego.node_at.size()),
                            static_cast<Eigen::Index>(graph.num_classes()));
    for (std::size_t p = 0; p < ego.node_at.size(); ++p) y(static_cast<Eigen::Index>(p), graph.label(ego.node_at[p])) = 1.0;
    return y;
}

void write_mashed(std::ostream& out, const MashedEgoGraph& m) {
    detail::write_magic(out, "MEGO");
    detail::write_u32(out, static_cast<std::uint32_t>(m.shape.hops()));
    detail::write_u32(out, static_cast<std::uint32_t>(m.shape.fanout()));
    detail::write_u32(out, static_cast<std::uint32_t>(m.embeddings.cols()));
    detail::write_u32(out, static_cast<std::uint32_t>(m.soft_labels.cols()));
    for (Eigen::Index i = 0; i < m.embeddings.size(); ++i) detail::write_f32(out, m.embeddings.data()[i]);
    for (Eigen::Index i = 0; i < m.soft_labels.size(); ++i) detail::write_f32(out, m.soft_labels.data()[i]);
    if (!out) throw IoError("failed writing mashed ego-graph");
}

MashedEgoGraph read_mashed(std::istream& in) {
    detail::expect_magic(in, "MEGO");
    const auto k = detail::read_u32(in);
    const auto n = detail::read_u32(in);
    const auto dr = detail::read_u32(in);
    const auto c = detail::read_u32(in);
    EgoShape shape(k, n);
    const auto s = static_cast<Eigen::Index>(shape.positions());
    MashedEgoGraph m{shape, Matrix(s, dr), Matrix(s, c)};
    for (Eigen::Index i = 0; i < m.embeddings.size(); ++i) m.embeddings.data()[i] = detail::read_f32(in);
    for (Eigen::Index i = 0; i < m.soft_labels.size(); ++i) m.soft_labels.data()[i] = detail::read_f32(in);
    return m;
}

}  // namespace fedego
