#include "fedego/nn.hpp"

#include "fedego/errors.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

namespace fedego {

namespace {

void require_finite(const Matrix& m, const std::string& where) {
    if (!m.allFinite()) throw NumericError("non-finite values in " + where);
}

struct ReductionTrace {
    std::vector<Matrix> inputs;
    std::vector<Matrix> pre;
};

Matrix reduction_forward_traced(const ReductionParams& params, const Matrix& features, ReductionTrace* trace) {
    Matrix h = features;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        if (h.cols() != layer.weight.cols()) {
            throw ShapeError("reduction layer " + std::to_string(l + 1) + " expects input dim " +
                             std::to_string(layer.weight.cols()) + ", got " + std::to_string(h.cols()));
        }
        Matrix z = h * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        require_finite(z, "reduction layer " + std::to_string(l + 1));
        if (trace) {
            trace->inputs.push_back(std::move(h));
            trace->pre.push_back(z);
        }
        h = apply_activation(params.activation, z);
    }
    return h;
}

struct SageTrace {
    std::vector<Matrix> aggregated;
    std::vector<Matrix> pre;
    Matrix center;
};

/// Self plus mean of children for every still-valid parent position. Row i of
/// the input is h.row(index[i]) when an index is given, else h.row(i).
Matrix aggregate(const Matrix& h, const std::vector<Eigen::Index>* index, std::size_t batch, std::size_t rows_in,
                 std::size_t parents, std::size_t fanout) {
    Matrix agg(static_cast<Eigen::Index>(batch * parents), h.cols());
    const double inv = 1.0 / static_cast<double>(fanout);
    auto src = [&](std::size_t i) { return h.row(index ? (*index)[i] : static_cast<Eigen::Index>(i)); };
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t base = b * rows_in;
        for (std::size_t p = 0; p < parents; ++p) {
            auto out = agg.row(static_cast<Eigen::Index>(b * parents + p));
            const std::size_t first = base + fanout * p + 1;
            out = src(first);
            for (std::size_t c = 1; c < fanout; ++c) out += src(first + c);
            out = src(base + p) + inv * out;
        }
    }
    return agg;
}

Matrix sage_forward_traced(const PersonalizationParams& params, const Matrix& embeddings,
                           const std::vector<Eigen::Index>* rows, const EgoShape& shape, SageTrace* trace) {
    const auto s = shape.positions();
    const auto k = shape.hops();
    if (params.sage.size() != k) {
        throw ShapeError("personalization has " + std::to_string(params.sage.size()) + " GraphSAGE layers, shape has " +
                         std::to_string(k) + " hops");
    }
    const std::size_t total = rows ? rows->size() : static_cast<std::size_t>(embeddings.rows());
    if (total == 0 || total % s != 0) {
        throw ShapeError("position embedding rows (" + std::to_string(total) +
                         ") are not a positive multiple of the shape size " + std::to_string(s));
    }
    const auto batch = total / s;
    const Matrix* current = &embeddings;
    const std::vector<Eigen::Index>* index = rows;
    Matrix h;
    std::size_t rows_in = s;
    for (std::size_t l = 1; l <= k; ++l) {
        const auto& w = params.sage[l - 1];
        if (current->cols() != w.cols()) {
            throw ShapeError("GraphSAGE layer " + std::to_string(l) + " expects input dim " + std::to_string(w.cols()) +
                             ", got " + std::to_string(current->cols()));
        }
        const auto parents = shape.positions_through_layer(k - l);
        Matrix agg = aggregate(*current, index, batch, rows_in, parents, shape.fanout());
        Matrix z = agg * w.transpose();
        require_finite(z, "GraphSAGE layer " + std::to_string(l));
        h = apply_activation(params.activation, z);
        current = &h;
        index = nullptr;
        if (trace) {
            trace->aggregated.push_back(std::move(agg));
            trace->pre.push_back(std::move(z));
        }
        rows_in = parents;
    }
    // rows_in == 1 here unless k == 0, where the center is row b*S.
    Matrix center(static_cast<Eigen::Index>(batch), current->cols());
    for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t i = b * rows_in;
        center.row(static_cast<Eigen::Index>(b)) = current->row(index ? (*index)[i] : static_cast<Eigen::Index>(i));
    }
    if (center.cols() != params.classifier_weight.cols()) {
        throw ShapeError("classifier expects input dim " + std::to_string(params.classifier_weight.cols()) + ", got " +
                         std::to_string(center.cols()));
    }
    Matrix logits = center * params.classifier_weight.transpose();
    logits.rowwise() += params.classifier_bias.transpose();
    require_finite(logits, "classifier logits");
    if (trace) trace->center = std::move(center);
    return logits;
}

Matrix log_softmax_rows(const Matrix& logits) {
    Matrix out = logits;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double m = out.row(i).maxCoeff();
        const double lse = m + std::log((out.row(i).array() - m).exp().sum());
        out.row(i).array() -= lse;
    }
    return out;
}

void check_targets(const Matrix& logits, const Matrix& targets) {
    if (logits.rows() != targets.rows() || logits.cols() != targets.cols()) {
        throw ShapeError("logits [" + std::to_string(logits.rows()) + "x" + std::to_string(logits.cols()) +
                         "] and targets [" + std::to_string(targets.rows()) + "x" + std::to_string(targets.cols()) +
                         "] differ");
    }
    if (logits.rows() == 0) throw ConfigError("cross-entropy over an empty batch");
}

/// d loss / d logits for the mean soft cross-entropy.
Matrix cross_entropy_grad(const Matrix& logits, const Matrix& targets) {
    Matrix p = softmax_rows(logits);
    Matrix g(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        g.row(i) = p.row(i) * targets.row(i).sum() - targets.row(i);
    }
    return g / static_cast<double>(logits.rows());
}

/// Back-propagates d loss / d logits through the classifier and GraphSAGE
/// layers; returns d loss / d position embeddings.
Matrix sage_backward(const PersonalizationParams& params, const EgoShape& shape, const SageTrace& trace,
                     const Matrix& dlogits, PersonalizationParams& grads) {
    const auto s = shape.positions();
    const auto k = shape.hops();
    const auto n = shape.fanout();
    const auto batch = static_cast<std::size_t>(dlogits.rows());

    grads.classifier_weight = dlogits.transpose() * trace.center;
    grads.classifier_bias = dlogits.colwise().sum().transpose();
    Matrix dcenter = dlogits * params.classifier_weight;

    if (k == 0) {
        Matrix dh = Matrix::Zero(static_cast<Eigen::Index>(batch * s), dcenter.cols());
        for (std::size_t b = 0; b < batch; ++b) dh.row(static_cast<Eigen::Index>(b * s)) = dcenter.row(static_cast<Eigen::Index>(b));
        return dh;
    }

    Matrix dh = std::move(dcenter);  // rows: batch * positions_through_layer(0) == batch
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t l = k; l >= 1; --l) {
        const auto& w = params.sage[l - 1];
        Matrix dz = dh;
        apply_activation_grad(params.activation, trace.pre[l - 1], dz);
        grads.sage[l - 1] = dz.transpose() * trace.aggregated[l - 1];
        Matrix dagg = dz * w;
        const auto parents = shape.positions_through_layer(k - l);
        const auto rows_in = l == 1 ? s : shape.positions_through_layer(k - l + 1);
        Matrix dprev = Matrix::Zero(static_cast<Eigen::Index>(batch * rows_in), dagg.cols());
        for (std::size_t b = 0; b < batch; ++b) {
            const auto base = static_cast<Eigen::Index>(b * rows_in);
            for (std::size_t p = 0; p < parents; ++p) {
                const auto g = dagg.row(static_cast<Eigen::Index>(b * parents + p));
                dprev.row(base + static_cast<Eigen::Index>(p)) += g;
                const auto first = base + static_cast<Eigen::Index>(n * p + 1);
                for (std::size_t c = 0; c < n; ++c) dprev.row(first + static_cast<Eigen::Index>(c)) += inv * g;
            }
        }
        dh = std::move(dprev);
    }
    return dh;
}

}  // namespace

Matrix reduction_forward(const ReductionParams& params, const Matrix& features) {
    return reduction_forward_traced(params, features, nullptr);
}

Matrix sage_forward_batch(const PersonalizationParams& params, const Matrix& position_embeddings,
                          const EgoShape& shape, Matrix* center_embeddings) {
    if (!center_embeddings) return sage_forward_traced(params, position_embeddings, nullptr, shape, nullptr);
    SageTrace trace;
    Matrix logits = sage_forward_traced(params, position_embeddings, nullptr, shape, &trace);
    *center_embeddings = std::move(trace.center);
    return logits;
}

SageOutput sage_forward_ego(const PersonalizationParams& params, const Matrix& position_embeddings,
                            const EgoShape& shape) {
    if (static_cast<std::size_t>(position_embeddings.rows()) != shape.positions()) {
        throw ShapeError("ego-graph embedding has " + std::to_string(position_embeddings.rows()) + " rows, shape needs " +
                         std::to_string(shape.positions()));
    }
    Matrix center;
    Matrix logits = sage_forward_batch(params, position_embeddings, shape, &center);
    return {logits.row(0).transpose(), center.row(0).transpose()};
}

Matrix softmax_rows(const Matrix& logits) { return log_softmax_rows(logits).array().exp().matrix(); }

double soft_cross_entropy(const Matrix& logits, const Matrix& soft_targets) {
    check_targets(logits, soft_targets);
    if (!logits.allFinite()) throw NumericError("non-finite logits in cross-entropy");
    const double floor = std::log(1e-12);
    Matrix logp = log_softmax_rows(logits).cwiseMax(floor);
    return -(soft_targets.array() * logp.array()).sum() / static_cast<double>(logits.rows());
}

EgoBatch make_ego_batch(const Graph& graph, std::span<const EgoGraph> egos) {
    if (egos.empty()) throw ConfigError("empty ego-graph batch");
    EgoBatch batch;
    batch.shape = egos.front().shape;
    const auto s = batch.shape.positions();
    std::unordered_map<NodeId, Eigen::Index> row_of;
    std::vector<NodeId> unique;
    batch.rows.reserve(egos.size() * s);
    batch.targets = Matrix::Zero(static_cast<Eigen::Index>(egos.size()), static_cast<Eigen::Index>(graph.num_classes()));
    for (std::size_t i = 0; i < egos.size(); ++i) {
        if (!(egos[i].shape == batch.shape)) throw ShapeError("ego-graphs in one batch must share a shape");
        for (NodeId v : egos[i].node_at) {
            auto [it, inserted] = row_of.emplace(v, static_cast<Eigen::Index>(unique.size()));
            if (inserted) unique.push_back(v);
            batch.rows.push_back(it->second);
        }
        batch.targets(static_cast<Eigen::Index>(i), graph.label(egos[i].center())) = 1.0;
    }
    batch.features.resize(static_cast<Eigen::Index>(unique.size()), graph.features().cols());
    for (std::size_t r = 0; r < unique.size(); ++r) {
        batch.features.row(static_cast<Eigen::Index>(r)) = graph.features().row(unique[r]);
    }
    return batch;
}

namespace {

Matrix gather_rows(const Matrix& src, const std::vector<Eigen::Index>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
    return out;
}

}  // namespace

Matrix batch_position_embeddings(const ReductionParams& params, const EgoBatch& batch) {
    return gather_rows(reduction_forward(params, batch.features), batch.rows);
}

Matrix predict_logits(const ModelParams& model, const EgoBatch& batch) {
    const Matrix unique_emb = reduction_forward(model.reduction, batch.features);
    return sage_forward_traced(model.personalization, unique_emb, &batch.rows, batch.shape, nullptr);
}

double model_loss(const ModelParams& model, const EgoBatch& batch) {
    return soft_cross_entropy(predict_logits(model, batch), batch.targets);
}

ModelBackward model_backward(const ModelParams& model, const EgoBatch& batch) {
    ReductionTrace rtrace;
    Matrix unique_emb = reduction_forward_traced(model.reduction, batch.features, &rtrace);
    ModelBackward out;
    out.position_embeddings = gather_rows(unique_emb, batch.rows);

    SageTrace strace;
    Matrix logits = sage_forward_traced(model.personalization, out.position_embeddings, nullptr, batch.shape, &strace);
    check_targets(logits, batch.targets);
    out.loss = soft_cross_entropy(logits, batch.targets);

    out.grads = zeros_like(model);
    Matrix demb = sage_backward(model.personalization, batch.shape, strace, cross_entropy_grad(logits, batch.targets),
                                out.grads.personalization);

    Matrix dh = Matrix::Zero(unique_emb.rows(), unique_emb.cols());
    for (std::size_t i = 0; i < batch.rows.size(); ++i) dh.row(batch.rows[i]) += demb.row(static_cast<Eigen::Index>(i));
    const auto& layers = model.reduction.layers;
    for (std::size_t l = layers.size(); l-- > 0;) {
        apply_activation_grad(model.reduction.activation, rtrace.pre[l], dh);
        out.grads.reduction.layers[l].weight = dh.transpose() * rtrace.inputs[l];
        out.grads.reduction.layers[l].bias = dh.colwise().sum().transpose();
        if (l > 0) dh = dh * layers[l].weight;
    }
    return out;
}

PersonalizationBackward personalization_backward(const PersonalizationParams& params,
                                                 const Matrix& position_embeddings, const EgoShape& shape,
                                                 const Matrix& targets) {
    SageTrace trace;
    Matrix logits = sage_forward_traced(params, position_embeddings, nullptr, shape, &trace);
    check_targets(logits, targets);
    PersonalizationBackward out;
    out.loss = soft_cross_entropy(logits, targets);
    out.grads = zeros_like(params);
    sage_backward(params, shape, trace, cross_entropy_grad(logits, targets), out.grads);
    return out;
}

}  // namespace fedego
