#include "fedego/param_ops.hpp"

#include "binary_io.hpp"
#include "fedego/errors.hpp"

#include <cmath>
#include <map>
#include <string>

namespace fedego {

namespace {

template <class Params>
Params average(std::span<const Params> clients, const char* what) {
    if (clients.empty()) throw ConfigError(std::string("cannot average an empty set of ") + what);
    Params out = zeros_like(clients.front());
    auto acc = tensors(out);
    for (std::size_t i = 0; i < clients.size(); ++i) {
        auto src = tensors(clients[i]);
        if (src.size() != acc.size()) throw ShapeError(std::string(what) + " of client " + std::to_string(i) + " differ in layout");
        for (std::size_t t = 0; t < acc.size(); ++t) {
            if (src[t].values.size() != acc[t].values.size()) {
                throw ShapeError("tensor '" + acc[t].name + "' of client " + std::to_string(i) + " has a different shape");
            }
            for (std::size_t j = 0; j < acc[t].values.size(); ++j) acc[t].values[j] += src[t].values[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(clients.size());
    for (auto& t : acc) {
        for (double& x : t.values) x *= inv;
    }
    return out;
}

void require_congruent(const std::vector<ConstTensorRef>& a, const std::vector<ConstTensorRef>& b) {
    if (a.size() != b.size()) throw ShapeError("parameter sets have different tensor counts");
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (a[t].values.size() != b[t].values.size()) throw ShapeError("tensor '" + a[t].name + "' differs in shape");
    }
}

}  // namespace

ReductionParams average_reduction(std::span<const ReductionParams> clients) {
    return average(clients, "reduction parameters");
}

PersonalizationParams average_personalization(std::span<const PersonalizationParams> clients) {
    return average(clients, "personalization parameters");
}

ModelParams average_model(std::span<const ModelParams> clients) { return average(clients, "model parameters"); }

PersonalizationParams mix_personalization(const PersonalizationParams& local, const PersonalizationParams& global,
                                          double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mixing coefficient " + std::to_string(lambda) + " outside [0,1]");
    require_congruent(tensors(local), tensors(global));
    PersonalizationParams out = local;
    auto dst = tensors(out);
    auto g = tensors(global);
    for (std::size_t t = 0; t < dst.size(); ++t) {
        for (std::size_t j = 0; j < dst[t].values.size(); ++j) {
            dst[t].values[j] = lambda * g[t].values[j] + (1.0 - lambda) * dst[t].values[j];
        }
    }
    return out;
}

WeightDivergence weight_divergence(const PersonalizationParams& local, const PersonalizationParams& global,
                                   DivergenceMode mode) {
    auto l = tensors(local);
    auto g = tensors(global);
    require_congruent(l, g);
    WeightDivergence out;
    double sum = 0.0;
    double global_sq = 0.0;
    for (std::size_t t = 0; t < l.size(); ++t) {
        for (std::size_t j = 0; j < l[t].values.size(); ++j) {
            double diff = l[t].values[j] - g[t].values[j];
            global_sq += g[t].values[j] * g[t].values[j];
            if (mode == DivergenceMode::elementwise) {
                if (std::abs(g[t].values[j]) < 1e-12) {
                    ++out.skipped;
                    continue;
                }
                diff /= g[t].values[j];
            }
            sum += diff * diff;
        }
    }
    out.value = std::sqrt(sum);
    if (mode == DivergenceMode::relative) {
        if (global_sq == 0.0) throw NumericError("relative weight divergence against all-zero global weights");
        out.value /= std::sqrt(global_sq);
    }
    return out;
}

double max_pairwise_distance(std::span<const ModelParams> models) {
    double best = 0.0;
    for (std::size_t a = 0; a < models.size(); ++a) {
        auto ta = tensors(models[a]);
        for (std::size_t b = a + 1; b < models.size(); ++b) {
            auto tb = tensors(models[b]);
            require_congruent(ta, tb);
            double sum = 0.0;
            for (std::size_t t = 0; t < ta.size(); ++t) {
                for (std::size_t j = 0; j < ta[t].values.size(); ++j) {
                    const double d = ta[t].values[j] - tb[t].values[j];
                    sum += d * d;
                }
            }
            best = std::max(best, std::sqrt(sum));
        }
    }
    return best;
}

namespace {
constexpr std::uint32_t checkpoint_version = 1;
}

void write_checkpoint(std::ostream& out, const ModelParams& model) {
    auto ts = tensors(model);
    detail::write_magic(out, "FEGO");
    detail::write_u32(out, checkpoint_version);
    detail::write_u32(out, static_cast<std::uint32_t>(ts.size()));
    for (const auto& t : ts) {
        detail::write_u32(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        detail::write_u32(out, static_cast<std::uint32_t>(t.rank));
        for (std::size_t r = 0; r < t.rank; ++r) detail::write_u32(out, static_cast<std::uint32_t>(t.dims[r]));
        for (double v : t.values) detail::write_f32(out, v);
    }
    if (!out) throw IoError("failed writing checkpoint");
}

ModelParams read_checkpoint(std::istream& in, Activation reduction_activation, Activation activation) {
    detail::expect_magic(in, "FEGO");
    const auto version = detail::read_u32(in);
    if (version != checkpoint_version) throw IoError("unsupported checkpoint version " + std::to_string(version));
    const auto count = detail::read_u32(in);

    struct Raw {
        std::vector<std::uint32_t> dims;
        std::vector<double> values;
    };
    std::map<std::string, Raw> raw;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = detail::read_u32(in);
        std::string name(len, '\0');
        if (!in.read(name.data(), len)) throw IoError("truncated checkpoint tensor name");
        Raw r;
        const auto rank = detail::read_u32(in);
        if (rank < 1 || rank > 2) throw IoError("tensor '" + name + "' has unsupported rank " + std::to_string(rank));
        std::size_t total = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            r.dims.push_back(detail::read_u32(in));
            total *= r.dims.back();
        }
        r.values.resize(total);
        for (auto& v : r.values) v = detail::read_f32(in);
        raw.emplace(std::move(name), std::move(r));
    }

    auto take = [&](const std::string& name, std::size_t rank) -> Raw {
        auto it = raw.find(name);
        if (it == raw.end()) throw IoError("checkpoint is missing tensor '" + name + "'");
        if (it->second.dims.size() != rank) throw IoError("tensor '" + name + "' has the wrong rank");
        return it->second;
    };
    auto to_matrix = [](const Raw& r) {
        Matrix m(r.dims[0], r.dims[1]);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.values[static_cast<std::size_t>(i)];
        return m;
    };
    auto to_vector = [](const Raw& r) {
        Vector v(r.dims[0]);
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = r.values[static_cast<std::size_t>(i)];
        return v;
    };

    ModelParams m;
    m.reduction.activation = reduction_activation;
    m.personalization.activation = activation;
    for (std::size_t l = 0; raw.count("reduction." + std::to_string(l) + ".weight"); ++l) {
        const auto prefix = "reduction." + std::to_string(l);
        m.reduction.layers.push_back({to_matrix(take(prefix + ".weight", 2)), to_vector(take(prefix + ".bias", 1))});
    }
    for (std::size_t l = 0; raw.count("sage." + std::to_string(l) + ".weight"); ++l) {
        m.personalization.sage.push_back(to_matrix(take("sage." + std::to_string(l) + ".weight", 2)));
    }
    m.personalization.classifier_weight = to_matrix(take("classifier.weight", 2));
    m.personalization.classifier_bias = to_vector(take("classifier.bias", 1));
    if (m.reduction.layers.empty()) throw IoError("checkpoint has no reduction layers");
    return m;
}

}  // namespace fedego
