#include "fedego/federation.hpp"

#include "fedego/errors.hpp"
#include "fedego/nn.hpp"
#include "fedego/param_ops.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fedego {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::fedego: return "fedego";
        case Strategy::fedavg: return "fedavg";
        case Strategy::local_only: return "local_only";
    }
    return "?";
}

Strategy parse_strategy(std::string_view name) {
    if (name == "fedego") return Strategy::fedego;
    if (name == "fedavg") return Strategy::fedavg;
    if (name == "local" || name == "local_only" || name == "local-only") return Strategy::local_only;
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

void FedConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be > 0");
    if (fanout < 1) throw ConfigError("fanout must be >= 1");
    if (local_epochs < 1 || batches_per_epoch < 1) throw ConfigError("local_epochs and batches_per_epoch must be >= 1");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    if (server_learning_rate && !(*server_learning_rate >= 0.0))
        throw ConfigError("server_learning_rate must be >= 0");
    if (ablation.fixed_lambda && !(*ablation.fixed_lambda >= 0.0 && *ablation.fixed_lambda <= 1.0))
        throw ConfigError("fixed_lambda must lie in [0, 1]");
    if (model.reduction_layers < 1) throw ConfigError("reduction_layers must be >= 1");
    if (model.reduction_dim < 1 || model.hidden_dim < 1) throw ConfigError("layer widths must be >= 1");
    (void)shape_positions(hops, fanout);
}

ClientState make_client(const Graph& graph, const ClientDataset& dataset, const ModelParams& initial,
                        const FedConfig& config) {
    const auto nodes = dataset.all_nodes();
    ClientState c{
        .dataset = dataset,
        .local_graph = graph.induced_subgraph(nodes),
        .train = {},
        .val = {},
        .test = {},
        .model = initial,
        .adam = {},
        .distribution = dataset.distribution,
        .rng = make_stream(config.seed, StreamKind::client_train, dataset.client_id),
    };
    NodeId next = 0;
    auto take = [&next](std::size_t count, std::vector<NodeId>& out) {
        for (std::size_t i = 0; i < count; ++i) out.push_back(next++);
    };
    take(dataset.train_nodes.size(), c.train);
    take(dataset.val_nodes.size(), c.val);
    take(dataset.test_nodes.size(), c.test);
    c.adam.config.learning_rate = config.learning_rate;
    return c;
}

ServerState make_server(const ModelParams& initial, const FedConfig& config) {
    ServerState s;
    s.reduction = initial.reduction;
    s.personalization = initial.personalization;
    s.adam.config.learning_rate = config.server_lr();
    s.rng = make_stream(config.seed, StreamKind::server_train);
    return s;
}

std::size_t mashed_graph_bytes(const EgoShape& shape, std::size_t reduction_dim, std::size_t num_classes) {
    return shape.positions() * (reduction_dim + num_classes) * 4;
}

ByteCounts comm_cost(const RoundUpload& upload) {
    ByteCounts b;
    if (!upload.reduction.layers.empty()) b.params_up += parameter_bytes(upload.reduction);
    if (upload.personalization) b.params_up += parameter_bytes(*upload.personalization);
    for (const auto& m : upload.mashed) b.ego_up += mashed_graph_bytes(m.shape, m.reduction_dim(), m.num_classes());
    return b;
}

RoundUpload client_local_stage(ClientState& client, const FedConfig& config) {
    if (client.train.empty()) throw ConfigError("client " + std::to_string(client.id()) + " has no training nodes");
    const EgoShape shape = config.shape();
    const auto positions = static_cast<Eigen::Index>(shape.positions());
    const bool mash = config.strategy == Strategy::fedego;
    client.adam.config.learning_rate = config.learning_rate;

    RoundUpload upload;
    upload.client_id = client.id();
    std::uniform_int_distribution<std::size_t> pick(0, client.train.size() - 1);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    std::vector<EgoGraph> egos(config.batch_size);
    for (std::size_t epoch = 0; epoch < config.local_epochs; ++epoch) {
        for (std::size_t b = 0; b < config.batches_per_epoch; ++b) {
            for (auto& ego : egos) {
                ego = sample_ego_graph(client.local_graph, client.train[pick(client.rng)], shape, client.rng);
            }
            EgoBatch batch = make_ego_batch(client.local_graph, egos);
            ModelBackward result = model_backward(client.model, batch);
            loss_sum += result.loss;
            ++batches;
            if (mash) {
                const std::size_t members = config.ablation.disable_mixup ? 1 : egos.size();
                std::vector<Matrix> embeddings;
                std::vector<Matrix> labels;
                embeddings.reserve(members);
                labels.reserve(members);
                for (std::size_t m = 0; m < members; ++m) {
                    embeddings.emplace_back(
                        result.position_embeddings.middleRows(static_cast<Eigen::Index>(m) * positions, positions));
                    labels.push_back(position_labels(client.local_graph, egos[m]));
                }
                upload.mashed.push_back(mash_batch(shape, embeddings, labels));
            }
            adam_step(client.adam, client.model, result.grads);
        }
    }
    upload.train_loss = loss_sum / static_cast<double>(batches);
    if (config.strategy != Strategy::local_only) upload.reduction = client.model.reduction;
    if (config.strategy == Strategy::fedavg) upload.personalization = client.model.personalization;
    return upload;
}

void server_global_stage(ServerState& server, std::span<const RoundUpload> uploads, const FedConfig& config) {
    if (uploads.empty()) throw ConfigError("server stage needs at least one upload");
    if (!config.ablation.disable_reduction_avg) {
        std::vector<ReductionParams> reductions;
        reductions.reserve(uploads.size());
        for (const auto& u : uploads) reductions.push_back(u.reduction);
        server.reduction = average_reduction(reductions);
    }
    server.pool.clear();
    for (const auto& u : uploads) server.pool.insert(server.pool.end(), u.mashed.begin(), u.mashed.end());
    if (server.pool.empty()) throw ConfigError("server stage received an empty mashed pool");

    const EgoShape shape = config.shape();
    const auto positions = static_cast<Eigen::Index>(shape.positions());
    const auto d_r = server.pool.front().embeddings.cols();
    const auto classes = server.pool.front().soft_labels.cols();

    Matrix centers(static_cast<Eigen::Index>(server.pool.size()), classes);
    for (std::size_t i = 0; i < server.pool.size(); ++i) {
        centers.row(static_cast<Eigen::Index>(i)) = server.pool[i].soft_labels.row(0);
    }
    server.global_distribution = distribution_vector(centers);

    server.adam.config.learning_rate = config.server_lr();
    std::vector<std::size_t> order(server.pool.size());
    const std::size_t chunks = std::min(config.batches_per_epoch, order.size());
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t epoch = 0; epoch < config.server_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), server.rng);
        for (std::size_t c = 0; c < chunks; ++c) {
            const std::size_t begin = c * order.size() / chunks;
            const std::size_t end = (c + 1) * order.size() / chunks;
            const auto count = static_cast<Eigen::Index>(end - begin);
            Matrix embeddings(count * positions, d_r);
            Matrix targets(count, classes);
            for (std::size_t i = begin; i < end; ++i) {
                const auto& m = server.pool[order[i]];
                const auto row = static_cast<Eigen::Index>(i - begin);
                embeddings.middleRows(row * positions, positions) = m.embeddings;
                targets.row(row) = m.soft_labels.row(0);
            }
            auto result = personalization_backward(server.personalization, embeddings, shape, targets);
            adam_step(server.adam, server.personalization, result.grads);
            loss_sum += result.loss;
            ++steps;
        }
    }
    server.last_loss = steps ? loss_sum / static_cast<double>(steps) : 0.0;
}

double adaptive_lambda(const DistributionVector& local, const DistributionVector& global, double gamma) {
    if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
    const double emd = earth_movers_distance(local, global);
    return std::clamp(std::pow(std::clamp(emd / 2.0, 0.0, 1.0), gamma), 0.0, 1.0);
}

ClientUpdate apply_global_update(ClientState& client, const ServerState& server, const FedConfig& config) {
    ClientUpdate u;
    if (!config.ablation.disable_reduction_avg) client.model.reduction = server.reduction;
    u.emd = earth_movers_distance(client.distribution, server.global_distribution);
    u.wd_absolute_before =
        weight_divergence(client.model.personalization, server.personalization, DivergenceMode::absolute).value;
    if (!config.ablation.disable_personalization_mix) {
        u.lambda = config.ablation.fixed_lambda ? *config.ablation.fixed_lambda
                                                : adaptive_lambda(client.distribution, server.global_distribution,
                                                                  config.gamma);
        client.model.personalization = mix_personalization(client.model.personalization, server.personalization,
                                                           u.lambda);
    }
    u.wd_absolute =
        weight_divergence(client.model.personalization, server.personalization, DivergenceMode::absolute).value;
    u.wd_relative =
        weight_divergence(client.model.personalization, server.personalization, DivergenceMode::relative).value;
    return u;
}

namespace {

double client_spread(const std::vector<ClientState>& clients) {
    std::vector<ModelParams> models;
    models.reserve(clients.size());
    for (const auto& c : clients) models.push_back(c.model);
    return max_pairwise_distance(models);
}

}  // namespace

RoundReport run_round(std::vector<ClientState>& clients, ServerState& server, const FedConfig& config) {
    RoundReport report;
    std::vector<RoundUpload> uploads(clients.size());
    parallel_for(clients.size(), config.threads,
                 [&](std::size_t i) { uploads[i] = client_local_stage(clients[i], config); });

    report.clients.resize(clients.size());
    for (std::size_t i = 0; i < clients.size(); ++i) {
        report.clients[i].client_id = clients[i].id();
        report.clients[i].train_loss = uploads[i].train_loss;
        report.bytes += comm_cost(uploads[i]);
    }

    switch (config.strategy) {
        case Strategy::fedego: {
            server_global_stage(server, uploads, config);
            report.server_loss = server.last_loss;
            const std::size_t down = parameter_bytes(server.reduction) + parameter_bytes(server.personalization);
            for (std::size_t i = 0; i < clients.size(); ++i) {
                const ClientUpdate u = apply_global_update(clients[i], server, config);
                auto& r = report.clients[i];
                r.lambda = u.lambda;
                r.emd = u.emd;
                r.wd_relative = u.wd_relative;
                r.wd_absolute = u.wd_absolute;
                report.bytes.params_down += down;
            }
            break;
        }
        case Strategy::fedavg: {
            std::vector<ModelParams> models;
            models.reserve(clients.size());
            for (const auto& c : clients) models.push_back(c.model);
            const ModelParams mean = average_model(models);
            for (auto& c : clients) {
                c.model = mean;
                report.bytes.params_down += parameter_bytes(mean.reduction) + parameter_bytes(mean.personalization);
            }
            server.reduction = mean.reduction;
            server.personalization = mean.personalization;
            break;
        }
        case Strategy::local_only:
            break;
    }
    report.max_client_distance = client_spread(clients);
    if (config.check_consensus && config.strategy == Strategy::fedavg && report.max_client_distance != 0.0) {
        throw NumericError("fedavg clients disagree after averaging (distance " +
                           std::to_string(report.max_client_distance) + ")");
    }
    return report;
}

Simulation::Simulation(const Graph& graph, const Partition& partition, FedConfig config)
    : graph_(&graph), config_(std::move(config)) {
    config_.validate();
    if (partition.clients.empty()) throw ConfigError("partition has no clients");
    Rng init_rng = make_stream(config_.seed, StreamKind::model_init);
    const ModelParams initial =
        init_model(graph.feature_dim(), config_.hops, graph.num_classes(), config_.model, init_rng);
    for (const auto& dataset : partition.clients) clients_.push_back(make_client(graph, dataset, initial, config_));
    server_ = make_server(initial, config_);

    const EgoShape shape = config_.shape();
    Rng global_rng = make_stream(config_.seed, StreamKind::evaluation, 0);
    global_eval_ = make_eval_set(graph, partition.global_test, shape, global_rng);
    for (const auto& c : clients_) {
        Rng test_rng = make_stream(config_.seed, StreamKind::evaluation, 1 + 2 * c.id());
        Rng val_rng = make_stream(config_.seed, StreamKind::evaluation, 2 + 2 * c.id());
        test_eval_.push_back(make_eval_set(c.local_graph, c.test, shape, test_rng));
        val_eval_.push_back(make_eval_set(c.local_graph, c.val, shape, val_rng));
    }
}

void Simulation::fill_metrics(RoundReport& report) const {
    report.clients.resize(clients_.size());
    parallel_for(clients_.size(), config_.threads, [&](std::size_t i) {
        auto& r = report.clients[i];
        r.client_id = clients_[i].id();
        const auto& model = clients_[i].model;
        if (!test_eval_[i].empty()) r.local_test = evaluate_model(model, test_eval_[i]);
        if (!val_eval_[i].empty()) r.local_val = evaluate_model(model, val_eval_[i]);
        if (!global_eval_.empty()) r.global_test = evaluate_model(model, global_eval_);
    });
}

RoundReport Simulation::evaluate(std::size_t round) const {
    RoundReport report;
    report.round = round;
    fill_metrics(report);
    std::vector<ModelParams> models;
    for (const auto& c : clients_) models.push_back(c.model);
    report.max_client_distance = max_pairwise_distance(models);
    return report;
}

RoundReport Simulation::step() {
    const std::size_t round = round_ + 1;
    RoundReport report;
    try {
        report = run_round(clients_, server_, config_);
    } catch (const NumericError& e) {
        throw NumericError("round " + std::to_string(round) + ": " + e.what());
    }
    report.round = round;
    fill_metrics(report);
    round_ = round;
    return report;
}

ExperimentReport run_experiment(const Graph& graph, const Partition& partition, const FedConfig& config) {
    Simulation sim(graph, partition, config);
    ExperimentReport report;
    report.config = to_json(sim.config());
    report.seed = config.seed;
    report.initial = sim.evaluate(0);
    report.rounds.reserve(config.rounds);
    for (std::size_t r = 0; r < config.rounds; ++r) {
        report.rounds.push_back(sim.step());
        const auto& last = report.rounds.back();
        spdlog::debug("{} seed {} round {}: global {:.4f} local {:.4f}", to_string(config.strategy), config.seed,
                      last.round, last.mean_global_f1(), last.mean_local_f1());
    }
    return report;
}

GammaProbeResult gamma_divergence_probe(const Graph& graph, const Partition& partition, const FedConfig& config,
                                        std::span<const double> gammas, std::span<const std::uint64_t> seeds) {
    if (gammas.size() < 2) throw ConfigError("gamma probe needs at least two gamma values");
    if (seeds.empty()) throw ConfigError("gamma probe needs at least one seed");
    GammaProbeResult result;
    for (double gamma : gammas) {
        double sum = 0.0;
        for (std::uint64_t seed : seeds) {
            FedConfig run = config;
            run.strategy = Strategy::fedego;
            run.gamma = gamma;
            run.seed = seed;
            run.ablation.fixed_lambda.reset();
            run.ablation.disable_personalization_mix = false;
            Simulation sim(graph, partition, run);
            RoundReport last;
            for (std::size_t r = 0; r < run.rounds; ++r) {
                try {
                    last = run_round(sim.clients(), sim.server(), run);
                } catch (const NumericError& e) {
                    throw NumericError("gamma " + format_double(gamma) + " round " + std::to_string(r + 1) + ": " +
                                       e.what());
                }
            }
            GammaProbeRow row;
            row.gamma = gamma;
            row.seed = seed;
            for (const auto& c : last.clients) {
                row.client_wd_relative.push_back(c.wd_relative);
                row.mean_wd_relative += c.wd_relative;
                row.mean_wd_absolute += c.wd_absolute;
                row.mean_lambda += c.lambda;
            }
            const auto n = static_cast<double>(std::max<std::size_t>(last.clients.size(), 1));
            row.mean_wd_relative /= n;
            row.mean_wd_absolute /= n;
            row.mean_lambda /= n;
            sum += row.mean_wd_relative;
            spdlog::info("gamma {} seed {}: mean relative divergence {:.6g}", gamma, seed, row.mean_wd_relative);
            result.rows.push_back(std::move(row));
        }
        result.summary.emplace_back(gamma, sum / static_cast<double>(seeds.size()));
    }
    return result;
}

}  // namespace fedego
