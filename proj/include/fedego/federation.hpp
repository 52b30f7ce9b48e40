#pragma once

#include "fedego/adam.hpp"
#include "fedego/distribution.hpp"
#include "fedego/ego.hpp"
#include "fedego/graph.hpp"
#include "fedego/metrics.hpp"
#include "fedego/model.hpp"
#include "fedego/partition.hpp"
#include "fedego/report.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace fedego {

enum class Strategy { fedego, fedavg, local_only };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

struct Ablation {
    /// Upload the first ego-graph of each batch instead of the mashed one.
    bool disable_mixup = false;
    /// Keep each client's reduction layers local.
    bool disable_reduction_avg = false;
    /// Never mix the global personalization layers into clients.
    bool disable_personalization_mix = false;
    std::optional<double> fixed_lambda;
};

struct FedConfig {
    Strategy strategy = Strategy::fedego;
    std::size_t rounds = 200;
    std::size_t local_epochs = 5;
    std::size_t server_epochs = 5;
    std::size_t batches_per_epoch = 5;
    std::size_t batch_size = 32;
    double gamma = 0.25;
    std::size_t hops = 2;
    std::size_t fanout = 6;
    double learning_rate = 0.01;
    std::optional<double> server_learning_rate;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    /// Assert zero client spread after every fedavg round.
    bool check_consensus = false;
    ModelConfig model;
    Ablation ablation;

    EgoShape shape() const { return {hops, fanout}; }
    double server_lr() const { return server_learning_rate.value_or(learning_rate); }
    void validate() const;
};

nlohmann::json to_json(const FedConfig& c);
/// Rejects unknown keys; missing keys keep their defaults.
FedConfig fed_config_from_json(const nlohmann::json& j, FedConfig base = {});

struct ClientState {
    ClientDataset dataset;
    /// Subgraph induced by the client's own nodes; ids below are local to it.
    Graph local_graph;
    std::vector<NodeId> train;
    std::vector<NodeId> val;
    std::vector<NodeId> test;
    ModelParams model;
    AdamState adam;
    DistributionVector distribution;
    Rng rng;

    std::size_t id() const { return dataset.client_id; }
};

ClientState make_client(const Graph& graph, const ClientDataset& dataset, const ModelParams& initial,
                        const FedConfig& config);

struct ServerState {
    ReductionParams reduction;
    PersonalizationParams personalization;
    AdamState adam;
    std::vector<MashedEgoGraph> pool;
    DistributionVector global_distribution;
    Rng rng;
    double last_loss = 0.0;
};

ServerState make_server(const ModelParams& initial, const FedConfig& config);

struct RoundUpload {
    std::size_t client_id = 0;
    ReductionParams reduction;
    /// Only filled for fedavg, which averages the whole model.
    std::optional<PersonalizationParams> personalization;
    std::vector<MashedEgoGraph> mashed;
    double train_loss = 0.0;
};

/// Bytes of one mashed ego-graph: S * (d_r + C) float32 values.
std::size_t mashed_graph_bytes(const EgoShape& shape, std::size_t reduction_dim, std::size_t num_classes);

/// Upload size: reduction (and, for fedavg, personalization) parameters plus mashed graphs.
ByteCounts comm_cost(const RoundUpload& upload);

/// E_c epochs of `batches_per_epoch` mini-batches of B centers drawn with
/// replacement from the training nodes. Each batch yields one mashed
/// ego-graph built from the reduction embeddings of that forward pass.
RoundUpload client_local_stage(ClientState& client, const FedConfig& config);

/// Averages reduction layers, replaces the mashed pool with this round's
/// uploads, trains the global personalization layers for E_s epochs on the
/// pool, and recomputes the global distribution from the pool's centers.
void server_global_stage(ServerState& server, std::span<const RoundUpload> uploads, const FedConfig& config);

/// (EMD / 2)^gamma with EMD the L1 distance between the distributions.
double adaptive_lambda(const DistributionVector& local, const DistributionVector& global, double gamma);

struct ClientUpdate {
    double lambda = 0.0;
    double emd = 0.0;
    double wd_absolute_before = 0.0;
    double wd_absolute = 0.0;
    double wd_relative = 0.0;
};

/// Loads the averaged reduction layers and mixes the global personalization
/// layers into the client.
ClientUpdate apply_global_update(ClientState& client, const ServerState& server, const FedConfig& config);

/// One communication round over all clients. Metrics fields are left empty;
/// Simulation fills them.
RoundReport run_round(std::vector<ClientState>& clients, ServerState& server, const FedConfig& config);

/// Full experiment state: clients, server and the fixed evaluation sets.
class Simulation {
public:
    Simulation(const Graph& graph, const Partition& partition, FedConfig config);

    RoundReport evaluate(std::size_t round) const;
    RoundReport step();

    const FedConfig& config() const { return config_; }
    std::vector<ClientState>& clients() { return clients_; }
    const std::vector<ClientState>& clients() const { return clients_; }
    ServerState& server() { return server_; }
    const ServerState& server() const { return server_; }
    std::size_t rounds_done() const { return round_; }

private:
    void fill_metrics(RoundReport& report) const;

    const Graph* graph_;
    FedConfig config_;
    std::vector<ClientState> clients_;
    ServerState server_;
    EvalSet global_eval_;
    std::vector<EvalSet> test_eval_;
    std::vector<EvalSet> val_eval_;
    std::size_t round_ = 0;
};

ExperimentReport run_experiment(const Graph& graph, const Partition& partition, const FedConfig& config);

struct GammaProbeRow {
    double gamma = 0.0;
    std::uint64_t seed = 0;
    double mean_wd_relative = 0.0;
    double mean_wd_absolute = 0.0;
    double mean_lambda = 0.0;
    std::vector<double> client_wd_relative;
};

struct GammaProbeResult {
    std::vector<GammaProbeRow> rows;
    /// Seed-averaged mean relative divergence, one entry per gamma in input order.
    std::vector<std::pair<double, double>> summary;
};

/// One fedego experiment per (gamma, seed); records the final-round weight
/// divergence between each client and the server.
GammaProbeResult gamma_divergence_probe(const Graph& graph, const Partition& partition, const FedConfig& config,
                                        std::span<const double> gammas, std::span<const std::uint64_t> seeds);

/// Runs fn(i) for i in [0, count) on up to `threads` workers.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn);

}  // namespace fedego

#include "fedego/parallel.hpp"
