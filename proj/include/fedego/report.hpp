#pragma once

#include "fedego/metrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace fedego {

struct ClientRoundReport {
    std::size_t client_id = 0;
    double train_loss = 0.0;
    Metrics local_test;
    Metrics local_val;
    Metrics global_test;
    double lambda = 0.0;
    double emd = 0.0;
    double wd_relative = 0.0;
    double wd_absolute = 0.0;
};

struct ByteCounts {
    std::size_t params_up = 0;
    std::size_t params_down = 0;
    std::size_t ego_up = 0;

    std::size_t total() const { return params_up + params_down + ego_up; }
    ByteCounts& operator+=(const ByteCounts& o) {
        params_up += o.params_up;
        params_down += o.params_down;
        ego_up += o.ego_up;
        return *this;
    }
};

struct RoundReport {
    /// 0 is the evaluation of the untrained models.
    std::size_t round = 0;
    std::vector<ClientRoundReport> clients;
    double server_loss = 0.0;
    ByteCounts bytes;
    /// Largest parameter distance between any two clients after the round.
    double max_client_distance = 0.0;

    double mean_global_f1() const;
    double mean_local_f1() const;
    double mean_val_f1() const;
    double mean_wd_relative() const;
};

struct ExperimentReport {
    nlohmann::json config;
    std::uint64_t seed = 0;
    RoundReport initial;
    std::vector<RoundReport> rounds;

    const RoundReport& final_round() const { return rounds.empty() ? initial : rounds.back(); }
    /// Round with the best mean validation F1 (0 = initial).
    std::size_t best_val_round() const;
    ByteCounts total_bytes() const;
};

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const RoundReport& r);
nlohmann::json to_json(const ExperimentReport& r);

/// Writes report.json, metrics.csv (round,client_id,split,metric,value with
/// client_id -1 for the client-averaged global test) and divergence.csv into
/// `dir`, creating it if needed.
void export_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Number of metrics.csv data rows for a report with `rounds` rounds
/// (plus the initial evaluation) and `clients` clients.
std::size_t metrics_csv_rows(std::size_t rounds, std::size_t clients);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace fedego
