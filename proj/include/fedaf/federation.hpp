#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fedaf/comms.hpp"
#include "fedaf/datastream.hpp"
#include "fedaf/evaluation.hpp"
#include "fedaf/forest.hpp"
#include "fedaf/tree.hpp"

namespace fedaf {

struct ExperimentConfig {
    std::filesystem::path dataset_path;
    FileFormat format = FileFormat::Csv;
    std::size_t clients = 5;
    std::size_t rounds = 20;
    double budget_fraction = 0.10;
    std::uint32_t grace = 100;
    double delta = 0.05;
    double tie_threshold = 0.05;
    std::uint64_t seed = 42;
    std::filesystem::path out_path;

    TreeParams tree_params() const { return TreeParams{grace, delta, tie_threshold}; }
    void validate() const;  // throws ConfigError
};

struct ClientState {
    std::size_t id = 0;
    TreeModel tree;
    Budget budget;
    std::vector<RoundChunk> chunks;
};

// accrued' = accrued + floor(fraction * chunk_size); spent unchanged.
Budget update_budget(Budget budget, std::uint64_t chunk_size, double fraction);

// Trains every client on its fully labeled chunk 0 and aggregates F_0.
// Ledger records one model upload per client at round 0.
ForestModel seed_forest(std::vector<ClientState>& clients, const Schema& schema,
                        CommLedger& ledger);

// One client's round t: budget accrual, chunk t fed unlabeled through the
// tree against F_{t-1}, snapshot serialized and charged to the ledger.
// Returns the snapshot bytes.
std::vector<std::uint8_t> client_update(ClientState& client, const ForestModel& oracle_forest,
                                        std::size_t round, double budget_fraction,
                                        const Schema& schema, CommLedger& ledger);

struct RoundRecord {
    MetricsReport ensemble;
    std::vector<MetricsReport> clients;
};

// One fold assignment run to completion.
struct FoldRun {
    std::vector<RoundRecord> rounds;  // index t = 0..T-1
    CommLedger ledger;
    std::uint64_t seed_labels = 0;        // ground-truth labels consumed in seeding
    std::uint64_t post_seed_stream = 0;   // samples in chunks 1..T-1 over all clients
    std::uint64_t budget_allowance = 0;   // final sum of accrued over clients
    std::uint64_t label_requests = 0;
};

struct ExperimentResult {
    std::array<FoldRun, 2> folds;
    std::vector<MetricValues> ensemble_by_round;               // fold-averaged
    std::vector<std::vector<MetricValues>> clients_by_round;   // [round][client], fold-averaged

    const MetricValues& final_ensemble() const { return ensemble_by_round.back(); }
    double mean_client_recall_final() const;
    std::uint64_t total_label_requests() const;
    std::uint64_t total_model_bytes() const;
    std::uint64_t total_seed_labels() const { return folds[0].seed_labels + folds[1].seed_labels; }
};

// Full pipeline: load, split folds, partition, chunk, seed, T-1 update
// rounds, per-round evaluation on the held-out fold; then fold roles swap
// and the run repeats. Reported series are the mean of the two folds.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Same, over an already loaded dataset (one load shared across sweep cells).
ExperimentResult run_experiment_on(const Dataset& dataset, const ExperimentConfig& config);

}  // namespace fedaf
