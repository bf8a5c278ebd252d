#include "fedaf/federation.hpp"

#include <cmath>
#include <span>

#include "fedaf/rng.hpp"

namespace fedaf {

namespace {

constexpr std::uint64_t kFoldSeedTag = 0xF01D;
constexpr std::uint64_t kPartitionSeedTag = 0xC11E;

// One evaluation pass per round: every tree routes each test sample once,
// feeding both the per-client matrices and the ensemble vote.
RoundRecord evaluate_round(const ForestModel& forest, std::span<const Sample> test_set,
                           std::size_t round) {
    RoundRecord rec;
    const std::size_t k_clients = forest.size();
    std::vector<ConfusionMatrix> client_matrices(k_clients);
    ConfusionMatrix ensemble_matrix;

    for (const Sample& s : test_set) {
        const bool truth = is_positive(*s.label);
        std::size_t positives = 0;
        for (std::size_t k = 0; k < k_clients; ++k) {
            const bool pred = is_positive(forest.tree(k).classify(s).first);
            if (pred) ++positives;
            ConfusionMatrix& m = client_matrices[k];
            if (pred && truth)
                ++m.tp;
            else if (pred && !truth)
                ++m.fp;
            else if (!pred && truth)
                ++m.fn;
            else
                ++m.tn;
        }
        const bool vote = 2 * positives >= k_clients;  // tie -> positive
        if (vote && truth)
            ++ensemble_matrix.tp;
        else if (vote && !truth)
            ++ensemble_matrix.fp;
        else if (!vote && truth)
            ++ensemble_matrix.fn;
        else
            ++ensemble_matrix.tn;
    }

    rec.ensemble.matrix = ensemble_matrix;
    rec.ensemble.values = metrics(ensemble_matrix);
    rec.ensemble.client_id = -1;
    rec.ensemble.round = round;
    rec.clients.resize(k_clients);
    for (std::size_t k = 0; k < k_clients; ++k) {
        rec.clients[k].matrix = client_matrices[k];
        rec.clients[k].values = metrics(client_matrices[k]);
        rec.clients[k].client_id = static_cast<int>(k);
        rec.clients[k].round = round;
    }
    return rec;
}

FoldRun run_fold(const Schema& schema, std::vector<Sample> train_fold,
                 std::span<const Sample> test_fold, const ExperimentConfig& config,
                 std::uint64_t partition_seed) {
    FoldRun run;

    std::vector<std::vector<Sample>> streams =
        partition_clients(std::move(train_fold), config.clients, partition_seed);

    std::vector<ClientState> clients;
    clients.reserve(config.clients);
    for (std::size_t k = 0; k < config.clients; ++k) {
        const std::uint64_t stream_len = streams[k].size();
        ClientState state{k, TreeModel(schema, config.tree_params()), Budget{},
                          chunk_rounds(std::move(streams[k]), config.rounds, k)};
        state.budget = update_budget(state.budget, state.chunks[0].samples.size(),
                                     config.budget_fraction);
        run.seed_labels += state.chunks[0].samples.size();
        run.post_seed_stream += stream_len - state.chunks[0].samples.size();
        clients.push_back(std::move(state));
    }

    ForestModel forest = seed_forest(clients, schema, run.ledger);
    run.rounds.push_back(evaluate_round(forest, test_fold, 0));

    for (std::size_t t = 1; t < config.rounds; ++t) {
        std::vector<TreeModel> snapshots;
        snapshots.reserve(config.clients);
        for (ClientState& client : clients) {
            const std::vector<std::uint8_t> blob =
                client_update(client, forest, t, config.budget_fraction, schema, run.ledger);
            snapshots.push_back(TreeModel::deserialize(blob, schema));
        }
        forest = ForestModel::aggregate(std::move(snapshots), t, config.clients);
        run.rounds.push_back(evaluate_round(forest, test_fold, t));
    }

    for (const ClientState& client : clients) run.budget_allowance += client.budget.accrued;
    run.label_requests = run.ledger.total_label_requests();
    return run;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (clients < 1) throw ConfigError("clients must be >= 1");
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (budget_fraction < 0.0 || budget_fraction > 1.0) {
        throw ConfigError("budget fraction must lie in [0,1]");
    }
    if (grace < 1) throw ConfigError("grace period must be >= 1");
    if (!(delta > 0.0) || !(delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    if (tie_threshold < 0.0) throw ConfigError("tie threshold must be >= 0");
    if (dataset_path.empty()) throw ConfigError("dataset path is required");
}

Budget update_budget(Budget budget, std::uint64_t chunk_size, double fraction) {
    budget.accrued +=
        static_cast<std::uint64_t>(std::floor(fraction * static_cast<double>(chunk_size)));
    return budget;
}

ForestModel seed_forest(std::vector<ClientState>& clients, const Schema& schema,
                        CommLedger& ledger) {
    if (clients.empty()) throw std::invalid_argument("seed_forest: no clients");
    std::vector<TreeModel> snapshots;
    snapshots.reserve(clients.size());
    for (ClientState& client : clients) {
        if (client.chunks.empty() || client.chunks[0].samples.empty()) {
            throw std::invalid_argument("seed_forest: empty seed chunk for client " +
                                        std::to_string(client.id));
        }
        for (const Sample& s : client.chunks[0].samples) client.tree.train_labeled(s);
        const std::vector<std::uint8_t> blob = client.tree.serialize();
        ledger.record_model_upload(0, blob.size());
        snapshots.push_back(TreeModel::deserialize(blob, schema));
    }
    return ForestModel::aggregate(std::move(snapshots), 0, clients.size());
}

std::vector<std::uint8_t> client_update(ClientState& client, const ForestModel& oracle_forest,
                                        std::size_t round, double budget_fraction,
                                        const Schema& schema, CommLedger& ledger) {
    if (round < 1) throw std::invalid_argument("client_update: round must be >= 1");
    if (round >= client.chunks.size()) {
        throw std::invalid_argument("client_update: no chunk for round " + std::to_string(round));
    }
    const RoundChunk& chunk = client.chunks[round];
    client.budget = update_budget(client.budget, chunk.samples.size(), budget_fraction);

    client.tree.flush_round();
    ForestOracle oracle(oracle_forest, ledger, round, sample_wire_size(schema));
    for (const Sample& s : chunk.samples) {
        Sample unlabeled = s;
        unlabeled.label.reset();  // clients never see ground truth after seeding
        client.tree.observe(unlabeled, oracle, client.budget);
    }

    std::vector<std::uint8_t> blob = client.tree.serialize();
    ledger.record_model_upload(round, blob.size());
    return blob;
}

double ExperimentResult::mean_client_recall_final() const {
    const auto& final_clients = clients_by_round.back();
    std::vector<double> recalls;
    recalls.reserve(final_clients.size());
    for (const MetricValues& v : final_clients) recalls.push_back(v.recall);
    return mean_over_clients(recalls);
}

std::uint64_t ExperimentResult::total_label_requests() const {
    return folds[0].ledger.total_label_requests() + folds[1].ledger.total_label_requests();
}

std::uint64_t ExperimentResult::total_model_bytes() const {
    return folds[0].ledger.total_model_bytes() + folds[1].ledger.total_model_bytes();
}

ExperimentResult run_experiment_on(const Dataset& dataset, const ExperimentConfig& config) {
    config.validate();

    auto [fold_a, fold_b] = split_folds(dataset, derive_seed(config.seed, kFoldSeedTag));

    ExperimentResult result;
    {
        std::vector<Sample> train = fold_a;
        result.folds[0] = run_fold(dataset.schema, std::move(train), fold_b, config,
                                   derive_seed(config.seed, kPartitionSeedTag));
    }
    {
        std::vector<Sample> train = std::move(fold_b);
        result.folds[1] = run_fold(dataset.schema, std::move(train), fold_a, config,
                                   derive_seed(config.seed, kPartitionSeedTag + 1));
    }

    const std::size_t rounds = result.folds[0].rounds.size();
    std::vector<MetricValues> series_a, series_b;
    series_a.reserve(rounds);
    series_b.reserve(rounds);
    for (std::size_t t = 0; t < rounds; ++t) {
        series_a.push_back(result.folds[0].rounds[t].ensemble.values);
        series_b.push_back(result.folds[1].rounds[t].ensemble.values);
    }
    result.ensemble_by_round = cross_validate(series_a, series_b);

    result.clients_by_round.resize(rounds);
    for (std::size_t t = 0; t < rounds; ++t) {
        result.clients_by_round[t].resize(config.clients);
        for (std::size_t k = 0; k < config.clients; ++k) {
            const MetricValues& a = result.folds[0].rounds[t].clients[k].values;
            const MetricValues& b = result.folds[1].rounds[t].clients[k].values;
            MetricValues m;
            m.accuracy = 0.5 * (a.accuracy + b.accuracy);
            m.precision = 0.5 * (a.precision + b.precision);
            m.recall = 0.5 * (a.recall + b.recall);
            m.f_score = 0.5 * (a.f_score + b.f_score);
            result.clients_by_round[t][k] = m;
        }
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const Dataset dataset = load_dataset(config.dataset_path, config.format);
    return run_experiment_on(dataset, config);
}

}  // namespace fedaf
