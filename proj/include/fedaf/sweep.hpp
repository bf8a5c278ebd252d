#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedaf/federation.hpp"

namespace fedaf {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SweepParam { Clients, Rounds, Budget, Grace };

std::string sweep_param_name(SweepParam p);

struct SweepSpec {
    SweepParam parameter = SweepParam::Budget;
    std::vector<double> values;
    ExperimentConfig base;
};

struct SweepCell {
    double value = 0.0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    MetricValues final_metrics;       // fold-averaged, final round
    double mean_client_recall = 0.0;  // fold-averaged, final round
    std::uint64_t label_requests = 0;
    std::uint64_t model_bytes = 0;
    std::optional<ExperimentResult> result;
};

struct SweepTable {
    std::string param_name;
    ExperimentConfig base;
    std::vector<SweepCell> cells;
};

// Runs run_experiment per value with per-cell seed = base seed XOR value
// index. Cell failures are recorded and the sweep continues. Cells run in
// parallel up to FEDAF_THREADS.
SweepTable run_sweep(const SweepSpec& spec);
SweepTable run_sweep_on(const Dataset& dataset, const SweepSpec& spec);

// A single run expressed as a one-cell table (param "single").
SweepTable run_single(const ExperimentConfig& config);
SweepTable run_single_on(const Dataset& dataset, const ExperimentConfig& config);

// CSV table at `csv_path` plus a JSON sidecar (same path with ".json"
// appended) carrying the full per-round series and the originating flags.
void export_results(const SweepTable& table, const std::filesystem::path& csv_path);

struct CliCommand {
    ExperimentConfig config;
    std::optional<SweepSpec> sweep;
    std::optional<std::string> help;  // set when --help was requested
};

// Parses the CLI surface:
//   --dataset PATH --format {arff|csv} --clients K --rounds T --budget FRAC
//   --grace N --delta D --tie-threshold TAU --seed S --out PATH
//   --sweep PARAM=v1,v2,...
// Throws UsageError on unknown flags, unparsable or out-of-range values,
// or a missing dataset.
CliCommand parse_cli(const std::vector<std::string>& args);

// Flag list that reproduces `cmd` through parse_cli (sidecar echo).
std::vector<std::string> echo_flags(const CliCommand& cmd);

// Parallelism cap: FEDAF_THREADS if set, else hardware concurrency.
unsigned max_threads();

}  // namespace fedaf
