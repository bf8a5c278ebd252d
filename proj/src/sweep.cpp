#include "fedaf/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

namespace fedaf {

namespace {

using nlohmann::json;

ExperimentConfig apply_value(ExperimentConfig base, SweepParam param, double value) {
    switch (param) {
        case SweepParam::Clients:
            base.clients = static_cast<std::size_t>(value);
            break;
        case SweepParam::Rounds:
            base.rounds = static_cast<std::size_t>(value);
            break;
        case SweepParam::Budget:
            base.budget_fraction = value;
            break;
        case SweepParam::Grace:
            base.grace = static_cast<std::uint32_t>(value);
            break;
    }
    return base;
}

bool is_integer_param(SweepParam p) { return p != SweepParam::Budget; }

std::string format_value(SweepParam param, double value) {
    if (is_integer_param(param)) return std::to_string(static_cast<long long>(value));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", value);
    return buf;
}

std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string format_double_exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json metric_json(const MetricValues& v) {
    return json{{"accuracy", v.accuracy},
                {"precision", v.precision},
                {"recall", v.recall},
                {"f_score", v.f_score}};
}

json report_json(const MetricsReport& r) {
    json j = metric_json(r.values);
    j["round"] = r.round;
    j["client"] = r.client_id;
    j["matrix"] = {{"tp", r.matrix.tp}, {"fp", r.matrix.fp}, {"tn", r.matrix.tn}, {"fn", r.matrix.fn}};
    return j;
}

json fold_json(const FoldRun& fold) {
    json rounds = json::array();
    for (std::size_t t = 0; t < fold.rounds.size(); ++t) {
        const RoundRecord& rec = fold.rounds[t];
        json clients = json::array();
        for (const MetricsReport& c : rec.clients) clients.push_back(report_json(c));
        const RoundComms& comms = fold.ledger.rounds().at(t);
        rounds.push_back(json{{"round", t},
                              {"ensemble", report_json(rec.ensemble)},
                              {"clients", clients},
                              {"comms",
                               {{"model_uploads", comms.model_uploads},
                                {"model_bytes", comms.model_bytes},
                                {"label_requests", comms.label_requests},
                                {"request_bytes", comms.request_bytes}}}});
    }
    return json{{"rounds", rounds},
                {"seed_labels", fold.seed_labels},
                {"post_seed_stream", fold.post_seed_stream},
                {"budget_allowance", fold.budget_allowance},
                {"label_requests", fold.label_requests}};
}

void run_cells(const Dataset& dataset, SweepTable& table, const SweepSpec& spec) {
    const std::size_t n = table.cells.size();
    std::atomic<std::size_t> next{0};
    const unsigned workers =
        std::max(1u, std::min<unsigned>(max_threads(), static_cast<unsigned>(n)));

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) break;
            SweepCell& cell = table.cells[i];
            try {
                ExperimentConfig config = apply_value(spec.base, spec.parameter, cell.value);
                config.seed = cell.seed;
                config.validate();
                ExperimentResult result = run_experiment_on(dataset, config);
                cell.final_metrics = result.final_ensemble();
                cell.mean_client_recall = result.mean_client_recall_final();
                cell.label_requests = result.total_label_requests();
                cell.model_bytes = result.total_model_bytes();
                cell.result = std::move(result);
            } catch (const std::exception& e) {
                cell.failed = true;
                cell.error = e.what();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
}

}  // namespace

std::string sweep_param_name(SweepParam p) {
    switch (p) {
        case SweepParam::Clients:
            return "clients";
        case SweepParam::Rounds:
            return "rounds";
        case SweepParam::Budget:
            return "budget";
        case SweepParam::Grace:
            return "grace";
    }
    return "unknown";
}

unsigned max_threads() {
    if (const char* env = std::getenv("FEDAF_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

SweepTable run_sweep_on(const Dataset& dataset, const SweepSpec& spec) {
    if (spec.values.empty()) throw ConfigError("sweep requires at least one value");
    SweepTable table;
    table.param_name = sweep_param_name(spec.parameter);
    table.base = spec.base;
    table.cells.resize(spec.values.size());
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        table.cells[i].value = spec.values[i];
        // Fresh deterministic seed per cell: base seed XOR value index.
        table.cells[i].seed = spec.base.seed ^ static_cast<std::uint64_t>(i);
    }
    run_cells(dataset, table, spec);
    return table;
}

SweepTable run_sweep(const SweepSpec& spec) {
    const Dataset dataset = load_dataset(spec.base.dataset_path, spec.base.format);
    return run_sweep_on(dataset, spec);
}

SweepTable run_single_on(const Dataset& dataset, const ExperimentConfig& config) {
    SweepTable table;
    table.param_name = "single";
    table.base = config;
    table.cells.resize(1);
    SweepCell& cell = table.cells[0];
    cell.value = 0.0;
    cell.seed = config.seed;
    try {
        ExperimentResult result = run_experiment_on(dataset, config);
        cell.final_metrics = result.final_ensemble();
        cell.mean_client_recall = result.mean_client_recall_final();
        cell.label_requests = result.total_label_requests();
        cell.model_bytes = result.total_model_bytes();
        cell.result = std::move(result);
    } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
    }
    return table;
}

SweepTable run_single(const ExperimentConfig& config) {
    const Dataset dataset = load_dataset(config.dataset_path, config.format);
    return run_single_on(dataset, config);
}

void export_results(const SweepTable& table, const std::filesystem::path& csv_path) {
    if (table.cells.empty()) throw ConfigError("export_results: empty table");

    const bool integer_values = table.param_name == "clients" || table.param_name == "rounds" ||
                                table.param_name == "grace" || table.param_name == "single";
    std::string csv =
        "param,value,fold_avg_accuracy,fold_avg_precision,fold_avg_recall,fold_avg_fscore,"
        "mean_client_recall,label_requests,model_bytes\n";
    for (const SweepCell& cell : table.cells) {
        csv += table.param_name;
        csv += ',';
        csv += integer_values ? std::to_string(static_cast<long long>(cell.value))
                              : format_value(SweepParam::Budget, cell.value);
        csv += ',';
        if (cell.failed) {
            csv += ",,,,,,\n";
            continue;
        }
        csv += format_metric(cell.final_metrics.accuracy);
        csv += ',';
        csv += format_metric(cell.final_metrics.precision);
        csv += ',';
        csv += format_metric(cell.final_metrics.recall);
        csv += ',';
        csv += format_metric(cell.final_metrics.f_score);
        csv += ',';
        csv += format_metric(cell.mean_client_recall);
        csv += ',';
        csv += std::to_string(cell.label_requests);
        csv += ',';
        csv += std::to_string(cell.model_bytes);
        csv += '\n';
    }

    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write results file: " + csv_path.string());
    out.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    out.flush();
    if (!out) throw ConfigError("failed writing results file: " + csv_path.string());

    // Structured sidecar with the full per-round series.
    CliCommand echo;
    echo.config = table.base;
    if (table.param_name != "single") {
        SweepSpec spec;
        spec.base = table.base;
        if (table.param_name == "clients") spec.parameter = SweepParam::Clients;
        if (table.param_name == "rounds") spec.parameter = SweepParam::Rounds;
        if (table.param_name == "budget") spec.parameter = SweepParam::Budget;
        if (table.param_name == "grace") spec.parameter = SweepParam::Grace;
        for (const SweepCell& c : table.cells) spec.values.push_back(c.value);
        echo.sweep = spec;
    }

    json j;
    j["tool"] = "fedaf";
    j["flags"] = echo_flags(echo);
    j["param"] = table.param_name;
    json cells = json::array();
    for (const SweepCell& cell : table.cells) {
        json c;
        c["value"] = cell.value;
        c["seed"] = cell.seed;
        if (cell.failed) {
            c["error"] = cell.error;
            cells.push_back(c);
            continue;
        }
        const ExperimentResult& r = *cell.result;
        json cross = json::array();
        for (std::size_t t = 0; t < r.ensemble_by_round.size(); ++t) {
            json m = metric_json(r.ensemble_by_round[t]);
            m["round"] = t;
            cross.push_back(m);
        }
        c["cross_validated"] = cross;
        c["folds"] = json::array({fold_json(r.folds[0]), fold_json(r.folds[1])});
        json clients_final = json::array();
        for (const MetricValues& v : r.clients_by_round.back()) {
            clients_final.push_back(metric_json(v));
        }
        c["clients_final"] = clients_final;
        c["mean_client_recall"] = cell.mean_client_recall;
        c["label_requests"] = cell.label_requests;
        c["model_bytes"] = cell.model_bytes;
        cells.push_back(c);
    }
    j["cells"] = cells;

    const std::filesystem::path sidecar = csv_path.string() + ".json";
    std::ofstream side(sidecar, std::ios::binary);
    if (!side) throw ConfigError("cannot write sidecar file: " + sidecar.string());
    side << j.dump(2) << '\n';
    side.flush();
    if (!side) throw ConfigError("failed writing sidecar file: " + sidecar.string());
}

CliCommand parse_cli(const std::vector<std::string>& args) {
    CLI::App app{"Federated active forest simulator"};
    app.name("fedaf");

    ExperimentConfig cfg;
    std::string dataset;
    std::string format = "csv";
    std::string out = "results.csv";
    std::string sweep_arg;
    app.add_option("--dataset", dataset, "Dataset file path")->required();
    app.add_option("--format", format, "Dataset format: arff or csv")
        ->check(CLI::IsMember({"arff", "csv"}));
    app.add_option("--clients", cfg.clients, "Number of simulated clients (K)");
    app.add_option("--rounds", cfg.rounds, "Number of communication rounds (T)");
    app.add_option("--budget", cfg.budget_fraction, "Label-request budget fraction")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--grace", cfg.grace, "Grace period in samples");
    app.add_option("--delta", cfg.delta, "Split confidence delta");
    app.add_option("--tie-threshold", cfg.tie_threshold, "Hoeffding tie threshold tau");
    app.add_option("--seed", cfg.seed, "Base RNG seed");
    app.add_option("--out", out, "Results CSV path (sidecar JSON written alongside)");
    app.add_option("--sweep", sweep_arg, "Parameter sweep, e.g. clients=1,2,5 or budget=0.01,0.1");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        CliCommand cmd;
        cmd.help = app.help();
        return cmd;
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    cfg.dataset_path = dataset;
    cfg.format = format == "arff" ? FileFormat::Arff : FileFormat::Csv;
    cfg.out_path = out;
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }

    CliCommand cmd;
    cmd.config = cfg;
    if (!sweep_arg.empty()) {
        const std::size_t eq = sweep_arg.find('=');
        if (eq == std::string::npos) {
            throw UsageError("--sweep expects PARAM=v1,v2,... got '" + sweep_arg + "'");
        }
        const std::string name = sweep_arg.substr(0, eq);
        SweepSpec spec;
        spec.base = cfg;
        if (name == "clients")
            spec.parameter = SweepParam::Clients;
        else if (name == "rounds")
            spec.parameter = SweepParam::Rounds;
        else if (name == "budget")
            spec.parameter = SweepParam::Budget;
        else if (name == "grace")
            spec.parameter = SweepParam::Grace;
        else
            throw UsageError("unknown sweep parameter '" + name + "'");

        std::string rest = sweep_arg.substr(eq + 1);
        std::size_t start = 0;
        while (start <= rest.size()) {
            std::size_t comma = rest.find(',', start);
            if (comma == std::string::npos) comma = rest.size();
            const std::string tok = rest.substr(start, comma - start);
            if (tok.empty()) throw UsageError("empty value in --sweep list");
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size()) {
                throw UsageError("unparsable sweep value '" + tok + "'");
            }
            if (is_integer_param(spec.parameter) && (v < 1.0 || v != std::floor(v))) {
                throw UsageError("sweep value '" + tok + "' must be a positive integer");
            }
            spec.values.push_back(v);
            start = comma + 1;
        }
        if (spec.values.empty()) throw UsageError("--sweep requires at least one value");
        for (std::size_t i = 0; i < spec.values.size(); ++i) {
            try {
                apply_value(cfg, spec.parameter, spec.values[i]).validate();
            } catch (const ConfigError& e) {
                throw UsageError(std::string("invalid sweep value: ") + e.what());
            }
        }
        cmd.sweep = spec;
    }
    return cmd;
}

std::vector<std::string> echo_flags(const CliCommand& cmd) {
    const ExperimentConfig& c = cmd.config;
    std::vector<std::string> flags = {
        "--dataset", c.dataset_path.string(),
        "--format", c.format == FileFormat::Arff ? "arff" : "csv",
        "--clients", std::to_string(c.clients),
        "--rounds", std::to_string(c.rounds),
        "--budget", format_double_exact(c.budget_fraction),
        "--grace", std::to_string(c.grace),
        "--delta", format_double_exact(c.delta),
        "--tie-threshold", format_double_exact(c.tie_threshold),
        "--seed", std::to_string(c.seed),
        "--out", c.out_path.string(),
    };
    if (cmd.sweep) {
        std::string arg = sweep_param_name(cmd.sweep->parameter) + "=";
        for (std::size_t i = 0; i < cmd.sweep->values.size(); ++i) {
            if (i) arg += ',';
            arg += is_integer_param(cmd.sweep->parameter)
                       ? std::to_string(static_cast<long long>(cmd.sweep->values[i]))
                       : format_double_exact(cmd.sweep->values[i]);
        }
        flags.push_back("--sweep");
        flags.push_back(arg);
    }
    return flags;
}

}  // namespace fedaf
