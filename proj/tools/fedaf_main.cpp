#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "fedaf/sweep.hpp"

namespace {

void print_summary(const fedaf::SweepTable& table) {
    for (const fedaf::SweepCell& cell : table.cells) {
        if (cell.failed) {
            std::printf("%s=%g  FAILED: %s\n", table.param_name.c_str(), cell.value,
                        cell.error.c_str());
            continue;
        }
        std::printf(
            "%s=%g  acc=%.4f prec=%.4f rec=%.4f f=%.4f client_rec=%.4f requests=%llu "
            "model_bytes=%llu\n",
            table.param_name.c_str(), cell.value, cell.final_metrics.accuracy,
            cell.final_metrics.precision, cell.final_metrics.recall, cell.final_metrics.f_score,
            cell.mean_client_recall, static_cast<unsigned long long>(cell.label_requests),
            static_cast<unsigned long long>(cell.model_bytes));
    }
}

}  // namespace

int main(int argc, char** argv) {
    try {
        const std::vector<std::string> args(argv + 1, argv + argc);
        const fedaf::CliCommand cmd = fedaf::parse_cli(args);
        if (cmd.help) {
            std::cout << *cmd.help;
            return 0;
        }

        const fedaf::SweepTable table =
            cmd.sweep ? fedaf::run_sweep(*cmd.sweep) : fedaf::run_single(cmd.config);
        fedaf::export_results(table, cmd.config.out_path);
        print_summary(table);
        std::printf("results written to %s (+ sidecar %s.json)\n",
                    cmd.config.out_path.string().c_str(), cmd.config.out_path.string().c_str());

        for (const fedaf::SweepCell& cell : table.cells) {
            if (cell.failed) return 1;
        }
        return 0;
    } catch (const fedaf::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
