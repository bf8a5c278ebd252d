#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fedaf/benchgen.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Synthetic flight-delay benchmark generator"};
    app.name("fedaf-gen");

    fedaf::BenchmarkSpec spec;
    std::string out;
    std::string format = "csv";
    app.add_option("--out", out, "Output file path")->required();
    app.add_option("--rows", spec.rows, "Number of samples to generate");
    app.add_option("--seed", spec.seed, "Generator seed");
    app.add_option("--format", format, "Output format: arff or csv")
        ->check(CLI::IsMember({"arff", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (format == "arff") {
            fedaf::write_benchmark_arff(out, spec);
        } else {
            fedaf::write_benchmark_csv(out, spec);
        }
        std::cout << "wrote " << spec.rows << " rows to " << out << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
