#pragma once

#include <cstdint>
#include <filesystem>

namespace fedaf {

// Deterministic synthetic flight-delay benchmark with the 7-feature
// airlines schema. The generating model mixes carrier, airport, day-of-week
// and time-of-day effects with irreducible label noise, calibrated so that
// budget-constrained online trees land in the published operating range.
struct BenchmarkSpec {
    std::uint64_t rows = 540000;
    std::uint64_t seed = 7;
};

void write_benchmark_csv(const std::filesystem::path& path, const BenchmarkSpec& spec);
void write_benchmark_arff(const std::filesystem::path& path, const BenchmarkSpec& spec);

}  // namespace fedaf
