#include "fedaf/benchgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedaf/rng.hpp"

namespace fedaf {

namespace {

constexpr std::size_t kAirlines = 18;
constexpr std::size_t kAirports = 293;
constexpr std::uint32_t kMaxFlight = 7500;

// Generating model. Delay odds mix mild marginal effects (time-of-day ramp,
// day-of-week pattern, carrier and airport offsets) with strong late-day
// interactions, so shallow trees see only a faint signal while deeper trees
// keep uncovering structure. Airport offsets are mostly irreducible at
// realistic sample counts and bound the reachable accuracy.
// calibration-time env overrides (FEDAF_BG_*); frozen constants are the defaults
inline double ov(const char* name, double dflt) {
    const char* v = std::getenv(name);
    return v ? std::atof(v) : dflt;
}
const double kBase = ov("FEDAF_BG_BASE", -0.407);
const double kSigmaAirline = ov("FEDAF_BG_SIGAIR", 0.12);
const double kSigmaFrom = ov("FEDAF_BG_SIGFROM", 0.30);
const double kSigmaTo = ov("FEDAF_BG_SIGTO", 0.18);
const double kTimeSlope = ov("FEDAF_BG_TIME", 0.236);
const double kLengthSlope = ov("FEDAF_BG_LEN", 0.20);
const double kDowScale = ov("FEDAF_BG_DOW", 0.25);
const double kLateDowBoost = ov("FEDAF_BG_LATEDOW", 1.33);
const double kLateCarrierBoost = ov("FEDAF_BG_LATECAR", 0.50);
const double kLateDowCarrierBoost = ov("FEDAF_BG_LDC", 0.70);
const std::array<double, 7> kDowDeviation = {-0.90, -0.50, -0.20, 0.10, 1.00, 0.73, 0.73};

std::string airline_code(std::size_t i) {
    std::string s(2, 'A');
    s[0] = static_cast<char>('A' + i / 26);
    s[1] = static_cast<char>('A' + i % 26);
    return s;
}

std::string airport_code(std::size_t i) {
    std::string s(3, 'A');
    s[0] = static_cast<char>('A' + (i / 676) % 26);
    s[1] = static_cast<char>('A' + (i / 26) % 26);
    s[2] = static_cast<char>('A' + i % 26);
    return s;
}

// Cumulative distribution over categories with Zipf-like weights.
std::vector<double> zipf_cdf(std::size_t n, double exponent) {
    std::vector<double> cdf(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
        cdf[i] = total;
    }
    for (double& c : cdf) c /= total;
    return cdf;
}

std::size_t draw_cdf(Rng& rng, const std::vector<double>& cdf) {
    const double u = rng.unit();
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    return static_cast<std::size_t>(it - cdf.begin());
}

struct Generator {
    explicit Generator(const BenchmarkSpec& spec)
        : rng(derive_seed(spec.seed, 0xDA7A)),
          airline_cdf(zipf_cdf(kAirlines, 0.7)),
          airport_cdf(zipf_cdf(kAirports, 0.9)) {
        Rng effects(derive_seed(spec.seed, 0xEFFE));
        airline_effect.reserve(kAirlines);
        for (std::size_t i = 0; i < kAirlines; ++i) {
            // Bimodal carrier reliability: decisively delay-prone or decisively
            // punctual, with a little per-carrier jitter.
            const double sign = effects.unit() < 0.5 ? -1.0 : 1.0;
            airline_effect.push_back(sign * kSigmaAirline + 0.10 * effects.normal());
        }
        from_effect.reserve(kAirports);
        to_effect.reserve(kAirports);
        for (std::size_t i = 0; i < kAirports; ++i) {
            from_effect.push_back(kSigmaFrom * effects.normal());
        }
        for (std::size_t i = 0; i < kAirports; ++i) {
            to_effect.push_back(kSigmaTo * effects.normal());
        }
    }

    struct Row {
        std::size_t airline;
        std::uint32_t flight;
        std::size_t from;
        std::size_t to;
        int day_of_week;  // 1..7
        int time;         // minutes since midnight
        int length;       // minutes
        int delay;        // class: 1 = delayed
    };

    Row next() {
        Row r;
        r.airline = draw_cdf(rng, airline_cdf);
        r.flight = static_cast<std::uint32_t>(rng.below(kMaxFlight)) + 1;
        r.from = draw_cdf(rng, airport_cdf);
        do {
            r.to = draw_cdf(rng, airport_cdf);
        } while (r.to == r.from);
        r.day_of_week = static_cast<int>(rng.below(7)) + 1;

        // Departure times cluster in a morning and an evening bank.
        const double u = rng.unit();
        double t;
        if (u < 0.38) {
            t = 500.0 + 110.0 * rng.normal();
        } else if (u < 0.82) {
            t = 1000.0 + 150.0 * rng.normal();
        } else {
            t = 10.0 + rng.unit() * 1429.0;
        }
        r.time = static_cast<int>(std::clamp(t, 10.0, 1439.0));

        const double len = std::exp(4.72 + 0.45 * rng.normal());
        r.length = static_cast<int>(std::clamp(len, 25.0, 655.0));

        const double ramp = (static_cast<double>(r.time) - 680.0) / 700.0;
        const double late = std::max(ramp, 0.0);
        const double dow_dev = kDowDeviation[static_cast<std::size_t>(r.day_of_week - 1)];
        const double carrier = airline_effect[r.airline];
        const double length_norm = (static_cast<double>(r.length) - 130.0) / 320.0;
        const double carrier_sign = carrier >= 0.0 ? 1.0 : -1.0;
        const double logit = kBase + carrier + from_effect[r.from] + to_effect[r.to] +
                             kTimeSlope * ramp + kDowScale * dow_dev +
                             kLateDowBoost * late * dow_dev +
                             kLateCarrierBoost * late * carrier_sign +
                             kLateDowCarrierBoost * late * std::max(dow_dev, 0.0) * carrier_sign +
                             kLengthSlope * length_norm;
        const double p = 1.0 / (1.0 + std::exp(-logit));
        r.delay = rng.unit() < p ? 1 : 0;
        return r;
    }

    Rng rng;
    std::vector<double> airline_cdf;
    std::vector<double> airport_cdf;
    std::vector<double> airline_effect;
    std::vector<double> from_effect;
    std::vector<double> to_effect;
};

void append_row_csv(std::string& out, const Generator::Row& r) {
    out += airline_code(r.airline);
    out += ',';
    out += std::to_string(r.flight);
    out += ',';
    out += airport_code(r.from);
    out += ',';
    out += airport_code(r.to);
    out += ',';
    out += std::to_string(r.day_of_week);
    out += ',';
    out += std::to_string(r.time);
    out += ',';
    out += std::to_string(r.length);
    out += ',';
    out += static_cast<char>('0' + r.delay);
    out += '\n';
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write benchmark file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("failed writing benchmark file: " + path.string());
}

}  // namespace

void write_benchmark_csv(const std::filesystem::path& path, const BenchmarkSpec& spec) {
    Generator gen(spec);
    std::string out;
    out.reserve(spec.rows * 34 + 80);
    out += "Airline,Flight,AirportFrom,AirportTo,DayOfWeek,Time,Length,Delay\n";
    for (std::uint64_t i = 0; i < spec.rows; ++i) append_row_csv(out, gen.next());
    write_file(path, out);
}

void write_benchmark_arff(const std::filesystem::path& path, const BenchmarkSpec& spec) {
    Generator gen(spec);
    std::string out;
    out.reserve(spec.rows * 34 + 8192);
    out += "@relation airlines\n\n";
    out += "@attribute Airline {";
    for (std::size_t i = 0; i < kAirlines; ++i) {
        if (i) out += ',';
        out += airline_code(i);
    }
    out += "}\n@attribute Flight numeric\n@attribute AirportFrom {";
    for (std::size_t i = 0; i < kAirports; ++i) {
        if (i) out += ',';
        out += airport_code(i);
    }
    out += "}\n@attribute AirportTo {";
    for (std::size_t i = 0; i < kAirports; ++i) {
        if (i) out += ',';
        out += airport_code(i);
    }
    out += "}\n@attribute DayOfWeek numeric\n@attribute Time numeric\n";
    out += "@attribute Length numeric\n@attribute Delay {0,1}\n\n@data\n";
    for (std::uint64_t i = 0; i < spec.rows; ++i) append_row_csv(out, gen.next());
    write_file(path, out);
}

}  // namespace fedaf
