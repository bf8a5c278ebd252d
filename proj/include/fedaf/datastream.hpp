#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fedaf {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FeatureKind : std::uint8_t { Categorical, Numeric };

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Numeric;
    std::uint32_t cardinality = 0;  // categorical only
};

// Feature metadata plus the categorical encoding dictionaries
// (value index -> original string, in first-seen order).
class Schema {
public:
    Schema() = default;
    explicit Schema(std::vector<FeatureSpec> features)
        : features_(std::move(features)), dictionaries_(features_.size()) {}

    std::size_t feature_count() const { return features_.size(); }
    const FeatureSpec& feature(std::size_t i) const { return features_.at(i); }
    const std::vector<FeatureSpec>& features() const { return features_; }

    // Maps a categorical string to its dense index, extending the
    // dictionary on first sight.
    std::uint32_t encode(std::size_t feature, const std::string& value);
    const std::string& decode(std::size_t feature, std::uint32_t index) const;

    // Pre-register a full value list (ARFF declarations).
    void set_dictionary(std::size_t feature, std::vector<std::string> values);

private:
    std::vector<FeatureSpec> features_;
    std::vector<std::vector<std::string>> dictionaries_;
};

// Positive class is "delayed"; ties in the ensemble resolve in its favour.
enum class BinaryLabel : std::uint8_t { OnSchedule = 0, Delayed = 1 };

constexpr bool is_positive(BinaryLabel l) { return l == BinaryLabel::Delayed; }

class FeatureValue {
public:
    static FeatureValue categorical(std::uint32_t index) {
        FeatureValue v;
        v.kind_ = FeatureKind::Categorical;
        v.index_ = index;
        return v;
    }
    static FeatureValue numeric(double value) {
        FeatureValue v;
        v.kind_ = FeatureKind::Numeric;
        v.number_ = value;
        return v;
    }

    FeatureKind kind() const { return kind_; }
    std::uint32_t index() const { return index_; }
    double number() const { return number_; }

private:
    FeatureValue() = default;
    FeatureKind kind_ = FeatureKind::Numeric;
    union {
        std::uint32_t index_;
        double number_ = 0.0;
    };
};

struct Sample {
    std::vector<FeatureValue> values;
    std::optional<BinaryLabel> label;
};

struct Dataset {
    Schema schema;
    std::vector<Sample> samples;
};

struct DatasetStats {
    std::size_t n_samples = 0;
    double class_ratio = 0.0;  // count(negative) / count(total)
    std::vector<std::uint32_t> cardinalities;
};

struct RoundChunk {
    std::size_t client_id = 0;
    std::size_t round = 0;
    std::vector<Sample> samples;
};

enum class FileFormat { Arff, Csv };

Dataset load_dataset(const std::filesystem::path& path, FileFormat format);
DatasetStats dataset_stats(const Dataset& dataset);

// Uniformly random permutation under the seed, cut at the midpoint.
std::pair<std::vector<Sample>, std::vector<Sample>> split_folds(const Dataset& dataset,
                                                                std::uint64_t seed);

// Shuffles under the seed, then deals into K contiguous near-equal blocks.
std::vector<std::vector<Sample>> partition_clients(std::vector<Sample> fold, std::size_t clients,
                                                   std::uint64_t seed);

// Cuts one client stream into T contiguous near-equal chunks; chunk 0 is
// the seed chunk.
std::vector<RoundChunk> chunk_rounds(std::vector<Sample> stream, std::size_t rounds,
                                     std::size_t client_id);

// Number of bytes a sample occupies on the wire (per-feature payload:
// 4 bytes per categorical index, 8 per numeric).
std::size_t sample_wire_size(const Schema& schema);

// The fixed 7-feature airlines CSV schema (header
// Airline,Flight,AirportFrom,AirportTo,DayOfWeek,Time,Length,Delay).
Schema airlines_csv_schema();

}  // namespace fedaf
