#include "fedaf/datastream.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "fedaf/rng.hpp"

namespace fedaf {

namespace {

const char* const kAirlinesHeader = "Airline,Flight,AirportFrom,AirportTo,DayOfWeek,Time,Length,Delay";

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_number(const std::string& field, std::size_t line_no) {
    const std::string t = trim(field);
    double value = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || t.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": unparseable numeric value '" +
                         field + "'");
    }
    return value;
}

BinaryLabel parse_label(const std::string& field, std::size_t line_no) {
    const std::string t = trim(field);
    if (t == "0") return BinaryLabel::OnSchedule;
    if (t == "1") return BinaryLabel::Delayed;
    throw ParseError("line " + std::to_string(line_no) + ": label must be 0 or 1, got '" + field +
                     "'");
}

class Encoder {
public:
    explicit Encoder(std::size_t features) : maps_(features) {}

    std::uint32_t encode(Schema& schema, std::size_t feature, const std::string& value) {
        auto& map = maps_[feature];
        auto it = map.find(value);
        if (it != map.end()) return it->second;
        const std::uint32_t index = schema.encode(feature, value);
        map.emplace(value, index);
        return index;
    }

private:
    std::vector<std::unordered_map<std::string, std::uint32_t>> maps_;
};

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError("line 1: missing CSV header");
    line = strip_cr(line);
    if (line != kAirlinesHeader) {
        throw ParseError("line 1: CSV header does not match the airlines schema (expected '" +
                         std::string(kAirlinesHeader) + "')");
    }

    Dataset ds;
    ds.schema = airlines_csv_schema();
    const std::size_t n_features = ds.schema.feature_count();
    Encoder enc(n_features);

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_commas(line);
        if (fields.size() != n_features + 1) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(n_features + 1) + " fields, got " +
                             std::to_string(fields.size()));
        }
        Sample s;
        s.values.reserve(n_features);
        for (std::size_t f = 0; f < n_features; ++f) {
            if (ds.schema.feature(f).kind == FeatureKind::Categorical) {
                s.values.push_back(FeatureValue::categorical(enc.encode(ds.schema, f, trim(fields[f]))));
            } else {
                s.values.push_back(FeatureValue::numeric(parse_number(fields[f], line_no)));
            }
        }
        s.label = parse_label(fields[n_features], line_no);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

struct ArffAttribute {
    std::string name;
    bool nominal = false;
    std::vector<std::string> values;
};

ArffAttribute parse_attribute_decl(const std::string& rest, std::size_t line_no) {
    // rest: NAME numeric   or   NAME {v1,v2,...}
    ArffAttribute attr;
    std::size_t i = 0;
    while (i < rest.size() && !std::isspace(static_cast<unsigned char>(rest[i]))) ++i;
    attr.name = rest.substr(0, i);
    std::string type = trim(rest.substr(i));
    if (attr.name.empty() || type.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": malformed @attribute declaration");
    }
    if (type.front() == '{') {
        if (type.back() != '}') {
            throw ParseError("line " + std::to_string(line_no) + ": unterminated nominal value list");
        }
        attr.nominal = true;
        for (const std::string& v : split_commas(type.substr(1, type.size() - 2))) {
            attr.values.push_back(trim(v));
        }
        if (attr.values.empty()) {
            throw ParseError("line " + std::to_string(line_no) + ": empty nominal value list");
        }
    } else if (lower(type) == "numeric" || lower(type) == "real" || lower(type) == "integer") {
        attr.nominal = false;
    } else {
        throw ParseError("line " + std::to_string(line_no) + ": unsupported attribute type '" +
                         type + "'");
    }
    return attr;
}

Dataset load_arff(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open dataset file: " + path.string());

    std::vector<ArffAttribute> attrs;
    std::string line;
    std::size_t line_no = 0;
    bool in_data = false;

    // Header pass: @relation / @attribute lines until @data.
    while (!in_data && std::getline(in, line)) {
        ++line_no;
        line = trim(strip_cr(line));
        if (line.empty() || line.front() == '%') continue;
        const std::string low = lower(line);
        if (low.rfind("@relation", 0) == 0) continue;
        if (low.rfind("@attribute", 0) == 0) {
            attrs.push_back(parse_attribute_decl(trim(line.substr(10)), line_no));
            continue;
        }
        if (low.rfind("@data", 0) == 0) {
            in_data = true;
            continue;
        }
        throw ParseError("line " + std::to_string(line_no) + ": unexpected ARFF directive");
    }
    if (!in_data) throw ParseError("missing @data section");
    if (attrs.size() != 8) {
        throw ParseError("expected 8 attribute declarations (7 features + class), got " +
                         std::to_string(attrs.size()));
    }
    const ArffAttribute& cls = attrs.back();
    if (!cls.nominal || cls.values.size() != 2) {
        throw ParseError("class attribute must be nominal with values {0,1}");
    }

    Dataset ds;
    std::vector<FeatureSpec> specs;
    for (std::size_t f = 0; f + 1 < attrs.size(); ++f) {
        FeatureSpec spec;
        spec.name = attrs[f].name;
        spec.kind = attrs[f].nominal ? FeatureKind::Categorical : FeatureKind::Numeric;
        specs.push_back(spec);
    }
    ds.schema = Schema(std::move(specs));
    std::vector<std::unordered_map<std::string, std::uint32_t>> nominal_index(attrs.size() - 1);
    for (std::size_t f = 0; f + 1 < attrs.size(); ++f) {
        if (attrs[f].nominal) {
            ds.schema.set_dictionary(f, attrs[f].values);
            for (std::uint32_t i = 0; i < attrs[f].values.size(); ++i) {
                nominal_index[f].emplace(attrs[f].values[i], i);
            }
        }
    }

    const std::size_t n_features = ds.schema.feature_count();
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty() || line.front() == '%') continue;
        const std::vector<std::string> fields = split_commas(line);
        if (fields.size() != attrs.size()) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(attrs.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        Sample s;
        s.values.reserve(n_features);
        for (std::size_t f = 0; f < n_features; ++f) {
            if (attrs[f].nominal) {
                const std::string v = trim(fields[f]);
                auto it = nominal_index[f].find(v);
                if (it == nominal_index[f].end()) {
                    throw ParseError("line " + std::to_string(line_no) + ": undeclared nominal value '" +
                                     v + "' for attribute " + attrs[f].name);
                }
                s.values.push_back(FeatureValue::categorical(it->second));
            } else {
                s.values.push_back(FeatureValue::numeric(parse_number(fields[f], line_no)));
            }
        }
        s.label = parse_label(fields[n_features], line_no);
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace

std::uint32_t Schema::encode(std::size_t feature, const std::string& value) {
    auto& spec = features_.at(feature);
    if (spec.kind != FeatureKind::Categorical) {
        throw std::invalid_argument("encode on a numeric feature");
    }
    auto& dict = dictionaries_[feature];
    for (std::uint32_t i = 0; i < dict.size(); ++i) {
        if (dict[i] == value) return i;
    }
    dict.push_back(value);
    spec.cardinality = static_cast<std::uint32_t>(dict.size());
    return static_cast<std::uint32_t>(dict.size() - 1);
}

const std::string& Schema::decode(std::size_t feature, std::uint32_t index) const {
    return dictionaries_.at(feature).at(index);
}

void Schema::set_dictionary(std::size_t feature, std::vector<std::string> values) {
    auto& spec = features_.at(feature);
    if (spec.kind != FeatureKind::Categorical) {
        throw std::invalid_argument("dictionary on a numeric feature");
    }
    dictionaries_.at(feature) = std::move(values);
    spec.cardinality = static_cast<std::uint32_t>(dictionaries_[feature].size());
}

Schema airlines_csv_schema() {
    std::vector<FeatureSpec> specs = {
        {"Airline", FeatureKind::Categorical, 0},
        {"Flight", FeatureKind::Numeric, 0},
        {"AirportFrom", FeatureKind::Categorical, 0},
        {"AirportTo", FeatureKind::Categorical, 0},
        {"DayOfWeek", FeatureKind::Numeric, 0},
        {"Time", FeatureKind::Numeric, 0},
        {"Length", FeatureKind::Numeric, 0},
    };
    return Schema(std::move(specs));
}

Dataset load_dataset(const std::filesystem::path& path, FileFormat format) {
    switch (format) {
        case FileFormat::Csv:
            return load_csv(path);
        case FileFormat::Arff:
            return load_arff(path);
    }
    throw ConfigError("unknown dataset format");
}

DatasetStats dataset_stats(const Dataset& dataset) {
    if (dataset.samples.empty()) throw std::invalid_argument("dataset_stats: empty dataset");
    DatasetStats stats;
    stats.n_samples = dataset.samples.size();
    std::uint64_t negatives = 0;
    for (const Sample& s : dataset.samples) {
        if (s.label && !is_positive(*s.label)) ++negatives;
    }
    stats.class_ratio = static_cast<double>(negatives) / static_cast<double>(stats.n_samples);
    for (std::size_t f = 0; f < dataset.schema.feature_count(); ++f) {
        stats.cardinalities.push_back(dataset.schema.feature(f).cardinality);
    }
    return stats;
}

std::pair<std::vector<Sample>, std::vector<Sample>> split_folds(const Dataset& dataset,
                                                                std::uint64_t seed) {
    if (dataset.samples.size() < 2) {
        throw std::invalid_argument("split_folds: dataset must hold at least 2 samples");
    }
    std::vector<Sample> shuffled = dataset.samples;
    Rng rng(seed);
    rng.shuffle(shuffled);
    const std::size_t mid = shuffled.size() / 2;
    std::vector<Sample> fold_a(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(mid));
    std::vector<Sample> fold_b(shuffled.begin() + static_cast<std::ptrdiff_t>(mid), shuffled.end());
    return {std::move(fold_a), std::move(fold_b)};
}

std::vector<std::vector<Sample>> partition_clients(std::vector<Sample> fold, std::size_t clients,
                                                   std::uint64_t seed) {
    if (clients < 1) throw std::invalid_argument("partition_clients: client count must be >= 1");
    if (clients > fold.size()) {
        throw std::invalid_argument("partition_clients: more clients than samples");
    }
    Rng rng(seed);
    rng.shuffle(fold);
    std::vector<std::vector<Sample>> streams(clients);
    const std::size_t base = fold.size() / clients;
    const std::size_t extra = fold.size() % clients;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < clients; ++k) {
        const std::size_t len = base + (k < extra ? 1 : 0);
        streams[k].assign(std::make_move_iterator(fold.begin() + static_cast<std::ptrdiff_t>(pos)),
                          std::make_move_iterator(fold.begin() + static_cast<std::ptrdiff_t>(pos + len)));
        pos += len;
    }
    return streams;
}

std::vector<RoundChunk> chunk_rounds(std::vector<Sample> stream, std::size_t rounds,
                                     std::size_t client_id) {
    if (rounds < 1) throw std::invalid_argument("chunk_rounds: round count must be >= 1");
    if (rounds > stream.size()) {
        throw std::invalid_argument("chunk_rounds: more rounds than samples in the stream");
    }
    std::vector<RoundChunk> chunks;
    chunks.reserve(rounds);
    const std::size_t base = stream.size() / rounds;
    const std::size_t extra = stream.size() % rounds;
    std::size_t pos = 0;
    for (std::size_t t = 0; t < rounds; ++t) {
        const std::size_t len = base + (t < extra ? 1 : 0);
        RoundChunk chunk;
        chunk.client_id = client_id;
        chunk.round = t;
        chunk.samples.assign(std::make_move_iterator(stream.begin() + static_cast<std::ptrdiff_t>(pos)),
                             std::make_move_iterator(stream.begin() + static_cast<std::ptrdiff_t>(pos + len)));
        pos += len;
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

std::size_t sample_wire_size(const Schema& schema) {
    std::size_t bytes = 0;
    for (const FeatureSpec& spec : schema.features()) {
        bytes += spec.kind == FeatureKind::Categorical ? 4 : 8;
    }
    return bytes;
}

}  // namespace fedaf
