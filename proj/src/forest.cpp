#include "fedaf/forest.hpp"

#include <cstring>

namespace fedaf {

namespace {

constexpr std::uint32_t kForestMagic = 0x46464146;  // "FAFF" little-endian
constexpr std::uint16_t kForestVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t read_u64(std::span<const std::uint8_t> b, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[at + static_cast<std::size_t>(i)];
    return v;
}

}  // namespace

ForestModel ForestModel::aggregate(std::vector<TreeModel> snapshots, std::size_t round,
                                   std::size_t expected_clients) {
    if (snapshots.size() != expected_clients) {
        throw ConfigError("aggregate: expected " + std::to_string(expected_clients) +
                          " client snapshots, got " + std::to_string(snapshots.size()));
    }
    return ForestModel(std::move(snapshots), round);
}

BinaryLabel ForestModel::vote(const Sample& sample) const {
    if (trees_.empty()) throw std::invalid_argument("vote: empty forest");
    std::size_t positives = 0;
    for (const TreeModel& tree : trees_) {
        if (is_positive(tree.classify(sample).first)) ++positives;
    }
    // Strict majority wins; an exact tie favours the delay prediction.
    return 2 * positives >= trees_.size() ? BinaryLabel::Delayed : BinaryLabel::OnSchedule;
}

std::vector<std::uint8_t> ForestModel::serialize() const {
    std::vector<std::uint8_t> out;
    put_u32(out, kForestMagic);
    put_u16(out, kForestVersion);
    put_u16(out, 0);
    put_u64(out, round_);
    put_u32(out, static_cast<std::uint32_t>(trees_.size()));
    for (const TreeModel& tree : trees_) {
        const std::vector<std::uint8_t> blob = tree.serialize();
        out.insert(out.end(), blob.begin(), blob.end());
    }
    return out;
}

ForestModel ForestModel::deserialize(std::span<const std::uint8_t> bytes, const Schema& schema) {
    if (bytes.size() < 20) throw DecodeError("truncated forest bytes");
    std::uint32_t magic = 0;
    for (int i = 3; i >= 0; --i) magic = (magic << 8) | bytes[static_cast<std::size_t>(i)];
    if (magic != kForestMagic) throw DecodeError("bad forest magic");
    const std::uint16_t version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
    if (version != kForestVersion) throw DecodeError("unsupported forest version");
    const std::uint64_t round = read_u64(bytes, 8);
    std::uint32_t count = 0;
    for (int i = 3; i >= 0; --i) count = (count << 8) | bytes[16 + static_cast<std::size_t>(i)];

    std::vector<TreeModel> trees;
    trees.reserve(count);
    std::size_t pos = 20;
    for (std::uint32_t k = 0; k < count; ++k) {
        // Each tree blob is length-prefixed: 16-byte header then payload.
        if (pos + 16 > bytes.size()) throw DecodeError("truncated forest tree entry");
        const std::uint64_t payload = read_u64(bytes, pos + 8);
        const std::size_t blob_size = 16 + static_cast<std::size_t>(payload);
        if (pos + blob_size > bytes.size()) throw DecodeError("truncated forest tree entry");
        trees.push_back(TreeModel::deserialize(bytes.subspan(pos, blob_size), schema));
        pos += blob_size;
    }
    if (pos != bytes.size()) throw DecodeError("trailing bytes after forest payload");
    return ForestModel(std::move(trees), static_cast<std::size_t>(round));
}

BinaryLabel oracle_label(const ForestModel& forest, const Sample& sample, CommLedger& ledger,
                         std::size_t round, std::size_t sample_bytes) {
    const BinaryLabel label = forest.vote(sample);
    ledger.record_label_request(round, sample_bytes);
    return label;
}

}  // namespace fedaf
