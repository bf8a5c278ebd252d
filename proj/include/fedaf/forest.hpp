#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedaf/comms.hpp"
#include "fedaf/tree.hpp"

namespace fedaf {

// Server-side ensemble: immutable classify-only tree snapshots, one per
// client, majority-voted with ties resolved to the positive (delayed) class.
class ForestModel {
public:
    // Takes ownership of the snapshots. Throws ConfigError unless exactly
    // `expected_clients` snapshots are present (client churn is out of scope).
    static ForestModel aggregate(std::vector<TreeModel> snapshots, std::size_t round,
                                 std::size_t expected_clients);

    BinaryLabel vote(const Sample& sample) const;

    std::size_t size() const { return trees_.size(); }
    std::size_t round() const { return round_; }
    const TreeModel& tree(std::size_t k) const { return trees_.at(k); }

    std::vector<std::uint8_t> serialize() const;
    static ForestModel deserialize(std::span<const std::uint8_t> bytes, const Schema& schema);

private:
    ForestModel(std::vector<TreeModel> trees, std::size_t round)
        : trees_(std::move(trees)), round_(round) {}

    std::vector<TreeModel> trees_;
    std::size_t round_ = 0;
};

// Answers a label request with the forest vote and charges the ledger
// (one request, the sample's wire size in bytes) against `round`.
BinaryLabel oracle_label(const ForestModel& forest, const Sample& sample, CommLedger& ledger,
                         std::size_t round, std::size_t sample_bytes);

// LabelOracle adapter over a completed forest, used by clients during
// round t against F_{t-1}.
class ForestOracle final : public LabelOracle {
public:
    ForestOracle(const ForestModel& forest, CommLedger& ledger, std::size_t round,
                 std::size_t sample_bytes)
        : forest_(&forest), ledger_(&ledger), round_(round), sample_bytes_(sample_bytes) {}

    BinaryLabel request_label(const Sample& sample) override {
        return oracle_label(*forest_, sample, *ledger_, round_, sample_bytes_);
    }

private:
    const ForestModel* forest_;
    CommLedger* ledger_;
    std::size_t round_;
    std::size_t sample_bytes_;
};

}  // namespace fedaf
