#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "fedaf/datastream.hpp"

namespace fedaf {

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Accruing, spendable label-request allowance. Both counters are monotone;
// spent never exceeds accrued.
struct Budget {
    std::uint64_t accrued = 0;
    std::uint64_t spent = 0;
    std::uint64_t remaining() const { return accrued - spent; }
};

struct TreeParams {
    std::uint32_t grace_period = 100;
    double split_confidence = 0.05;  // delta
    double tie_threshold = 0.05;     // tau
};

// Label source for active requests. The production implementation is the
// server forest; tests script their own.
class LabelOracle {
public:
    virtual ~LabelOracle() = default;
    virtual BinaryLabel request_label(const Sample& sample) = 0;
};

// epsilon = sqrt(R^2 * ln(1/delta) / (2n))
double hoeffding_bound(double range, double delta, std::uint64_t n);

struct CategoricalObserver {
    // value index -> per-class counts
    std::unordered_map<std::uint32_t, std::array<std::uint64_t, 2>> counts;
};

struct GaussianEstimator {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n) : 0.0; }
};

struct NumericObserver {
    std::array<GaussianEstimator, 2> per_class;
};

using FeatureObserver = std::variant<CategoricalObserver, NumericObserver>;

// Per-leaf sufficient statistics and the buffer of samples awaiting labels.
struct LeafStats {
    std::array<std::uint64_t, 2> class_counts{0, 0};
    std::vector<FeatureObserver> observers;  // sized on first absorb
    std::uint32_t seen_since_check = 0;
    std::vector<Sample> unlabeled_buffer;    // FIFO, capacity = grace period

    std::uint64_t labeled_total() const { return class_counts[0] + class_counts[1]; }
    void absorb(const Schema& schema, const Sample& labeled);
};

struct SplitTest {
    std::size_t feature = 0;
    bool numeric = false;
    double threshold = 0.0;  // numeric only; categorical tests are multiway
};

struct SplitDecision {
    enum class Outcome { Split, NoSplit, Ambiguous };
    Outcome outcome = Outcome::NoSplit;
    SplitTest test;    // Split only
    double gap = 0.0;  // Ambiguous only: epsilon - (G1 - G2), > 0
};

// Information gain of the best test on `feature` over the leaf statistics.
// No-split scores 0; single-valued features score 0.
double split_gain(const LeafStats& stats, const Schema& schema, std::size_t feature);

// Confidence-bounded split check. Resets seen_since_check.
SplitDecision try_split(LeafStats& stats, const Schema& schema, const TreeParams& params);

struct ObserveEvent {
    std::uint32_t requests_made = 0;
    bool split_performed = false;
    bool budget_starved = false;
};

// Online binary-class decision tree growing via confidence-bounded split
// decisions; spends label budget at an oracle when a split check comes out
// ambiguous.
class TreeModel {
public:
    TreeModel(const Schema& schema, TreeParams params);

    TreeModel(TreeModel&&) noexcept = default;
    TreeModel& operator=(TreeModel&&) noexcept = default;
    TreeModel(const TreeModel&) = delete;
    TreeModel& operator=(const TreeModel&) = delete;

    // Majority class of the reached leaf plus its confidence. Empty leaves
    // fall back to the parent-path prior; a bare root predicts
    // (OnSchedule, 0.5).
    std::pair<BinaryLabel, double> classify(const Sample& sample) const;

    // Seed-phase training: absorbs a ground-truth-labeled sample. Ambiguous
    // split checks are treated as no-split (no oracle in the seed phase).
    void train_labeled(const Sample& sample);

    // Active-phase training on an unlabeled sample against the oracle.
    ObserveEvent observe(const Sample& sample, LabelOracle& oracle, Budget& budget);

    // Round boundary: pending label-request candidates die with the round's
    // data batch. Clears every leaf's unlabeled buffer and check counter;
    // learned statistics persist.
    void flush_round();

    std::vector<std::uint8_t> serialize() const;
    static TreeModel deserialize(std::span<const std::uint8_t> bytes, const Schema& schema);

    std::size_t node_count() const { return node_count_; }
    std::size_t leaf_count() const { return leaf_count_; }
    const TreeParams& params() const { return params_; }
    const Schema& schema() const { return *schema_; }

private:
    struct Node {
        std::unique_ptr<LeafStats> stats;  // leaf iff non-null
        std::array<std::uint64_t, 2> frozen_counts{0, 0};  // internal: counts at split time
        std::uint16_t feature = 0;
        bool numeric_split = false;
        double threshold = 0.0;
        std::vector<std::unique_ptr<Node>> children;

        bool is_leaf() const { return stats != nullptr; }
    };

    Node* route(const Sample& sample) const;
    void perform_split(Node& node, const SplitTest& test);
    ObserveEvent check_leaf(Node& node, LabelOracle* oracle, Budget* budget);

    const Schema* schema_ = nullptr;
    TreeParams params_;
    std::unique_ptr<Node> root_;
    std::size_t node_count_ = 1;
    std::size_t leaf_count_ = 1;
};

}  // namespace fedaf
