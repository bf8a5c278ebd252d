#include "fedaf/tree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace fedaf {

namespace {

// Standard normal quantiles at i/11, i = 1..10: candidate cut points for
// numeric splits, placed at equally spaced quantiles of the pooled Gaussian.
constexpr double kCutQuantiles[10] = {
    -1.3351777361189367, -0.9084578685373851, -0.6045853465832371, -0.3487556955170447,
    -0.1141852943214283, 0.1141852943214283,  0.3487556955170447,  0.6045853465832371,
    0.9084578685373851,  1.3351777361189367,
};

double entropy2(double a, double b) {
    const double n = a + b;
    if (n <= 0.0) return 0.0;
    double h = 0.0;
    if (a > 0.0) {
        const double p = a / n;
        h -= p * std::log2(p);
    }
    if (b > 0.0) {
        const double p = b / n;
        h -= p * std::log2(p);
    }
    return h;
}

double gaussian_cdf(double x, double mean, double sigma) {
    if (sigma <= 0.0) return x >= mean ? 1.0 : 0.0;
    return 0.5 * std::erfc(-(x - mean) / (sigma * 1.4142135623730951));
}

struct FeatureSplit {
    double gain = 0.0;
    bool numeric = false;
    double threshold = 0.0;
    std::size_t branches = 0;
};

// Expected spurious gain of a b-way split on random data, chi-square style:
// (b-1)(classes-1) / (2 n ln 2). Candidate ranking subtracts this so that
// wide multiway tests (hundreds of airport values) cannot win a tie-forced
// split on estimator noise alone.
double gain_bias(std::size_t branches, std::uint64_t n) {
    if (n == 0) return 0.0;
    return static_cast<double>(branches - 1) / (2.0 * static_cast<double>(n) * 0.6931471805599453);
}

FeatureSplit best_categorical_split(const LeafStats& stats, const CategoricalObserver& obs) {
    FeatureSplit result;
    if (obs.counts.size() < 2) return result;

    // Sorted value order keeps the floating-point accumulation independent
    // of hash-map layout.
    std::vector<std::pair<std::uint32_t, std::array<std::uint64_t, 2>>> entries(obs.counts.begin(),
                                                                                obs.counts.end());
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    const double total = static_cast<double>(stats.labeled_total());
    const double h0 = entropy2(static_cast<double>(stats.class_counts[0]),
                               static_cast<double>(stats.class_counts[1]));
    double weighted = 0.0;
    for (const auto& [value, counts] : entries) {
        const double nv = static_cast<double>(counts[0] + counts[1]);
        weighted += (nv / total) * entropy2(static_cast<double>(counts[0]),
                                            static_cast<double>(counts[1]));
    }
    result.gain = std::max(0.0, h0 - weighted);
    result.branches = entries.size();
    return result;
}

FeatureSplit best_numeric_split(const NumericObserver& obs) {
    FeatureSplit result;
    result.numeric = true;

    const auto& neg = obs.per_class[0];
    const auto& pos = obs.per_class[1];
    const double n0 = static_cast<double>(neg.n);
    const double n1 = static_cast<double>(pos.n);
    const double n = n0 + n1;
    if (n0 + n1 < 2.0 || n0 == 0.0 || n1 == 0.0) return result;

    const double pooled_mean = (n0 * neg.mean + n1 * pos.mean) / n;
    const double within = (n0 * neg.variance() + n1 * pos.variance()) / n;
    const double between = (n0 * (neg.mean - pooled_mean) * (neg.mean - pooled_mean) +
                            n1 * (pos.mean - pooled_mean) * (pos.mean - pooled_mean)) /
                           n;
    const double pooled_sigma = std::sqrt(within + between);
    if (pooled_sigma <= 0.0 || !std::isfinite(pooled_sigma)) return result;

    const double sigma0 = std::sqrt(neg.variance());
    const double sigma1 = std::sqrt(pos.variance());
    const double h0 = entropy2(n0, n1);

    for (double z : kCutQuantiles) {
        const double t = pooled_mean + pooled_sigma * z;
        const double left0 = n0 * gaussian_cdf(t, neg.mean, sigma0);
        const double left1 = n1 * gaussian_cdf(t, pos.mean, sigma1);
        const double left = left0 + left1;
        const double right = n - left;
        if (left < 1e-9 || right < 1e-9) continue;
        const double h = (left / n) * entropy2(left0, left1) +
                         (right / n) * entropy2(n0 - left0, n1 - left1);
        const double gain = h0 - h;
        if (gain > result.gain) {
            result.gain = gain;
            result.threshold = t;
        }
    }
    result.gain = std::max(0.0, result.gain);
    result.branches = 2;
    return result;
}

FeatureSplit best_feature_split(const LeafStats& stats, const Schema& schema, std::size_t feature) {
    if (stats.observers.empty() || stats.labeled_total() == 0) return {};
    const FeatureObserver& obs = stats.observers.at(feature);
    if (schema.feature(feature).kind == FeatureKind::Categorical) {
        FeatureSplit split = best_categorical_split(stats, std::get<CategoricalObserver>(obs));
        // Penalty arity is the full dictionary size: sparse value cells make
        // the observed-arity bias estimate far too optimistic.
        if (split.branches >= 2) split.branches = schema.feature(feature).cardinality;
        return split;
    }
    return best_numeric_split(std::get<NumericObserver>(obs));
}

}  // namespace

double hoeffding_bound(double range, double delta, std::uint64_t n) {
    if (!(range > 0.0)) throw std::invalid_argument("hoeffding_bound: range must be positive");
    if (!(delta > 0.0) || !(delta < 1.0)) {
        throw std::invalid_argument("hoeffding_bound: delta must lie in (0,1)");
    }
    if (n < 1) throw std::invalid_argument("hoeffding_bound: n must be >= 1");
    return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * static_cast<double>(n)));
}

void LeafStats::absorb(const Schema& schema, const Sample& labeled) {
    if (!labeled.label) throw std::invalid_argument("absorb: sample carries no label");
    const std::size_t cls = is_positive(*labeled.label) ? 1 : 0;
    ++class_counts[cls];
    if (observers.empty()) {
        observers.reserve(schema.feature_count());
        for (const FeatureSpec& spec : schema.features()) {
            if (spec.kind == FeatureKind::Categorical) {
                observers.emplace_back(CategoricalObserver{});
            } else {
                observers.emplace_back(NumericObserver{});
            }
        }
    }
    for (std::size_t f = 0; f < schema.feature_count(); ++f) {
        const FeatureValue& v = labeled.values.at(f);
        if (v.kind() == FeatureKind::Categorical) {
            std::get<CategoricalObserver>(observers[f]).counts[v.index()][cls] += 1;
        } else {
            std::get<NumericObserver>(observers[f]).per_class[cls].add(v.number());
        }
    }
}

double split_gain(const LeafStats& stats, const Schema& schema, std::size_t feature) {
    return best_feature_split(stats, schema, feature).gain;
}

SplitDecision try_split(LeafStats& stats, const Schema& schema, const TreeParams& params) {
    stats.seen_since_check = 0;

    SplitDecision decision;
    const std::uint64_t n = stats.labeled_total();
    if (n == 0) return decision;  // NoSplit

    // Rank candidates by bias-adjusted gain so high-arity tests compete on
    // real signal rather than small-sample noise. The no-split option scores 0.
    double best_gain = 0.0;
    double second_gain = 0.0;
    std::size_t best_feature = 0;
    FeatureSplit best_split;
    for (std::size_t f = 0; f < schema.feature_count(); ++f) {
        FeatureSplit split = best_feature_split(stats, schema, f);
        if (split.branches >= 2) {
            split.gain = std::max(0.0, split.gain - gain_bias(split.branches, n));
        }
        if (split.gain > best_gain) {
            second_gain = best_gain;
            best_gain = split.gain;
            best_feature = f;
            best_split = split;
        } else if (split.gain > second_gain) {
            second_gain = split.gain;
        }
    }
    if (best_gain <= 0.0) return decision;  // NoSplit

    const double eps = hoeffding_bound(1.0, params.split_confidence, n);
    const double diff = best_gain - second_gain;
    if (diff > eps || eps < params.tie_threshold) {
        decision.outcome = SplitDecision::Outcome::Split;
        decision.test = SplitTest{best_feature, best_split.numeric, best_split.threshold};
    } else {
        decision.outcome = SplitDecision::Outcome::Ambiguous;
        decision.gap = eps - diff;
    }
    return decision;
}

TreeModel::TreeModel(const Schema& schema, TreeParams params)
    : schema_(&schema), params_(params), root_(std::make_unique<Node>()) {
    root_->stats = std::make_unique<LeafStats>();
}

TreeModel::Node* TreeModel::route(const Sample& sample) const {
    Node* node = root_.get();
    while (!node->is_leaf()) {
        const FeatureValue& v = sample.values.at(node->feature);
        if (node->numeric_split) {
            node = v.number() <= node->threshold ? node->children[0].get()
                                                 : node->children[1].get();
        } else {
            const std::uint32_t idx = v.index();
            if (idx >= node->children.size()) {
                throw std::out_of_range("sample value outside split arity");
            }
            node = node->children[idx].get();
        }
    }
    return node;
}

std::pair<BinaryLabel, double> TreeModel::classify(const Sample& sample) const {
    const Node* node = root_.get();
    std::array<std::uint64_t, 2> prior{0, 0};
    while (!node->is_leaf()) {
        if (node->frozen_counts[0] + node->frozen_counts[1] > 0) prior = node->frozen_counts;
        const FeatureValue& v = sample.values.at(node->feature);
        if (node->numeric_split) {
            node = v.number() <= node->threshold ? node->children[0].get()
                                                 : node->children[1].get();
        } else {
            const std::uint32_t idx = v.index();
            if (idx >= node->children.size()) {
                throw std::out_of_range("sample value outside split arity");
            }
            node = node->children[idx].get();
        }
    }
    std::array<std::uint64_t, 2> counts = node->stats->class_counts;
    if (counts[0] + counts[1] == 0) counts = prior;
    const std::uint64_t total = counts[0] + counts[1];
    if (total == 0) return {BinaryLabel::OnSchedule, 0.5};
    if (counts[1] > counts[0]) {
        return {BinaryLabel::Delayed, static_cast<double>(counts[1]) / static_cast<double>(total)};
    }
    return {BinaryLabel::OnSchedule, static_cast<double>(counts[0]) / static_cast<double>(total)};
}

void TreeModel::perform_split(Node& node, const SplitTest& test) {
    node.frozen_counts = node.stats->class_counts;
    node.feature = static_cast<std::uint16_t>(test.feature);
    node.numeric_split = test.numeric;
    node.threshold = test.threshold;
    const std::size_t n_children =
        test.numeric ? 2 : schema_->feature(test.feature).cardinality;
    node.children.clear();
    node.children.reserve(n_children);
    for (std::size_t i = 0; i < n_children; ++i) {
        auto child = std::make_unique<Node>();
        child->stats = std::make_unique<LeafStats>();
        node.children.push_back(std::move(child));
    }
    node.stats.reset();  // buffered samples are not replayed into children
    node_count_ += n_children;
    leaf_count_ += n_children - 1;
}

ObserveEvent TreeModel::check_leaf(Node& node, LabelOracle* oracle, Budget* budget) {
    ObserveEvent event;
    const bool unexplored = node.stats->labeled_total() == 0;
    const SplitDecision decision = try_split(*node.stats, *schema_, params_);
    if (decision.outcome == SplitDecision::Outcome::Split) {
        perform_split(node, decision.test);
        event.split_performed = true;
        return event;
    }
    if (oracle == nullptr) return event;  // seed phase treats Ambiguous as NoSplit
    // A leaf with no labeled samples yet cannot score any split; its split
    // uncertainty is maximal, so it qualifies for label requests just like
    // an ambiguous check.
    if (decision.outcome != SplitDecision::Outcome::Ambiguous && !unexplored) {
        return event;
    }
    if (budget->remaining() == 0) {
        event.budget_starved = true;
        return event;
    }
    auto& buffer = node.stats->unlabeled_buffer;
    const std::size_t n_req =
        std::min<std::size_t>(buffer.size(), static_cast<std::size_t>(budget->remaining()));
    if (n_req == 0) return event;
    for (std::size_t i = 0; i < n_req; ++i) {
        Sample s = std::move(buffer[i]);
        s.label = oracle->request_label(s);
        node.stats->absorb(*schema_, s);
    }
    buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(n_req));
    budget->spent += n_req;
    event.requests_made = static_cast<std::uint32_t>(n_req);

    const SplitDecision second = try_split(*node.stats, *schema_, params_);
    if (second.outcome == SplitDecision::Outcome::Split) {
        perform_split(node, second.test);
        event.split_performed = true;
    }
    return event;
}

void TreeModel::train_labeled(const Sample& sample) {
    if (!sample.label) throw std::invalid_argument("train_labeled: sample carries no label");
    Node* leaf = route(sample);
    leaf->stats->absorb(*schema_, sample);
    leaf->stats->seen_since_check += 1;
    if (leaf->stats->seen_since_check >= params_.grace_period) {
        check_leaf(*leaf, nullptr, nullptr);
    }
}

void TreeModel::flush_round() {
    std::vector<Node*> stack{root_.get()};
    while (!stack.empty()) {
        Node* node = stack.back();
        stack.pop_back();
        if (node->is_leaf()) {
            node->stats->unlabeled_buffer.clear();
            node->stats->seen_since_check = 0;
        } else {
            for (auto& c : node->children) stack.push_back(c.get());
        }
    }
}

ObserveEvent TreeModel::observe(const Sample& sample, LabelOracle& oracle, Budget& budget) {
    if (sample.label) throw std::invalid_argument("observe: sample must arrive unlabeled");
    Node* leaf = route(sample);
    auto& buffer = leaf->stats->unlabeled_buffer;
    if (buffer.size() >= params_.grace_period) {
        buffer.erase(buffer.begin());  // FIFO eviction
    }
    buffer.push_back(sample);
    leaf->stats->seen_since_check += 1;
    if (leaf->stats->seen_since_check >= params_.grace_period) {
        return check_leaf(*leaf, &oracle, &budget);
    }
    return {};
}

namespace {

constexpr std::uint32_t kTreeMagic = 0x54464146;  // "FAFT" little-endian
constexpr std::uint16_t kTreeVersion = 1;

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

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

void put_f64(std::vector<std::uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() {
        auto b = take(2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
        return v;
    }
    std::uint64_t u64() {
        auto b = take(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }

    std::size_t offset() const { return pos_; }
    std::size_t size() const { return bytes_.size(); }

private:
    std::span<const std::uint8_t> take(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw DecodeError("truncated tree bytes");
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> TreeModel::serialize() const {
    std::vector<std::uint8_t> out;
    put_u32(out, kTreeMagic);
    put_u16(out, kTreeVersion);
    put_u16(out, 0);  // reserved
    const std::size_t length_pos = out.size();
    put_u64(out, 0);  // payload length, patched below
    put_u32(out, params_.grace_period);
    put_f64(out, params_.split_confidence);
    put_f64(out, params_.tie_threshold);
    put_u32(out, static_cast<std::uint32_t>(schema_->feature_count()));
    put_u64(out, node_count_);

    // Preorder node list.
    std::vector<const Node*> stack{root_.get()};
    while (!stack.empty()) {
        const Node* node = stack.back();
        stack.pop_back();
        if (node->is_leaf()) {
            put_u8(out, 0);
            put_u64(out, node->stats->class_counts[0]);
            put_u64(out, node->stats->class_counts[1]);
        } else {
            put_u8(out, node->numeric_split ? 1 : 2);
            put_u64(out, node->frozen_counts[0]);
            put_u64(out, node->frozen_counts[1]);
            put_u16(out, node->feature);
            if (node->numeric_split) {
                put_f64(out, node->threshold);
            } else {
                put_u32(out, static_cast<std::uint32_t>(node->children.size()));
            }
            for (auto it = node->children.rbegin(); it != node->children.rend(); ++it) {
                stack.push_back(it->get());
            }
        }
    }

    const std::uint64_t payload = out.size() - length_pos - 8;
    for (int i = 0; i < 8; ++i) {
        out[length_pos + static_cast<std::size_t>(i)] =
            static_cast<std::uint8_t>(payload >> (8 * i));
    }
    return out;
}

TreeModel TreeModel::deserialize(std::span<const std::uint8_t> bytes, const Schema& schema) {
    ByteReader r(bytes);
    if (r.u32() != kTreeMagic) throw DecodeError("bad tree magic");
    if (r.u16() != kTreeVersion) throw DecodeError("unsupported tree version");
    r.u16();  // reserved
    const std::uint64_t payload = r.u64();
    const std::size_t payload_start = r.offset();
    if (payload_start + payload != bytes.size()) {
        throw DecodeError("tree payload length mismatch");
    }

    TreeParams params;
    params.grace_period = r.u32();
    params.split_confidence = r.f64();
    params.tie_threshold = r.f64();
    if (r.u32() != schema.feature_count()) {
        throw DecodeError("tree feature count does not match schema");
    }
    const std::uint64_t node_count = r.u64();

    TreeModel tree(schema, params);
    std::size_t read_nodes = 0;

    // Recursive preorder read mirroring serialize().
    auto read_node = [&](auto&& self) -> std::unique_ptr<Node> {
        if (++read_nodes > node_count) throw DecodeError("tree node count mismatch");
        auto node = std::make_unique<Node>();
        const std::uint8_t type = r.u8();
        const std::uint64_t neg = r.u64();
        const std::uint64_t pos = r.u64();
        if (type == 0) {
            node->stats = std::make_unique<LeafStats>();
            node->stats->class_counts = {neg, pos};
            return node;
        }
        if (type != 1 && type != 2) throw DecodeError("unknown tree node type");
        node->frozen_counts = {neg, pos};
        node->feature = r.u16();
        if (node->feature >= schema.feature_count()) throw DecodeError("node feature out of range");
        std::size_t n_children = 0;
        if (type == 1) {
            node->numeric_split = true;
            node->threshold = r.f64();
            n_children = 2;
        } else {
            node->numeric_split = false;
            n_children = r.u32();
            if (n_children < 2) throw DecodeError("categorical split with fewer than 2 children");
        }
        node->children.reserve(n_children);
        for (std::size_t i = 0; i < n_children; ++i) {
            node->children.push_back(self(self));
        }
        return node;
    };

    tree.root_ = read_node(read_node);
    if (read_nodes != node_count) throw DecodeError("tree node count mismatch");
    if (r.offset() != bytes.size()) throw DecodeError("trailing bytes after tree payload");

    tree.node_count_ = read_nodes;
    std::size_t leaves = 0;
    std::vector<const Node*> stack{tree.root_.get()};
    while (!stack.empty()) {
        const Node* n = stack.back();
        stack.pop_back();
        if (n->is_leaf()) {
            ++leaves;
        } else {
            for (const auto& c : n->children) stack.push_back(c.get());
        }
    }
    tree.leaf_count_ = leaves;
    return tree;
}

}  // namespace fedaf
