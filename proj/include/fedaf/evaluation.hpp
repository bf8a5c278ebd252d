#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "fedaf/datastream.hpp"

namespace fedaf {

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
};

struct MetricValues {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
};

// scope: client_id >= 0 is a client tree; -1 is the ensemble.
struct MetricsReport {
    MetricValues values;
    ConfusionMatrix matrix;
    int client_id = -1;
    std::size_t round = 0;
};

// accuracy = (TP+TN)/(TP+TN+FP+FN), precision = TP/(TP+FP),
// recall = TP/(TP+FN), F = 2pr/(p+r). Zero denominators yield 0.
MetricValues metrics(const ConfusionMatrix& m);

// Counts predictions against ground truth; positives are delayed flights.
// Throws on an empty or unlabeled test set.
template <class Predict>
ConfusionMatrix evaluate(Predict&& predict, std::span<const Sample> test_set) {
    if (test_set.empty()) throw std::invalid_argument("evaluate: empty test set");
    ConfusionMatrix m;
    for (const Sample& s : test_set) {
        if (!s.label) throw std::invalid_argument("evaluate: unlabeled test sample");
        const bool truth = is_positive(*s.label);
        const bool pred = is_positive(predict(s));
        if (pred && truth)
            ++m.tp;
        else if (pred && !truth)
            ++m.fp;
        else if (!pred && truth)
            ++m.fn;
        else
            ++m.tn;
    }
    return m;
}

// Per-round arithmetic mean of the two fold runs.
std::vector<MetricValues> cross_validate(std::span<const MetricValues> fold_a,
                                         std::span<const MetricValues> fold_b);

// Unweighted mean over clients of one metric.
double mean_over_clients(std::span<const double> values);

}  // namespace fedaf
