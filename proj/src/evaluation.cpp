#include "fedaf/evaluation.hpp"

namespace fedaf {

MetricValues metrics(const ConfusionMatrix& m) {
    MetricValues v;
    const double tp = static_cast<double>(m.tp);
    const double fp = static_cast<double>(m.fp);
    const double tn = static_cast<double>(m.tn);
    const double fn = static_cast<double>(m.fn);
    const double total = tp + fp + tn + fn;
    if (total > 0.0) v.accuracy = (tp + tn) / total;
    if (tp + fp > 0.0) v.precision = tp / (tp + fp);
    if (tp + fn > 0.0) v.recall = tp / (tp + fn);
    if (v.precision + v.recall > 0.0) {
        v.f_score = 2.0 * v.precision * v.recall / (v.precision + v.recall);
    }
    return v;
}

std::vector<MetricValues> cross_validate(std::span<const MetricValues> fold_a,
                                         std::span<const MetricValues> fold_b) {
    if (fold_a.size() != fold_b.size()) {
        throw std::invalid_argument("cross_validate: fold series lengths differ");
    }
    std::vector<MetricValues> out;
    out.reserve(fold_a.size());
    for (std::size_t i = 0; i < fold_a.size(); ++i) {
        MetricValues v;
        v.accuracy = 0.5 * (fold_a[i].accuracy + fold_b[i].accuracy);
        v.precision = 0.5 * (fold_a[i].precision + fold_b[i].precision);
        v.recall = 0.5 * (fold_a[i].recall + fold_b[i].recall);
        v.f_score = 0.5 * (fold_a[i].f_score + fold_b[i].f_score);
        out.push_back(v);
    }
    return out;
}

double mean_over_clients(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean_over_clients: no client values");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

}  // namespace fedaf
