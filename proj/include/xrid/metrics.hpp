// Identification metrics: per-class accuracy, unweighted (macro) average,
// and the minimum per-class accuracy used for model selection.
#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "xrid/error.hpp"
#include "xrid/identify.hpp"

namespace xrid {

struct MetricSet {
    double macro_accuracy = 0.0;
    double min_accuracy = 0.0;
    std::vector<double> per_class_accuracy; // -1 for classes with no results
    std::vector<int> excluded_classes;      // classes with zero segments
};

struct LabeledVote {
    int true_label = -1;
    VoteResult vote;
};

inline MetricSet compute_metrics(const std::vector<LabeledVote>& results, int class_count) {
    if (class_count < 1) throw ParameterError("class count must be >= 1");
    std::vector<std::size_t> total(static_cast<std::size_t>(class_count), 0);
    std::vector<std::size_t> correct(static_cast<std::size_t>(class_count), 0);
    for (const LabeledVote& r : results) {
        if (r.true_label < 0 || r.true_label >= class_count) {
            throw LabelError("true label " + std::to_string(r.true_label) + " out of range");
        }
        ++total[static_cast<std::size_t>(r.true_label)];
        if (r.vote.predicted == r.true_label) ++correct[static_cast<std::size_t>(r.true_label)];
    }

    MetricSet metrics;
    metrics.per_class_accuracy.assign(static_cast<std::size_t>(class_count), -1.0);
    double sum = 0.0;
    double min_acc = 1.0;
    int seen = 0;
    for (int c = 0; c < class_count; ++c) {
        if (total[static_cast<std::size_t>(c)] == 0) {
            metrics.excluded_classes.push_back(c);
            continue;
        }
        const double acc = static_cast<double>(correct[static_cast<std::size_t>(c)]) /
                           static_cast<double>(total[static_cast<std::size_t>(c)]);
        metrics.per_class_accuracy[static_cast<std::size_t>(c)] = acc;
        sum += acc;
        min_acc = std::min(min_acc, acc);
        ++seen;
    }
    if (seen == 0) throw ParameterError("no class has any labeled result");
    metrics.macro_accuracy = sum / static_cast<double>(seen);
    metrics.min_accuracy = min_acc;
    return metrics;
}

} // namespace xrid
