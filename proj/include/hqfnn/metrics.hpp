#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hqfnn {

/// k x k count grid; rows are true classes, columns are predicted classes.
struct ConfusionMatrix {
    int k = 0;
    std::vector<long long> counts;

    static ConfusionMatrix zero(int k);

    long long at(int true_label, int predicted) const {
        return counts[static_cast<std::size_t>(true_label) * k + predicted];
    }
    long long total() const;
};

void accumulate(ConfusionMatrix& cm, int true_label, int predicted_label);

/// Elementwise sum, for combining evaluation shards.
ConfusionMatrix merge(const ConfusionMatrix& a, const ConfusionMatrix& b);

/// One-vs-rest precision/recall for a single class; 0 on a zero denominator.
struct BinaryMetrics {
    double precision = 0.0;
    double recall = 0.0;
};
BinaryMetrics binary_metrics(const ConfusionMatrix& cm, int cls);

/// accuracy = trace/total; macros are uniform means over classes; macro F1 is
/// the harmonic mean of the two macro averages (not a mean of per-class F1s).
struct MetricBundle {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::size_t n_samples = 0;
};
MetricBundle macro_metrics(const ConfusionMatrix& cm);

/// Header row of predicted-class names, then one count row per true class.
std::string confusion_csv(const ConfusionMatrix& cm);

}  // namespace hqfnn
