#include "hqfnn/metrics.hpp"

#include <sstream>
#include <stdexcept>

namespace hqfnn {

ConfusionMatrix ConfusionMatrix::zero(int k) {
    if (k < 2) throw std::invalid_argument("confusion matrix needs at least two classes");
    ConfusionMatrix cm;
    cm.k = k;
    cm.counts.assign(static_cast<std::size_t>(k) * k, 0);
    return cm;
}

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (long long c : counts) t += c;
    return t;
}

void accumulate(ConfusionMatrix& cm, int true_label, int predicted_label) {
    if (true_label < 0 || true_label >= cm.k || predicted_label < 0 || predicted_label >= cm.k) {
        throw std::invalid_argument("confusion label out of range");
    }
    ++cm.counts[static_cast<std::size_t>(true_label) * cm.k + predicted_label];
}

ConfusionMatrix merge(const ConfusionMatrix& a, const ConfusionMatrix& b) {
    if (a.k != b.k) throw std::invalid_argument("cannot merge matrices of different sizes");
    ConfusionMatrix out = a;
    for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] += b.counts[i];
    return out;
}

BinaryMetrics binary_metrics(const ConfusionMatrix& cm, int cls) {
    if (cls < 0 || cls >= cm.k) throw std::invalid_argument("class index out of range");
    long long tp = cm.at(cls, cls), fp = 0, fn = 0;
    for (int other = 0; other < cm.k; ++other) {
        if (other == cls) continue;
        fp += cm.at(other, cls);
        fn += cm.at(cls, other);
    }
    BinaryMetrics m;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    return m;
}

MetricBundle macro_metrics(const ConfusionMatrix& cm) {
    const long long n = cm.total();
    if (n <= 0) throw std::invalid_argument("metrics of an empty confusion matrix");

    long long trace = 0;
    double psum = 0.0, rsum = 0.0;
    for (int c = 0; c < cm.k; ++c) {
        trace += cm.at(c, c);
        const BinaryMetrics bm = binary_metrics(cm, c);
        psum += bm.precision;
        rsum += bm.recall;
    }

    MetricBundle out;
    out.n_samples = static_cast<std::size_t>(n);
    out.accuracy = static_cast<double>(trace) / static_cast<double>(n);
    out.macro_precision = psum / cm.k;
    out.macro_recall = rsum / cm.k;
    const double pr = out.macro_precision + out.macro_recall;
    out.macro_f1 = pr > 0.0 ? 2.0 * out.macro_precision * out.macro_recall / pr : 0.0;
    return out;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::ostringstream os;
    for (int p = 0; p < cm.k; ++p) {
        if (p > 0) os << ',';
        os << "pred_" << p;
    }
    os << '\n';
    for (int t = 0; t < cm.k; ++t) {
        for (int p = 0; p < cm.k; ++p) {
            if (p > 0) os << ',';
            os << cm.at(t, p);
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace hqfnn
