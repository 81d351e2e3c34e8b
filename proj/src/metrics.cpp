#include "funcgraph/metrics.hpp"

#include <cmath>

namespace funcgraph::expt {

namespace {

struct ClassCounts {
    std::vector<long> tp, fp, fn, support;
    long correct = 0;
    long total = 0;
};

ClassCounts count_classes(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                          std::size_t n_classes) {
    if (y_true.size() != y_pred.size()) throw ShapeError("metrics: label vectors differ in length");
    if (y_true.empty()) throw ShapeError("metrics: empty label vectors");
    ClassCounts c;
    c.tp.assign(n_classes, 0);
    c.fp.assign(n_classes, 0);
    c.fn.assign(n_classes, 0);
    c.support.assign(n_classes, 0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i], p = y_pred[i];
        if (t < 0 || std::size_t(t) >= n_classes || p < 0 || std::size_t(p) >= n_classes) {
            throw LabelError("metrics: label out of range");
        }
        ++c.support[t];
        ++c.total;
        if (t == p) {
            ++c.tp[t];
            ++c.correct;
        } else {
            ++c.fp[p];
            ++c.fn[t];
        }
    }
    return c;
}

Prf prf_from(double tp, double fp, double fn) {
    Prf out;
    out.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    out.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    out.f1 = out.precision + out.recall > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

} // namespace

Prf metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
            std::size_t n_classes, Averaging averaging) {
    const ClassCounts c = count_classes(y_true, y_pred, n_classes);

    if (averaging == Averaging::Micro) {
        long tp = 0, fp = 0, fn = 0;
        for (std::size_t k = 0; k < n_classes; ++k) {
            tp += c.tp[k];
            fp += c.fp[k];
            fn += c.fn[k];
        }
        return prf_from(double(tp), double(fp), double(fn));
    }

    // Per-class scores over classes present in the ground truth.
    Prf out;
    double weight_sum = 0.0;
    for (std::size_t k = 0; k < n_classes; ++k) {
        if (c.support[k] == 0) continue;
        const Prf pk = prf_from(double(c.tp[k]), double(c.fp[k]), double(c.fn[k]));
        const double w = averaging == Averaging::Macro ? 1.0 : double(c.support[k]);
        out.precision += w * pk.precision;
        out.recall += w * pk.recall;
        out.f1 += w * pk.f1;
        weight_sum += w;
    }
    if (weight_sum > 0.0) {
        out.precision /= weight_sum;
        out.recall /= weight_sum;
        out.f1 /= weight_sum;
    }
    return out;
}

void ConfusionMatrix::add(int truth, int pred) {
    if (truth < 0 || std::size_t(truth) >= n_classes || pred < 0 ||
        std::size_t(pred) >= n_classes) {
        throw LabelError("confusion: label out of range");
    }
    ++counts[std::size_t(truth) * n_classes + std::size_t(pred)];
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.n_classes != n_classes) throw ShapeError("confusion: merging different sizes");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

long ConfusionMatrix::total() const {
    long t = 0;
    for (long c : counts) t += c;
    return t;
}

long ConfusionMatrix::diagonal() const {
    long d = 0;
    for (std::size_t k = 0; k < n_classes; ++k) d += counts[k * n_classes + k];
    return d;
}

double ConfusionMatrix::accuracy() const {
    const long t = total();
    return t > 0 ? double(diagonal()) / double(t) : 0.0;
}

std::vector<double> ConfusionMatrix::row_normalized() const {
    std::vector<double> out(counts.size(), 0.0);
    for (std::size_t r = 0; r < n_classes; ++r) {
        long row_sum = 0;
        for (std::size_t c = 0; c < n_classes; ++c) row_sum += counts[r * n_classes + c];
        if (row_sum == 0) continue;
        for (std::size_t c = 0; c < n_classes; ++c) {
            out[r * n_classes + c] = double(counts[r * n_classes + c]) / double(row_sum);
        }
    }
    return out;
}

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                          std::size_t n_classes) {
    if (y_true.size() != y_pred.size()) throw ShapeError("confusion: label vectors differ");
    ConfusionMatrix m(n_classes);
    for (std::size_t i = 0; i < y_true.size(); ++i) m.add(y_true[i], y_pred[i]);
    return m;
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= double(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.stddev = std::sqrt(ss / double(values.size() - 1));
    }
    return out;
}

} // namespace funcgraph::expt
