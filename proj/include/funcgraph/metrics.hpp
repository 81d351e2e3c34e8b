#pragma once

#include <cstddef>
#include <vector>

#include "funcgraph/errors.hpp"

namespace funcgraph::expt {

enum class Averaging { Micro, Macro, Weighted };

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Precision/recall/F1 from per-class true/false positive counts.
/// Micro pools the counts globally (equal to accuracy for single-label
/// problems); macro averages per-class scores over the classes present in
/// y_true; weighted averages them by true-class frequency.
Prf metrics(const std::vector<int>& y_true, const std::vector<int>& y_pred,
            std::size_t n_classes, Averaging averaging);

struct ConfusionMatrix {
    std::size_t n_classes = 0;
    std::vector<long> counts; // row-major, rows = ground truth, cols = predictions

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t c) : n_classes(c), counts(c * c, 0) {}

    void add(int truth, int pred);
    void merge(const ConfusionMatrix& other);
    long at(std::size_t truth, std::size_t pred) const { return counts[truth * n_classes + pred]; }
    long total() const;
    long diagonal() const;
    double accuracy() const;
    /// Rows divided by their sums; all-zero rows stay zero.
    std::vector<double> row_normalized() const;
};

ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                          std::size_t n_classes);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0; // sample std; 0 for a single value
};

MeanStd mean_std(const std::vector<double>& values);

} // namespace funcgraph::expt
