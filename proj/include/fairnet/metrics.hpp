#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fairnet {

struct FMeasure {
    double f = 0.0;
    double threshold = 0.0;
};

// Maximum F1 over thresholds {0, 1} plus every distinct prediction; a sample
// is called positive when prediction >= threshold. Ties in F go to the lower
// threshold. Requires at least one positive.
FMeasure max_f_measure(std::span<const double> predictions, std::span<const double> targets);

// Mann-Whitney AUC: P(score of a random positive > score of a random
// negative), ties counted as 1/2. Requires both classes.
double roc_auc(std::span<const double> predictions, std::span<const double> targets);

// Equal-width bins on [0,1]: sum_b (n_b / N) * |positive_fraction_b - mean_prediction_b|.
double ece(std::span<const double> predictions, std::span<const double> targets, std::size_t bins = 10);

// 100 * misclassified / N with positive iff prediction >= threshold.
double classification_error_pct(std::span<const double> predictions, std::span<const double> targets,
                                double threshold = 0.5);

struct ReliabilityBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
    double mean_prediction = 0.0;    // NaN when count == 0
    double positive_fraction = 0.0;  // NaN when count == 0
};

struct ReliabilityTable {
    std::size_t bins = 0;
    std::vector<ReliabilityBin> rows;  // one per bin, empty bins included

    std::size_t total() const noexcept;
    std::size_t occupied() const noexcept;
    // ECE recomputed from the table rows.
    double expected_calibration_error() const;
};

ReliabilityTable reliability_table(std::span<const double> predictions, std::span<const double> targets,
                                   std::size_t bins = 20);

struct GroupReport {
    std::string group;
    std::size_t n = 0;
    std::size_t positives = 0;
    double f_measure_max = 0.0;  // NaN when undefined for the group
    double f_threshold = 0.0;
    double roc_auc = 0.0;
    double ece = 0.0;
    double classification_error_pct = 0.0;
    double ir = 0.0;
    ReliabilityTable reliability;
};

// All metrics for one group; metrics that need both classes are NaN when the
// group has only one.
GroupReport group_report(std::string group, std::span<const double> predictions, std::span<const double> targets,
                         std::size_t ece_bins = 10, std::size_t diagram_bins = 20);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

struct DisparitySummary {
    std::size_t groups = 0;
    MeanStd f_measure;
    MeanStd roc_auc;
    MeanStd ece;
    MeanStd classification_error_pct;
};

// Across-group mean and population standard deviation per metric.
DisparitySummary disparity_summary(std::span<const GroupReport> reports);

}  // namespace fairnet
