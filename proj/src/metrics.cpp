#include "fairnet/metrics.hpp"

#include "fairnet/errors.hpp"
#include "fairnet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fairnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_lengths(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) throw InvalidArgument("predictions and targets differ in length");
}

std::vector<std::size_t> descending_order(std::span<const double> predictions) {
    std::vector<std::size_t> order(predictions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return predictions[a] > predictions[b]; });
    return order;
}

}  // namespace

FMeasure max_f_measure(std::span<const double> predictions, std::span<const double> targets) {
    check_lengths(predictions, targets);
    double positives = 0.0;
    for (double t : targets) positives += t > 0.5 ? 1.0 : 0.0;
    if (positives == 0.0) throw DegenerateStratum("F-measure undefined without positive samples");

    auto f_of = [&](double tp, double fp) {
        const double fn = positives - tp;
        return tp == 0.0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    };

    const auto order = descending_order(predictions);
    // Threshold 1: only predictions >= 1 are called positive.
    double tp = 0.0, fp = 0.0;
    std::size_t k = 0;
    while (k < order.size() && predictions[order[k]] >= 1.0) {
        (targets[order[k]] > 0.5 ? tp : fp) += 1.0;
        ++k;
    }
    FMeasure best{f_of(tp, fp), 1.0};
    // Sweep distinct predictions from high to low; >= keeps the lower threshold on ties.
    while (k < order.size()) {
        const double threshold = predictions[order[k]];
        while (k < order.size() && predictions[order[k]] == threshold) {
            (targets[order[k]] > 0.5 ? tp : fp) += 1.0;
            ++k;
        }
        const double f = f_of(tp, fp);
        if (f >= best.f) best = {f, threshold};
    }
    // Threshold 0 calls everything positive.
    const double all = f_of(positives, static_cast<double>(predictions.size()) - positives);
    if (all >= best.f && best.threshold > 0.0) best = {all, 0.0};
    return best;
}

double roc_auc(std::span<const double> predictions, std::span<const double> targets) {
    check_lengths(predictions, targets);
    const std::size_t n = predictions.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return predictions[a] < predictions[b]; });

    double pos = 0.0, rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && predictions[order[j]] == predictions[order[i]]) ++j;
        // average of ranks i+1 .. j
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (targets[order[k]] > 0.5) {
                rank_sum += avg_rank;
                pos += 1.0;
            }
        }
        i = j;
    }
    const double neg = static_cast<double>(n) - pos;
    if (pos == 0.0 || neg == 0.0) throw DegenerateStratum("ROC AUC needs both classes");
    const double u = rank_sum - pos * (pos + 1.0) / 2.0;
    return u / (pos * neg);
}

ReliabilityTable reliability_table(std::span<const double> predictions, std::span<const double> targets,
                                   std::size_t bins) {
    check_lengths(predictions, targets);
    if (bins < 1) throw InvalidArgument("bin count must be positive");
    ReliabilityTable table;
    table.bins = bins;
    table.rows.resize(bins);
    std::vector<double> pred_sum(bins, 0.0), pos(bins, 0.0);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto b = bin_of(predictions[i], bins);
        ++table.rows[b].count;
        pred_sum[b] += predictions[i];
        pos[b] += targets[i] > 0.5 ? 1.0 : 0.0;
    }
    for (std::size_t b = 0; b < bins; ++b) {
        auto& row = table.rows[b];
        row.lower = static_cast<double>(b) / static_cast<double>(bins);
        row.upper = static_cast<double>(b + 1) / static_cast<double>(bins);
        if (row.count == 0) {
            row.mean_prediction = kNaN;
            row.positive_fraction = kNaN;
        } else {
            row.mean_prediction = pred_sum[b] / static_cast<double>(row.count);
            row.positive_fraction = pos[b] / static_cast<double>(row.count);
        }
    }
    return table;
}

std::size_t ReliabilityTable::total() const noexcept {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.count;
    return n;
}

std::size_t ReliabilityTable::occupied() const noexcept {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.count > 0; }));
}

double ReliabilityTable::expected_calibration_error() const {
    const auto n = total();
    if (n == 0) throw DegenerateStratum("ECE of zero samples");
    double acc = 0.0;
    for (const auto& r : rows) {
        if (r.count == 0) continue;
        acc += (static_cast<double>(r.count) / static_cast<double>(n)) * std::abs(r.positive_fraction - r.mean_prediction);
    }
    return acc;
}

double ece(std::span<const double> predictions, std::span<const double> targets, std::size_t bins) {
    if (predictions.empty()) throw DegenerateStratum("ECE of zero samples");
    return reliability_table(predictions, targets, bins).expected_calibration_error();
}

double classification_error_pct(std::span<const double> predictions, std::span<const double> targets,
                                double threshold) {
    check_lengths(predictions, targets);
    if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("threshold must lie in (0, 1)");
    if (predictions.empty()) return 0.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool called = predictions[i] >= threshold;
        const bool actual = targets[i] > 0.5;
        wrong += called != actual ? 1 : 0;
    }
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(predictions.size());
}

GroupReport group_report(std::string group, std::span<const double> predictions, std::span<const double> targets,
                         std::size_t ece_bins, std::size_t diagram_bins) {
    check_lengths(predictions, targets);
    if (predictions.empty()) throw DegenerateStratum("no samples for group " + group);
    GroupReport r;
    r.group = std::move(group);
    r.n = predictions.size();
    for (double t : targets) r.positives += t > 0.5 ? 1 : 0;
    const bool both = r.positives > 0 && r.positives < r.n;
    if (r.positives > 0) {
        const auto f = max_f_measure(predictions, targets);
        r.f_measure_max = f.f;
        r.f_threshold = f.threshold;
    } else {
        r.f_measure_max = r.f_threshold = kNaN;
    }
    r.roc_auc = both ? roc_auc(predictions, targets) : kNaN;
    r.ir = both ? static_cast<double>(r.n - r.positives) / static_cast<double>(r.positives) : kNaN;
    r.ece = ece(predictions, targets, ece_bins);
    r.classification_error_pct = classification_error_pct(predictions, targets, 0.5);
    r.reliability = reliability_table(predictions, targets, diagram_bins);
    return r;
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) return {kNaN, kNaN};
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

DisparitySummary disparity_summary(std::span<const GroupReport> reports) {
    if (reports.size() < 2) throw InvalidArgument("disparity needs at least two groups");
    std::vector<double> f, auc, e, err;
    for (const auto& r : reports) {
        f.push_back(r.f_measure_max);
        auc.push_back(r.roc_auc);
        e.push_back(r.ece);
        err.push_back(r.classification_error_pct);
    }
    return {reports.size(), mean_std(f), mean_std(auc), mean_std(e), mean_std(err)};
}

}  // namespace fairnet
