#include "fairnet/losses.hpp"

#include "fairnet/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fairnet {

ClassWeights ClassWeights::from_counts(std::string group, std::uint64_t positives, std::uint64_t negatives) {
    if (positives == 0 || negatives == 0)
        throw DegenerateStratum("group '" + group + "' lacks one class (" + std::to_string(positives) +
                                " positives, " + std::to_string(negatives) +
                                " negatives); drop or merge it explicitly");
    ClassWeights w;
    w.group = std::move(group);
    w.positives = positives;
    w.negatives = negatives;
    w.total = positives + negatives;
    const double n = static_cast<double>(w.total);
    w.w_pos = n / (2.0 * static_cast<double>(positives));
    w.w_neg = n / (2.0 * static_cast<double>(negatives));
    return w;
}

ClassWeights ClassWeights::from_targets(std::string group, std::span<const double> targets) {
    std::uint64_t pos = 0;
    for (double t : targets) pos += t > 0.5 ? 1 : 0;
    return from_counts(std::move(group), pos, targets.size() - pos);
}

bool ClassWeights::classes_equally_weighted() const noexcept {
    // (N/2p)*p vs (N/2n)*n  <=>  N*p*2n == N*n*2p
    const unsigned __int128 lhs = static_cast<unsigned __int128>(total) * positives * (2 * negatives);
    const unsigned __int128 rhs = static_cast<unsigned __int128>(total) * negatives * (2 * positives);
    return lhs == rhs && positives + negatives == total;
}

bool ClassWeights::total_weight_preserved() const noexcept {
    // N*p/(2p) + N*n/(2n) == N  <=>  N*p*2n + N*n*2p == N*4pn
    const unsigned __int128 p = positives, n = negatives, N = total;
    return N * p * (2 * n) + N * n * (2 * p) == N * 4 * p * n && p + n == N;
}

double LossSpec::lambda_for(std::string_view group) const {
    const auto it = lambda.find(group);
    return it == lambda.end() ? 1.0 : it->second;
}

double LossSpec::lambda_h_for(std::string_view group) const {
    const auto it = lambda_h.find(group);
    return it == lambda_h.end() ? 1.0 : it->second;
}

bool LossSpec::has_group(std::string_view group) const noexcept {
    return std::find(groups.begin(), groups.end(), group) != groups.end();
}

void LossSpec::validate() const {
    if (groups.empty()) throw InvalidArgument("loss spec lists no groups");
    if (histogram_bins < 2) throw InvalidArgument("histogram loss needs at least 2 bins");
    if (!(clamp_epsilon > 0.0 && clamp_epsilon < 0.5)) throw InvalidArgument("clamp epsilon must lie in (0, 0.5)");
    for (const auto& [g, l] : lambda)
        if (!(l >= 0.0)) throw InvalidArgument("lambda for group " + g + " must be non-negative");
    for (const auto& [g, l] : lambda_h)
        if (!(l >= 0.0)) throw InvalidArgument("histogram lambda for group " + g + " must be non-negative");
}

namespace {

void check_pair(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) throw InvalidArgument("predictions and targets differ in length");
    if (predictions.empty()) throw DegenerateStratum("loss over an empty group");
}

double bce(double y, double t, double eps) {
    const double c = std::clamp(y, eps, 1.0 - eps);
    return -(t * std::log(c) + (1.0 - t) * std::log(1.0 - c));
}

}  // namespace

double cross_entropy(std::span<const double> predictions, std::span<const double> targets, double clamp_epsilon) {
    check_pair(predictions, targets);
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) acc += bce(predictions[i], targets[i], clamp_epsilon);
    return acc / static_cast<double>(predictions.size());
}

double balanced_cross_entropy(std::span<const double> predictions, std::span<const double> targets,
                              const ClassWeights& weights, double clamp_epsilon) {
    check_pair(predictions, targets);
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        acc += weights.weight(targets[i]) * bce(predictions[i], targets[i], clamp_epsilon);
    return acc / static_cast<double>(predictions.size());
}

std::size_t bin_of(double prediction, std::size_t bins) noexcept {
    if (!(prediction > 0.0)) return 0;
    const auto b = static_cast<std::size_t>(std::floor(prediction * static_cast<double>(bins)));
    return std::min(b, bins - 1);
}

std::vector<std::size_t> bin_assignment(std::span<const double> predictions, std::size_t bins) {
    if (bins < 1) throw InvalidArgument("bin count must be positive");
    std::vector<std::size_t> out(predictions.size());
    for (std::size_t i = 0; i < predictions.size(); ++i) out[i] = bin_of(predictions[i], bins);
    return out;
}

namespace {

struct BinStats {
    std::vector<std::size_t> count;
    std::vector<double> positives;
    std::vector<double> prediction_sum;
};

BinStats bin_stats(std::span<const double> predictions, std::span<const double> targets, std::size_t bins) {
    if (bins < 2) throw InvalidArgument("histogram loss needs at least 2 bins");
    if (predictions.size() != targets.size()) throw InvalidArgument("predictions and targets differ in length");
    if (predictions.empty()) throw DegenerateStratum("histogram loss over an empty group (all bins empty)");
    BinStats s{std::vector<std::size_t>(bins, 0), std::vector<double>(bins, 0.0), std::vector<double>(bins, 0.0)};
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto b = bin_of(predictions[i], bins);
        ++s.count[b];
        s.positives[b] += targets[i] > 0.5 ? 1.0 : 0.0;
        s.prediction_sum[b] += predictions[i];
    }
    return s;
}

}  // namespace

double histogram_loss(std::span<const double> predictions, std::span<const double> targets, std::size_t bins) {
    const auto s = bin_stats(predictions, targets, bins);
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (s.count[b] == 0) continue;
        const double mid = (static_cast<double>(b) + 0.5) / static_cast<double>(bins);
        const double d = s.positives[b] / static_cast<double>(s.count[b]) - mid;
        acc += d * d;
        ++used;
    }
    return std::sqrt(acc / static_cast<double>(used));
}

double histogram_surrogate_value(std::span<const double> predictions, std::span<const double> targets,
                                 std::size_t bins) {
    const auto s = bin_stats(predictions, targets, bins);
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (s.count[b] == 0) continue;
        const double n = static_cast<double>(s.count[b]);
        const double d = s.positives[b] / n - s.prediction_sum[b] / n;
        acc += d * d;
        ++used;
    }
    return std::sqrt(acc / static_cast<double>(used));
}

namespace {

// -sum_i c_i [t_i log y_i + (1 - t_i) log(1 - y_i)] with y clamped.
ad::NodeId weighted_bce(ad::Tape& tape, ad::NodeId predictions, const ad::Vector& targets, const ad::Vector& coeff,
                        double eps) {
    const auto& y = tape.value(predictions);
    if (y.cols() != 1 || y.rows() != targets.size())
        throw InvalidArgument("predictions and targets differ in shape");
    if (targets.size() == 0) throw DegenerateStratum("loss over an empty group");
    const auto clamped = tape.clamp(predictions, eps, 1.0 - eps);
    const auto log_y = tape.log(clamped);
    const auto log_not_y = tape.log(tape.subtract(tape.constant(1.0), clamped));
    const ad::Vector not_t = ad::Vector::Ones(targets.size()) - targets;
    const auto per_sample = tape.add(tape.multiply(tape.constant(ad::Matrix(targets)), log_y),
                                     tape.multiply(tape.constant(ad::Matrix(not_t)), log_not_y));
    return tape.scale(tape.sum(tape.multiply(tape.constant(ad::Matrix(coeff)), per_sample)), -1.0);
}

}  // namespace

ad::NodeId cross_entropy(ad::Tape& tape, ad::NodeId predictions, const ad::Vector& targets, double clamp_epsilon) {
    const auto n = static_cast<double>(targets.size());
    return weighted_bce(tape, predictions, targets, ad::Vector::Constant(targets.size(), 1.0 / n), clamp_epsilon);
}

ad::NodeId balanced_cross_entropy(ad::Tape& tape, ad::NodeId predictions, const ad::Vector& targets,
                                  const ClassWeights& weights, double clamp_epsilon) {
    const auto n = static_cast<double>(targets.size());
    ad::Vector coeff(targets.size());
    for (Eigen::Index i = 0; i < targets.size(); ++i) coeff(i) = weights.weight(targets(i)) / n;
    return weighted_bce(tape, predictions, targets, coeff, clamp_epsilon);
}

ad::NodeId histogram_surrogate(ad::Tape& tape, ad::NodeId predictions, const ad::Vector& targets, std::size_t bins,
                               std::span<const std::size_t> frozen_bins) {
    if (bins < 2) throw InvalidArgument("histogram loss needs at least 2 bins");
    const auto& y = tape.value(predictions);
    if (y.cols() != 1 || y.rows() != targets.size())
        throw InvalidArgument("predictions and targets differ in shape");
    const auto n = static_cast<std::size_t>(targets.size());
    if (n == 0) throw DegenerateStratum("histogram loss over an empty group (all bins empty)");

    std::vector<std::size_t> assignment;
    if (frozen_bins.empty()) {
        assignment.resize(n);
        for (std::size_t i = 0; i < n; ++i) assignment[i] = bin_of(y(static_cast<Eigen::Index>(i), 0), bins);
    } else {
        if (frozen_bins.size() != n) throw InvalidArgument("frozen bin assignment has the wrong length");
        assignment.assign(frozen_bins.begin(), frozen_bins.end());
    }

    std::vector<std::size_t> count(bins, 0);
    std::vector<double> positives(bins, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (assignment[i] >= bins) throw InvalidArgument("bin index out of range");
        ++count[assignment[i]];
        positives[assignment[i]] += targets(static_cast<Eigen::Index>(i)) > 0.5 ? 1.0 : 0.0;
    }
    std::vector<std::size_t> slot(bins, 0);
    Eigen::Index used = 0;
    for (std::size_t b = 0; b < bins; ++b)
        if (count[b] > 0) slot[b] = static_cast<std::size_t>(used++);

    ad::Matrix averaging = ad::Matrix::Zero(used, static_cast<Eigen::Index>(n));
    ad::Matrix positive_rate(used, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto b = assignment[i];
        averaging(static_cast<Eigen::Index>(slot[b]), static_cast<Eigen::Index>(i)) =
            1.0 / static_cast<double>(count[b]);
    }
    for (std::size_t b = 0; b < bins; ++b)
        if (count[b] > 0)
            positive_rate(static_cast<Eigen::Index>(slot[b]), 0) = positives[b] / static_cast<double>(count[b]);

    const auto mean_prediction = tape.project(std::move(averaging), predictions);
    const auto gap = tape.subtract(tape.constant(std::move(positive_rate)), mean_prediction);
    return tape.sqrt(tape.mean(tape.square(gap)));
}

LossTerms total_loss(ad::Tape& tape, const Model& model, const Model::Outputs& outputs,
                     std::span<const GroupBatch> groups, const LossSpec& spec, bool include_l2,
                     const FrozenBins* frozen_bins) {
    spec.validate();
    const bool single = model.spec().branches.size() == 1;
    LossTerms terms;
    std::optional<ad::NodeId> objective;

    for (const auto& gb : groups) {
        if (!spec.has_group(gb.group)) throw InvalidArgument("group '" + gb.group + "' is not in the loss spec");
        if (gb.rows.size() != static_cast<std::size_t>(gb.targets.size()))
            throw InvalidArgument("group batch rows and targets differ in length");
        if (gb.rows.empty()) continue;

        std::size_t branch = 0;
        if (!single) {
            const auto b = model.branch_index(gb.group);
            if (!b) throw InvalidArgument("model has no branch for group '" + gb.group + "'");
            branch = *b;
        }
        const auto& nodes = outputs.branches.at(branch);
        GroupLossTerms g{gb.group, gb.rows.size()};
        std::optional<ad::NodeId> group_sum;
        auto accumulate = [&](ad::NodeId n) { group_sum = group_sum ? tape.add(*group_sum, n) : n; };

        if (nodes.y) {
            const auto y = tape.gather_rows(*nodes.y, gb.rows);
            g.xent = cross_entropy(tape, y, gb.targets, spec.clamp_epsilon);
            accumulate(*g.xent);
            if (spec.use_histogram) {
                std::span<const std::size_t> frozen;
                if (frozen_bins) {
                    const auto it = frozen_bins->find(gb.group);
                    if (it != frozen_bins->end()) frozen = it->second;
                }
                g.histogram = histogram_surrogate(tape, y, gb.targets, spec.histogram_bins, frozen);
                accumulate(tape.scale(*g.histogram, spec.lambda_h_for(gb.group)));
            }
        }
        if (nodes.y_prime) {
            const auto yp = tape.gather_rows(*nodes.y_prime, gb.rows);
            g.balanced = balanced_cross_entropy(tape, yp, gb.targets, gb.weights, spec.clamp_epsilon);
            accumulate(*g.balanced);
        }
        const auto weighted = tape.scale(*group_sum, spec.lambda_for(gb.group));
        objective = objective ? tape.add(*objective, weighted) : weighted;
        terms.groups.push_back(std::move(g));
    }
    if (!objective) objective = tape.constant(0.0);
    terms.objective = *objective;
    terms.total = terms.objective;

    if (include_l2) {
        const auto& params = model.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (params[i].l2_coefficient == 0.0) continue;
            const auto penalty = tape.scale(tape.sum(tape.square(tape.parameter(i))), params[i].l2_coefficient);
            terms.total = tape.add(terms.total, penalty);
        }
    }
    return terms;
}

}  // namespace fairnet
