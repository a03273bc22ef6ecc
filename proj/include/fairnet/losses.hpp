#pragma once

#include "fairnet/autodiff.hpp"
#include "fairnet/model.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairnet {

// Per-group class weights: positives weighted N/(2p), negatives N/(2n), so the
// two classes carry equal total weight and the group's total weight stays N.
// The weights are kept as exact fractions alongside their double values.
struct ClassWeights {
    std::string group;
    std::uint64_t total = 0;
    std::uint64_t positives = 0;
    std::uint64_t negatives = 0;
    double w_pos = 1.0;
    double w_neg = 1.0;

    static ClassWeights from_counts(std::string group, std::uint64_t positives, std::uint64_t negatives);
    static ClassWeights from_targets(std::string group, std::span<const double> targets);

    double weight(double target) const noexcept { return target > 0.5 ? w_pos : w_neg; }

    // w_pos*p == w_neg*n and w_pos*p + w_neg*n == N, checked in integer
    // arithmetic on the exact fractions N/(2p) and N/(2n).
    bool classes_equally_weighted() const noexcept;
    bool total_weight_preserved() const noexcept;
};

struct LossSpec {
    std::vector<std::string> groups;
    std::map<std::string, double, std::less<>> lambda;
    std::map<std::string, double, std::less<>> lambda_h;
    std::size_t histogram_bins = 10;
    bool use_histogram = false;
    double clamp_epsilon = 1e-7;

    double lambda_for(std::string_view group) const;
    double lambda_h_for(std::string_view group) const;
    bool has_group(std::string_view group) const noexcept;
    void validate() const;
};

// --- value-level definitions ------------------------------------------------

// Mean binary cross-entropy with predictions clamped to [eps, 1-eps].
double cross_entropy(std::span<const double> predictions, std::span<const double> targets, double clamp_epsilon);

// (1/N) * sum_i w(t_i) * bce(y'_i, t_i).
double balanced_cross_entropy(std::span<const double> predictions, std::span<const double> targets,
                              const ClassWeights& weights, double clamp_epsilon);

// Equal-width bin index in [0, bins) for a prediction in [0,1].
std::size_t bin_of(double prediction, std::size_t bins) noexcept;
std::vector<std::size_t> bin_assignment(std::span<const double> predictions, std::size_t bins);

// RMSE between each non-empty bin's positive fraction and the bin midpoint.
double histogram_loss(std::span<const double> predictions, std::span<const double> targets, std::size_t bins);

// RMSE between each non-empty bin's positive fraction and its mean
// prediction (the quantity the training surrogate differentiates).
double histogram_surrogate_value(std::span<const double> predictions, std::span<const double> targets,
                                 std::size_t bins);

// --- graph builders ----------------------------------------------------------

ad::NodeId cross_entropy(ad::Tape& tape, ad::NodeId predictions, const ad::Vector& targets, double clamp_epsilon);
ad::NodeId balanced_cross_entropy(ad::Tape& tape, ad::NodeId predictions, const ad::Vector& targets,
                                  const ClassWeights& weights, double clamp_epsilon);

// Differentiable histogram term. Bin membership is treated as a constant:
// either taken from `frozen_bins` or computed from the current predictions.
ad::NodeId histogram_surrogate(ad::Tape& tape, ad::NodeId predictions, const ad::Vector& targets, std::size_t bins,
                               std::span<const std::size_t> frozen_bins = {});

// The members of one group inside a batch.
struct GroupBatch {
    std::string group;
    std::vector<Eigen::Index> rows;  // row indices into the batch
    ad::Vector targets;              // aligned with rows
    ClassWeights weights;            // from the group's training-split counts
};

struct GroupLossTerms {
    std::string group;
    std::size_t count = 0;
    std::optional<ad::NodeId> xent;
    std::optional<ad::NodeId> balanced;
    std::optional<ad::NodeId> histogram;
};

struct LossTerms {
    ad::NodeId objective;  // sum over groups of lambda_g * [L_X + L_B + lambda_H * L_H]
    ad::NodeId total;      // objective + L2 penalty
    std::vector<GroupLossTerms> groups;
};

using FrozenBins = std::map<std::string, std::vector<std::size_t>, std::less<>>;

// Builds the training objective for one batch. Groups with no members in the
// batch are skipped. For multi-branch models each group reads its own
// branch; single-branch models serve every group from the one branch.
LossTerms total_loss(ad::Tape& tape, const Model& model, const Model::Outputs& outputs,
                     std::span<const GroupBatch> groups, const LossSpec& spec, bool include_l2 = true,
                     const FrozenBins* frozen_bins = nullptr);

}  // namespace fairnet
