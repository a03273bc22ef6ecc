#pragma once

#include "fairnet/data.hpp"
#include "fairnet/losses.hpp"
#include "fairnet/model.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fairnet {

enum class Optimizer { sgd_momentum, adaptive_moment };

std::string_view to_string(Optimizer o) noexcept;
Optimizer parse_optimizer(std::string_view s);

struct TrainConfig {
    Optimizer optimizer = Optimizer::adaptive_moment;
    double learning_rate = 1e-3;
    std::size_t batch_size = 128;
    std::size_t max_epochs = 300;
    std::size_t patience = 20;
    double l2_coefficient = 1e-4;
    std::uint64_t seed = 0;
    double momentum = 0.9;
    // Order each epoch so every batch holds a proportional slice of every
    // (group pattern x class) cell.
    bool group_stratified_batches = false;

    void validate() const;
};

// Encoded rows of one split partition.
struct Partition {
    ad::Matrix features;
    std::vector<double> targets;
    std::vector<GroupMask> membership;

    std::size_t size() const noexcept { return targets.size(); }
};

struct PreparedData {
    std::vector<std::string> group_names;
    Partition train;
    Partition validation;
    Partition test;
};

PreparedData prepare(const Dataset& dataset, const SplitSpec& split, const Encoder& encoder,
                     std::vector<std::string>* warnings = nullptr);

// Rows of `partition` in `group` (kAllGroup selects all rows).
std::vector<std::size_t> partition_members(const Partition& partition, std::span<const std::string> group_names,
                                           std::string_view group);

// Class weights per loss group from the partition's counts.
std::map<std::string, ClassWeights, std::less<>> class_weights(const Partition& partition,
                                                               std::span<const std::string> group_names,
                                                               const LossSpec& spec);

struct GroupComponents {
    std::string group;
    std::size_t count = 0;
    double xent = 0.0;       // NaN when the head is absent
    double balanced = 0.0;   // NaN when the head is absent
    double histogram = 0.0;  // NaN unless the histogram term is active
};

struct LossEvaluation {
    double objective = 0.0;
    std::vector<GroupComponents> groups;
};

// Objective (no L2) over a whole partition in one pass.
LossEvaluation evaluate_loss(const Model& model, const Partition& partition, std::span<const std::string> group_names,
                             const LossSpec& spec, const std::map<std::string, ClassWeights, std::less<>>& weights);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_objective = 0.0;  // mean over batches, without L2
    double validation_objective = 0.0;
    std::vector<GroupComponents> train_groups;  // batch means
    std::vector<GroupComponents> validation_groups;
};

struct TrainRecord {
    std::string label;
    TrainConfig config;
    std::vector<EpochRecord> epochs;
    std::size_t selected_epoch = 0;  // 0 means the initial parameters were kept
    double initial_validation_objective = 0.0;
    double selected_validation_objective = 0.0;
};

// Mini-batch training with early stopping on the validation objective. The
// parameters of the best validation epoch are restored before returning.
TrainRecord train(Model& model, const PreparedData& data, const LossSpec& spec, const TrainConfig& config);

// One balanced-cross-entropy baseline (hidden_units ELU units) per group,
// each trained only on that group's rows.
std::vector<std::pair<Model, TrainRecord>> train_subpop_specific(const PreparedData& data,
                                                                 std::span<const std::string> groups,
                                                                 const TrainConfig& config,
                                                                 std::size_t hidden_units = 10);

}  // namespace fairnet
