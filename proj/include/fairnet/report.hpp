#pragma once

#include "fairnet/experiment.hpp"

#include <json.hpp>

#include <iosfwd>

namespace fairnet {

using Json = nlohmann::ordered_json;

Json to_json(const TrainConfig& config);
Json to_json(const TrainRecord& record);
Json to_json(const GroupReport& report);
Json to_json(const DisparitySummary& summary);
Json to_json(const Evaluation& evaluation);
Json to_json(const std::vector<GroupStatistics>& stats);

// Reliability rows as comma-separated values, one row per (model, group, bin).
void write_reliability_csv(std::ostream& os, std::span<const Evaluation> evaluations);

// Per-metric mean and std over seeds for each (model, group) cell.
struct SeedAggregate {
    std::string label;
    std::string group;
    MeanStd f_measure;
    MeanStd roc_auc;
    MeanStd ece;
    MeanStd classification_error_pct;
};

// `runs[s]` holds the evaluations of seed s, in the same model order.
std::vector<SeedAggregate> aggregate_over_seeds(std::span<const std::vector<Evaluation>> runs);
Json to_json(const SeedAggregate& aggregate);

// Across-group disparity per model, each seed's across-group mean/std
// averaged over seeds.
struct DisparityAggregate {
    std::string label;
    MeanStd f_measure;
    MeanStd roc_auc;
    MeanStd ece;
};
std::vector<DisparityAggregate> aggregate_disparity(std::span<const std::vector<Evaluation>> runs);
Json to_json(const DisparityAggregate& aggregate);

void write_json(const std::filesystem::path& path, const Json& json);

}  // namespace fairnet
