#pragma once

#include "fairnet/data.hpp"
#include "fairnet/metrics.hpp"
#include "fairnet/model.hpp"
#include "fairnet/training.hpp"

#include <string>
#include <vector>

namespace fairnet {

// Everything derived from one (dataset, split seed) pair.
struct Experiment {
    Dataset dataset;
    SplitSpec split;
    Encoder encoder;
    PreparedData data;
    std::vector<std::string> test_home;  // smallest containing group per test row
    std::vector<std::string> warnings;
};

struct SplitOptions {
    double test_fraction = 0.2;
    double val_fraction = 0.15;
    bool use_manifest_test_count = true;
};

Experiment make_experiment(Dataset dataset, std::uint64_t seed, const SplitOptions& options = {});

// One row of a comparison: which network, which heads, which losses.
struct ModelRun {
    std::string label;
    Variant variant = Variant::fairnet_branched;
    Ablation ablation = Ablation::none;
    bool histogram = false;
};

struct LossOptions {
    std::size_t histogram_bins = 10;
    double lambda_h = 1.0;
};

ModelRun parse_model_run(std::string_view variant, std::string_view ablation, bool histogram);

// The model rows of a full comparison (Fair-Net variants, Cal-Net, baselines).
std::vector<ModelRun> comparison_runs();
// Fair-Net Branched under each ablation, with and without the histogram term.
std::vector<ModelRun> ablation_runs();

struct TrainedClassifier {
    Classifier classifier;
    std::vector<TrainRecord> records;
};

LossSpec loss_spec_for(const ModelRun& run, std::span<const std::string> groups, const LossOptions& loss);

TrainedClassifier train_run(const Experiment& exp, const ModelRun& run, const TrainConfig& config,
                            const LossOptions& loss);

struct Evaluation {
    std::string label;
    std::vector<GroupReport> groups;  // "all" first, then dataset groups
    DisparitySummary disparity;       // across dataset groups, "all" excluded
    std::vector<std::pair<std::string, Monotonicity>> monotone;
};

Evaluation evaluate(const Experiment& exp, const TrainedClassifier& trained, const std::string& label,
                    std::size_t ece_bins = 10, std::size_t diagram_bins = 20);

}  // namespace fairnet
