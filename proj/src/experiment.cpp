#include "fairnet/experiment.hpp"

#include "fairnet/errors.hpp"

#include <algorithm>

namespace fairnet {

Experiment make_experiment(Dataset dataset, std::uint64_t seed, const SplitOptions& options) {
    Experiment exp;
    std::optional<std::size_t> test_count;
    if (options.use_manifest_test_count) test_count = dataset.default_test_count;
    exp.split = stratified_split(dataset, options.test_fraction, options.val_fraction, seed, test_count);
    exp.encoder = Encoder::fit(dataset, exp.split.train);
    exp.data = prepare(dataset, exp.split, exp.encoder, &exp.warnings);
    exp.test_home = home_groups(dataset, exp.split.test);
    exp.dataset = std::move(dataset);
    return exp;
}

ModelRun parse_model_run(std::string_view variant, std::string_view ablation, bool histogram) {
    ModelRun run;
    run.variant = parse_variant(variant);
    run.ablation = parse_ablation(ablation);
    run.histogram = histogram;
    if (run.ablation != Ablation::none && run.variant != Variant::fairnet_branched &&
        run.variant != Variant::fairnet_unbranched && run.variant != Variant::calnet)
        throw InvalidArgument("ablations apply only to networks with Y and Y' heads");
    if (run.histogram && (run.variant == Variant::baseline_balanced_xent || run.variant == Variant::subpop_specific))
        throw InvalidArgument("the histogram term needs a primary output");
    if (run.histogram && run.ablation == Ablation::drop_primary_y)
        throw InvalidArgument("the histogram term needs a primary output");
    run.label = std::string(variant);
    if (run.histogram) run.label += "+hist";
    if (run.ablation != Ablation::none) run.label += "/" + std::string(to_string(run.ablation));
    return run;
}

std::vector<ModelRun> comparison_runs() {
    return {
        parse_model_run("fair-net-branched", "none", false),
        parse_model_run("fair-net-branched", "none", true),
        parse_model_run("fair-net-unbranched", "none", false),
        parse_model_run("fair-net-unbranched", "none", true),
        parse_model_run("cal-net", "none", true),
        parse_model_run("baseline-nn", "none", false),
        parse_model_run("subpop-specific", "none", false),
    };
}

std::vector<ModelRun> ablation_runs() {
    return {
        parse_model_run("fair-net-branched", "none", false),
        parse_model_run("fair-net-branched", "none", true),
        parse_model_run("fair-net-branched", "drop_primary_Y", false),
        parse_model_run("fair-net-branched", "drop_secondary_Y_prime", false),
        parse_model_run("fair-net-branched", "drop_secondary_Y_prime", true),
    };
}

LossSpec loss_spec_for(const ModelRun& run, std::span<const std::string> groups, const LossOptions& loss) {
    LossSpec spec;
    const bool pooled = run.variant == Variant::calnet || run.variant == Variant::baseline_balanced_xent;
    if (pooled)
        spec.groups = {std::string(kAllGroup)};
    else
        spec.groups.assign(groups.begin(), groups.end());
    for (const auto& g : spec.groups) {
        spec.lambda[g] = 1.0;
        spec.lambda_h[g] = loss.lambda_h;
    }
    spec.histogram_bins = loss.histogram_bins;
    spec.use_histogram = run.histogram;
    return spec;
}

TrainedClassifier train_run(const Experiment& exp, const ModelRun& run, const TrainConfig& config,
                            const LossOptions& loss) {
    TrainedClassifier out;
    out.classifier.label = run.label;
    const auto& groups = exp.data.group_names;
    const auto width = static_cast<std::size_t>(exp.data.train.features.cols());

    if (run.variant == Variant::subpop_specific) {
        for (auto& [model, record] : train_subpop_specific(exp.data, groups, config, 10)) {
            out.classifier.members.push_back(std::move(model));
            out.records.push_back(std::move(record));
        }
        return out;
    }

    const TrunkSpec trunk{width, run.variant == Variant::baseline_balanced_xent ? 10u : 5u, config.l2_coefficient,
                          true};
    Model model = [&] {
        switch (run.variant) {
        case Variant::fairnet_branched:
            return Model::build_fairnet(trunk, groups, run.variant, run.ablation, config.seed);
        case Variant::fairnet_unbranched:
        case Variant::calnet:
            return Model::build_fairnet(trunk, {std::string(kAllGroup)}, run.variant, run.ablation, config.seed);
        default:
            return Model::build_baseline(trunk, std::string(kAllGroup), run.variant, config.seed);
        }
    }();
    auto record = train(model, exp.data, loss_spec_for(run, groups, loss), config);
    record.label = run.label;
    out.classifier.members.push_back(std::move(model));
    out.records.push_back(std::move(record));
    return out;
}

Evaluation evaluate(const Experiment& exp, const TrainedClassifier& trained, const std::string& label,
                    std::size_t ece_bins, std::size_t diagram_bins) {
    Evaluation ev;
    ev.label = label;
    const auto& test = exp.data.test;
    const ad::Vector all = trained.classifier.predict_rows(test.features, exp.test_home);
    ev.groups.push_back(group_report(std::string(kAllGroup), std::span<const double>(all.data(), all.size()),
                                     test.targets, ece_bins, diagram_bins));

    for (const auto& g : exp.data.group_names) {
        const auto rows = partition_members(test, exp.data.group_names, g);
        ad::Matrix x(static_cast<Eigen::Index>(rows.size()), test.features.cols());
        std::vector<double> t;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            x.row(static_cast<Eigen::Index>(i)) = test.features.row(static_cast<Eigen::Index>(rows[i]));
            t.push_back(test.targets[rows[i]]);
        }
        const ad::Vector p = trained.classifier.predict_group(x, g);
        ev.groups.push_back(group_report(g, std::span<const double>(p.data(), p.size()), t, ece_bins, diagram_bins));
    }
    if (ev.groups.size() > 2)
        ev.disparity = disparity_summary(std::span<const GroupReport>(ev.groups).subspan(1));

    const auto probe = probe_grid(-10.0, 10.0, 0.5);
    for (const auto& m : trained.classifier.members)
        for (const auto& b : m.spec().branches)
            ev.monotone.emplace_back(b.group, check_monotone_link(m, b.group, probe));
    return ev;
}

}  // namespace fairnet
