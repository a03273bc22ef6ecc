#include "fairnet/report.hpp"

#include "fairnet/errors.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

namespace fairnet {

namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json components(const std::vector<GroupComponents>& groups) {
    Json out = Json::array();
    for (const auto& g : groups)
        out.push_back({{"group", g.group},
                       {"count", g.count},
                       {"xent", number(g.xent)},
                       {"balanced_xent", number(g.balanced)},
                       {"histogram", number(g.histogram)}});
    return out;
}

Json mean_std_json(const MeanStd& m) { return {{"mean", number(m.mean)}, {"std", number(m.std)}}; }

std::string fixed(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

Json to_json(const TrainConfig& c) {
    return {{"optimizer", std::string(to_string(c.optimizer))},
            {"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"l2_coefficient", c.l2_coefficient},
            {"seed", c.seed},
            {"momentum", c.momentum},
            {"group_stratified_batches", c.group_stratified_batches}};
}

Json to_json(const TrainRecord& r) {
    Json epochs = Json::array();
    for (const auto& e : r.epochs)
        epochs.push_back({{"epoch", e.epoch},
                          {"train_objective", number(e.train_objective)},
                          {"validation_objective", number(e.validation_objective)},
                          {"train_groups", components(e.train_groups)},
                          {"validation_groups", components(e.validation_groups)}});
    return {{"label", r.label},
            {"config", to_json(r.config)},
            {"initial_validation_objective", number(r.initial_validation_objective)},
            {"selected_epoch", r.selected_epoch},
            {"selected_validation_objective", number(r.selected_validation_objective)},
            {"epochs", std::move(epochs)}};
}

Json to_json(const GroupReport& g) {
    return {{"group", g.group},
            {"n", g.n},
            {"positives", g.positives},
            {"ir", number(g.ir)},
            {"f_measure", number(g.f_measure_max)},
            {"f_threshold", number(g.f_threshold)},
            {"roc_auc", number(g.roc_auc)},
            {"ece", number(g.ece)},
            {"classification_error_pct", number(g.classification_error_pct)}};
}

Json to_json(const DisparitySummary& d) {
    return {{"groups", d.groups},
            {"f_measure", mean_std_json(d.f_measure)},
            {"roc_auc", mean_std_json(d.roc_auc)},
            {"ece", mean_std_json(d.ece)},
            {"classification_error_pct", mean_std_json(d.classification_error_pct)}};
}

Json to_json(const Evaluation& e) {
    Json groups = Json::array();
    for (const auto& g : e.groups) groups.push_back(to_json(g));
    Json mono = Json::object();
    for (const auto& [g, m] : e.monotone) mono[g] = std::string(to_string(m));
    return {{"model", e.label},
            {"groups", std::move(groups)},
            {"across_group", to_json(e.disparity)},
            {"monotone_link", std::move(mono)}};
}

Json to_json(const std::vector<GroupStatistics>& stats) {
    Json out = Json::array();
    for (const auto& s : stats)
        out.push_back({{"group", s.group},
                       {"n", s.size},
                       {"positives", s.positives},
                       {"positive_percent", number(s.positive_percent)},
                       {"ir", number(s.imbalance_ratio)}});
    return out;
}

void write_reliability_csv(std::ostream& os, std::span<const Evaluation> evaluations) {
    os << "model,group,bin,lower,upper,count,mean_prediction,positive_fraction\n";
    for (const auto& e : evaluations)
        for (const auto& g : e.groups)
            for (std::size_t b = 0; b < g.reliability.rows.size(); ++b) {
                const auto& r = g.reliability.rows[b];
                os << e.label << ',' << g.group << ',' << b << ',' << fixed(r.lower) << ',' << fixed(r.upper) << ','
                   << r.count << ',' << fixed(r.mean_prediction) << ',' << fixed(r.positive_fraction) << '\n';
            }
}

std::vector<SeedAggregate> aggregate_over_seeds(std::span<const std::vector<Evaluation>> runs) {
    std::vector<SeedAggregate> out;
    if (runs.empty()) return out;
    const auto& first = runs.front();
    for (std::size_t m = 0; m < first.size(); ++m) {
        for (std::size_t g = 0; g < first[m].groups.size(); ++g) {
            std::vector<double> f, auc, e, err;
            for (const auto& seed : runs) {
                const auto& r = seed.at(m).groups.at(g);
                f.push_back(r.f_measure_max);
                auc.push_back(r.roc_auc);
                e.push_back(r.ece);
                err.push_back(r.classification_error_pct);
            }
            out.push_back({first[m].label, first[m].groups[g].group, mean_std(f), mean_std(auc), mean_std(e),
                           mean_std(err)});
        }
    }
    return out;
}

Json to_json(const SeedAggregate& a) {
    return {{"model", a.label},
            {"group", a.group},
            {"f_measure", mean_std_json(a.f_measure)},
            {"roc_auc", mean_std_json(a.roc_auc)},
            {"ece", mean_std_json(a.ece)},
            {"classification_error_pct", mean_std_json(a.classification_error_pct)}};
}

std::vector<DisparityAggregate> aggregate_disparity(std::span<const std::vector<Evaluation>> runs) {
    std::vector<DisparityAggregate> out;
    if (runs.empty()) return out;
    for (std::size_t m = 0; m < runs.front().size(); ++m) {
        DisparityAggregate a{runs.front()[m].label, {0, 0}, {0, 0}, {0, 0}};
        for (const auto& seed : runs) {
            const auto& d = seed.at(m).disparity;
            a.f_measure.mean += d.f_measure.mean;
            a.f_measure.std += d.f_measure.std;
            a.roc_auc.mean += d.roc_auc.mean;
            a.roc_auc.std += d.roc_auc.std;
            a.ece.mean += d.ece.mean;
            a.ece.std += d.ece.std;
        }
        const double k = static_cast<double>(runs.size());
        for (auto* ms : {&a.f_measure, &a.roc_auc, &a.ece}) {
            ms->mean /= k;
            ms->std /= k;
        }
        out.push_back(a);
    }
    return out;
}

Json to_json(const DisparityAggregate& a) {
    return {{"model", a.label},
            {"f_measure", mean_std_json(a.f_measure)},
            {"roc_auc", mean_std_json(a.roc_auc)},
            {"ece", mean_std_json(a.ece)}};
}

void write_json(const std::filesystem::path& path, const Json& json) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    os << json.dump(2) << '\n';
    if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace fairnet
