// fairnet: train, evaluate and compare branched calibrated classifiers.

#include "fairnet/errors.hpp"
#include "fairnet/experiment.hpp"
#include "fairnet/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace fairnet;

#ifndef FAIRNET_MANIFEST_DIR
#define FAIRNET_MANIFEST_DIR "data/manifests"
#endif
#ifndef FAIRNET_DEFAULT_DATA_DIR
#define FAIRNET_DEFAULT_DATA_DIR "data/raw"
#endif

namespace {

struct Options {
    std::string dataset = "adult_census";
    std::string data_path;
    std::string variant = "fair-net-branched";
    std::string ablation = "none";
    bool histogram = false;
    std::size_t bins_loss = 10;
    std::size_t bins_ece = 10;
    std::size_t bins_diagram = 20;
    double lambda_h = 1.0;
    std::uint64_t seed = 0;
    std::size_t seeds = 5;
    std::string out = "out";
    std::string checkpoint;
    TrainConfig train;
    std::string optimizer = "adaptive_moment";
    // sweep-synthetic
    std::vector<double> sweep_ir{2.0, 5.0, 10.0, 20.0};
    std::size_t synthetic_n = 4000;
};

fs::path data_dir(const Options& o) {
    if (!o.data_path.empty()) return o.data_path;
    if (const char* env = std::getenv("FAIRNET_DATA_DIR"); env && *env) return env;
    return FAIRNET_DEFAULT_DATA_DIR;
}

Dataset load(const Options& o) {
    fs::path manifest = o.dataset;
    if (manifest.extension() != ".manifest") manifest = fs::path(FAIRNET_MANIFEST_DIR) / (o.dataset + ".manifest");
    const auto dir = data_dir(o);
    if (!fs::is_directory(dir)) throw IoError("data directory not found: " + dir.string());
    auto ds = load_dataset(read_manifest(manifest), dir);
    for (const auto& w : ds.warnings) std::cerr << "warning: " << w << '\n';
    return ds;
}

TrainConfig train_config(const Options& o, std::uint64_t seed) {
    TrainConfig c = o.train;
    c.optimizer = parse_optimizer(o.optimizer);
    c.seed = seed;
    c.validate();
    return c;
}

LossOptions loss_options(const Options& o) { return {o.bins_loss, o.lambda_h}; }

Json options_json(const Options& o, std::string_view command) {
    return {{"command", std::string(command)},
            {"dataset", o.dataset},
            {"variant", o.variant},
            {"ablation", o.ablation},
            {"histogram", o.histogram},
            {"bins_loss", o.bins_loss},
            {"bins_ece", o.bins_ece},
            {"bins_diagram", o.bins_diagram},
            {"lambda_h", o.lambda_h},
            {"seed", o.seed},
            {"seeds", o.seeds},
            {"train", to_json(train_config(o, o.seed))}};
}

fs::path output_dir(const Options& o) {
    fs::path dir = o.out;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os || !(os << text)) throw IoError("cannot write " + path.string());
}

void cmd_stats(const Options& o) {
    const auto ds = load(o);
    std::vector<std::size_t> rows(ds.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    std::cout << to_json(group_statistics(ds, rows)).dump(2) << '\n';
}

void cmd_train(const Options& o) {
    const auto dir = output_dir(o);
    const auto run = parse_model_run(o.variant, o.ablation, o.histogram);
    const auto config = train_config(o, o.seed);
    const auto exp = make_experiment(load(o), o.seed);
    for (const auto& w : exp.warnings) std::cerr << "warning: " << w << '\n';

    write_json(dir / "config.json", options_json(o, "train"));
    write_split(dir, exp.split);
    const auto trained = train_run(exp, run, config, loss_options(o));

    std::ostringstream ckpt;
    write_checkpoint(ckpt, std::span<const Classifier>(&trained.classifier, 1));
    write_text(dir / "checkpoint.txt", ckpt.str());
    Json records = Json::array();
    for (const auto& r : trained.records) records.push_back(to_json(r));
    write_json(dir / "train_record.json", records);

    const auto ev = evaluate(exp, trained, run.label, o.bins_ece, o.bins_diagram);
    write_json(dir / "evaluation.json", to_json(ev));
    std::ofstream csv(dir / "reliability.csv", std::ios::binary);
    write_reliability_csv(csv, std::span<const Evaluation>(&ev, 1));
    for (const auto& g : ev.groups)
        std::cout << run.label << ' ' << g.group << " F=" << g.f_measure_max << " AUC=" << g.roc_auc
                  << " ECE=" << g.ece << " err%=" << g.classification_error_pct << '\n';
}

void cmd_evaluate(const Options& o) {
    const fs::path dir = o.checkpoint.empty() ? fs::path(o.out) : fs::path(o.checkpoint);
    std::ifstream is(dir / "checkpoint.txt", std::ios::binary);
    if (!is) throw IoError("cannot read " + (dir / "checkpoint.txt").string());
    auto classifiers = read_checkpoint(is);

    // The dataset is the one the checkpoint was trained on.
    std::ifstream cfg(dir / "config.json");
    if (!cfg) throw IoError("cannot read " + (dir / "config.json").string());
    Options trained_on = o;
    try {
        trained_on.dataset = Json::parse(cfg).at("dataset").get<std::string>();
    } catch (const Json::exception& e) {
        throw IoError("bad " + (dir / "config.json").string() + ": " + e.what());
    }

    Experiment exp;
    exp.dataset = load(trained_on);
    exp.split = read_split(dir);
    exp.encoder = Encoder::fit(exp.dataset, exp.split.train);
    exp.data = prepare(exp.dataset, exp.split, exp.encoder, &exp.warnings);
    exp.test_home = home_groups(exp.dataset, exp.split.test);

    std::vector<Evaluation> evs;
    for (auto& c : classifiers) {
        TrainedClassifier t{std::move(c), {}};
        evs.push_back(evaluate(exp, t, t.classifier.label, o.bins_ece, o.bins_diagram));
    }
    Json out = Json::array();
    for (const auto& e : evs) out.push_back(to_json(e));
    std::cout << out.dump(2) << '\n';
}

// Trains `runs` for seeds seed, seed+1, ... and writes the comparison report.
void run_comparison(const Options& o, const std::vector<ModelRun>& runs, std::string_view command) {
    const auto dir = output_dir(o);
    write_json(dir / "config.json", options_json(o, command));
    const auto ds = load(o);

    std::vector<std::vector<Evaluation>> per_seed;
    std::vector<Classifier> last_classifiers;
    Json seeds = Json::array();
    for (std::size_t s = 0; s < o.seeds; ++s) {
        const std::uint64_t seed = o.seed + s;
        const auto exp = make_experiment(ds, seed);
        std::vector<Evaluation> evs;
        Json models = Json::array();
        std::vector<Classifier> classifiers;
        for (const auto& run : runs) {
            const auto trained = train_run(exp, run, train_config(o, seed), loss_options(o));
            evs.push_back(evaluate(exp, trained, run.label, o.bins_ece, o.bins_diagram));
            Json selected = Json::array();
            for (const auto& r : trained.records) selected.push_back({{"label", r.label}, {"epoch", r.selected_epoch}});
            models.push_back({{"evaluation", to_json(evs.back())}, {"selected_epochs", std::move(selected)}});
            classifiers.push_back(trained.classifier);
            std::cerr << command << " seed " << seed << ' ' << run.label << " done\n";
        }
        seeds.push_back({{"seed", seed}, {"models", std::move(models)}});
        std::ofstream csv(dir / ("reliability_seed" + std::to_string(seed) + ".csv"), std::ios::binary);
        write_reliability_csv(csv, evs);
        std::ostringstream ckpt;
        write_checkpoint(ckpt, classifiers);
        write_text(dir / ("checkpoint_seed" + std::to_string(seed) + ".txt"), ckpt.str());
        per_seed.push_back(std::move(evs));
    }

    Json over_seeds = Json::array();
    for (const auto& a : aggregate_over_seeds(per_seed)) over_seeds.push_back(to_json(a));
    Json across = Json::array();
    for (const auto& a : aggregate_disparity(per_seed)) across.push_back(to_json(a));

    // Rank models per group on each metric using the seed means.
    Json ranking = Json::array();
    const auto agg = aggregate_over_seeds(per_seed);
    for (const auto& g : per_seed.front().front().groups) {
        std::vector<const SeedAggregate*> cells;
        for (const auto& a : agg)
            if (a.group == g.group) cells.push_back(&a);
        auto best = [&](auto key, bool higher) {
            const SeedAggregate* b = nullptr;
            for (const auto* c : cells) {
                const double v = key(*c);
                if (!std::isfinite(v)) continue;
                if (!b || (higher ? v > key(*b) : v < key(*b))) b = c;
            }
            return b ? Json(b->label) : Json(nullptr);
        };
        ranking.push_back({{"group", g.group},
                           {"best_f_measure", best([](const auto& a) { return a.f_measure.mean; }, true)},
                           {"best_roc_auc", best([](const auto& a) { return a.roc_auc.mean; }, true)},
                           {"best_ece", best([](const auto& a) { return a.ece.mean; }, false)}});
    }

    std::vector<std::size_t> all(ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    Json report = {{"command", std::string(command)},
                   {"config", options_json(o, command)},
                   {"dataset_statistics", to_json(group_statistics(ds, all))},
                   {"seeds", std::move(seeds)},
                   {"mean_std_over_seeds", std::move(over_seeds)},
                   {"across_group_mean_std_averaged_over_seeds", std::move(across)},
                   {"best_by_group", std::move(ranking)}};
    write_json(dir / "report.json", report);

    for (const auto& a : agg)
        std::cout << a.label << ' ' << a.group << " F=" << a.f_measure.mean << " AUC=" << a.roc_auc.mean
                  << " ECE=" << a.ece.mean << " err%=" << a.classification_error_pct.mean << '\n';
}

void cmd_sweep_synthetic(const Options& o) {
    const auto dir = output_dir(o);
    write_json(dir / "config.json", options_json(o, "sweep-synthetic"));
    Json rows = Json::array();
    for (double ir : o.sweep_ir) {
        SyntheticSpec spec;
        spec.n = o.synthetic_n;
        spec.per_group_ir = {3.0, ir};
        spec.seed = o.seed;
        auto exp = make_experiment(make_synthetic(spec), o.seed, {0.2, 0.15, false});
        for (const auto& run : {parse_model_run("fair-net-branched", "none", false),
                                parse_model_run("baseline-nn", "none", false)}) {
            const auto trained = train_run(exp, run, train_config(o, o.seed), loss_options(o));
            const auto ev = evaluate(exp, trained, run.label, o.bins_ece, o.bins_diagram);
            rows.push_back({{"minority_ir", ir}, {"evaluation", to_json(ev)}});
        }
    }
    write_json(dir / "sweep.json", rows);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fairnet: branched multitask calibrated classifiers"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--dataset", o.dataset, "benchmark name (adult_census, compas, credit_default) or manifest path");
        sub->add_option("--data-path", o.data_path, "directory with the raw data files (default: $FAIRNET_DATA_DIR)");
        sub->add_option("--bins-loss", o.bins_loss, "histogram loss bins")->check(CLI::Range(1, 1000));
        sub->add_option("--bins-ece", o.bins_ece, "ECE bins")->check(CLI::Range(1, 1000));
        sub->add_option("--bins-diagram", o.bins_diagram, "reliability table bins")->check(CLI::Range(1, 1000));
        sub->add_option("--lambda-h", o.lambda_h, "histogram loss weight");
        sub->add_option("--seed", o.seed, "seed (first seed for multi-seed commands)");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--epochs", o.train.max_epochs, "maximum epochs");
        sub->add_option("--lr", o.train.learning_rate, "learning rate");
        sub->add_option("--batch", o.train.batch_size, "batch size");
        sub->add_option("--patience", o.train.patience, "early stopping patience");
        sub->add_option("--l2", o.train.l2_coefficient, "L2 coefficient on weights");
        sub->add_option("--optimizer", o.optimizer, "adaptive_moment or sgd_momentum");
        sub->add_flag("--stratified-batches", o.train.group_stratified_batches, "group-stratified batch order");
    };

    auto* stats = app.add_subcommand("stats", "print dataset group statistics");
    common(stats);
    auto* train = app.add_subcommand("train", "train one model and write checkpoint, record and report");
    common(train);
    train->add_option("--variant", o.variant, "fair-net-branched, fair-net-unbranched, cal-net, baseline-nn, subpop-specific");
    train->add_option("--ablation", o.ablation, "none, drop_primary_Y, drop_secondary_Y_prime");
    train->add_flag("--histogram", o.histogram, "add the histogram loss on Y");
    auto* evaluate_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint directory on its test split");
    common(evaluate_cmd);
    evaluate_cmd->add_option("--checkpoint", o.checkpoint, "directory written by train (default: --out)");
    auto* reproduce = app.add_subcommand("reproduce", "train every model over several seeds and compare");
    common(reproduce);
    reproduce->add_option("--seeds", o.seeds, "number of seeds")->check(CLI::Range(1, 100));
    auto* ablate = app.add_subcommand("ablate", "train the ablation settings over several seeds");
    common(ablate);
    ablate->add_option("--seeds", o.seeds, "number of seeds")->check(CLI::Range(1, 100));
    auto* sweep = app.add_subcommand("sweep-synthetic", "minority-group imbalance sweep on synthetic data");
    common(sweep);
    sweep->add_option("--ir", o.sweep_ir, "minority group imbalance ratios");
    sweep->add_option("--n", o.synthetic_n, "samples");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::usage);
    }

    try {
        if (stats->parsed()) cmd_stats(o);
        if (train->parsed()) cmd_train(o);
        if (evaluate_cmd->parsed()) cmd_evaluate(o);
        if (reproduce->parsed()) run_comparison(o, comparison_runs(), "reproduce");
        if (ablate->parsed()) run_comparison(o, ablation_runs(), "ablate");
        if (sweep->parsed()) cmd_sweep_synthetic(o);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::io);
    }
    return 0;
}
