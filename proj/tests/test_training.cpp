#include "fairnet/errors.hpp"
#include "fairnet/experiment.hpp"
#include "fairnet/report.hpp"
#include "fairnet/training.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace fairnet;

namespace {

Experiment synthetic_experiment(double separation, std::uint64_t seed = 0) {
    SyntheticSpec spec;
    spec.n = 1200;
    spec.d = 4;
    spec.group_fractions = {0.7, 0.3};
    spec.per_group_ir = {2.0, 4.0};
    spec.separation = separation;
    spec.seed = seed;
    return make_experiment(make_synthetic(spec), seed, {0.2, 0.15, false});
}

TrainConfig quick(std::size_t epochs) {
    TrainConfig c;
    c.max_epochs = epochs;
    c.batch_size = 32;
    c.learning_rate = 1e-2;
    c.patience = epochs;
    return c;
}

}  // namespace

TEST(Config, Validation) {
    TrainConfig c;
    c.batch_size = 4;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.patience = 0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = {};
    c.learning_rate = -1;
    EXPECT_THROW(c.validate(), InvalidArgument);
    EXPECT_THROW(parse_optimizer("rmsprop"), InvalidArgument);
}

TEST(Train, ZeroLearningRateLeavesParameters) {
    const auto exp = synthetic_experiment(2.0);
    const auto run = parse_model_run("fair-net-branched", "none", true);
    auto cfg = quick(4);
    cfg.learning_rate = 0.0;
    const auto trained = train_run(exp, run, cfg, {});
    auto fresh = Model::build_fairnet(TrunkSpec{exp.encoder.width(), 5, cfg.l2_coefficient, true},
                                      exp.data.group_names, Variant::fairnet_branched, Ablation::none, cfg.seed);
    const auto& a = trained.classifier.members[0].parameters();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, fresh.parameters()[i].values);
    const auto& rec = trained.records[0];
    for (const auto& e : rec.epochs) EXPECT_EQ(e.validation_objective, rec.initial_validation_objective);
    EXPECT_EQ(rec.selected_epoch, 0u);
}

TEST(Train, SeparableDataReducesCrossEntropy) {
    const auto exp = synthetic_experiment(6.0);
    const auto trained = train_run(exp, parse_model_run("fair-net-unbranched", "none", false), quick(10), {});
    const auto& epochs = trained.records[0].epochs;
    ASSERT_EQ(epochs.size(), 10u);
    auto xent = [](const EpochRecord& e) {
        double s = 0;
        for (const auto& g : e.train_groups) s += g.xent;
        return s;
    };
    for (std::size_t k = 1; k < epochs.size(); ++k) EXPECT_LE(xent(epochs[k]), xent(epochs[k - 1]) * 1.05) << k;
    EXPECT_LT(xent(epochs.back()), xent(epochs.front()));
}

TEST(Train, SelectedEpochIsMinimal) {
    const auto exp = synthetic_experiment(1.0);
    auto cfg = quick(40);
    cfg.patience = 5;
    cfg.learning_rate = 0.05;
    const auto rec = train_run(exp, parse_model_run("fair-net-branched", "none", false), cfg, {}).records[0];
    double best = rec.initial_validation_objective;
    for (const auto& e : rec.epochs) best = std::min(best, e.validation_objective);
    EXPECT_EQ(rec.selected_validation_objective, best);
    for (const auto& e : rec.epochs)
        if (e.epoch > rec.selected_epoch) EXPECT_GE(e.validation_objective, rec.selected_validation_objective);
    if (rec.epochs.size() < 40) EXPECT_EQ(rec.epochs.size(), rec.selected_epoch + 5);

    // The restored parameters reproduce the selected validation objective.
    auto trained = train_run(exp, parse_model_run("fair-net-branched", "none", false), cfg, {});
    LossSpec spec = loss_spec_for(parse_model_run("fair-net-branched", "none", false), exp.data.group_names, {});
    const auto w = class_weights(exp.data.train, exp.data.group_names, spec);
    const auto v = evaluate_loss(trained.classifier.members[0], exp.data.validation, exp.data.group_names, spec, w);
    EXPECT_EQ(v.objective, rec.selected_validation_objective);
}

TEST(Train, DuplicateSeedRunsAreBitIdentical) {
    const auto exp = synthetic_experiment(1.5, 3);
    for (const auto& run : comparison_runs()) {
        auto cfg = quick(6);
        cfg.seed = 11;
        cfg.group_stratified_batches = run.variant == Variant::calnet;
        const auto a = train_run(exp, run, cfg, {});
        const auto b = train_run(exp, run, cfg, {});
        ASSERT_EQ(a.records.size(), b.records.size());
        for (std::size_t i = 0; i < a.records.size(); ++i)
            EXPECT_EQ(to_json(a.records[i]).dump(), to_json(b.records[i]).dump()) << run.label;
        std::ostringstream ca, cb;
        write_checkpoint(ca, std::span<const Classifier>(&a.classifier, 1));
        write_checkpoint(cb, std::span<const Classifier>(&b.classifier, 1));
        EXPECT_EQ(ca.str(), cb.str()) << run.label;
    }
}

TEST(Train, ShuffleDependsOnEpochAndSeed) {
    const auto exp = synthetic_experiment(1.0);
    auto cfg = quick(2);
    const auto a = train_run(exp, parse_model_run("baseline-nn", "none", false), cfg, {}).records[0];
    cfg.seed = 1;
    const auto b = train_run(exp, parse_model_run("baseline-nn", "none", false), cfg, {}).records[0];
    EXPECT_NE(a.epochs[0].train_objective, b.epochs[0].train_objective);
}

TEST(Train, NonFiniteInputIsNumericFault) {
    auto exp = synthetic_experiment(1.0);
    exp.data.train.features(0, 0) = std::numeric_limits<double>::infinity();
    try {
        train_run(exp, parse_model_run("fair-net-branched", "none", false), quick(2), {});
        FAIL() << "expected NumericFault";
    } catch (const NumericFault& e) {
        EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
    }
}

TEST(Train, LossGroupMustExist) {
    const auto exp = synthetic_experiment(1.0);
    Model m = Model::build_fairnet(TrunkSpec{exp.encoder.width(), 5, 1e-4, true}, {"zz"}, Variant::fairnet_branched,
                                   Ablation::none, 0);
    LossSpec spec;
    spec.groups = {"zz"};
    EXPECT_THROW(train(m, exp.data, spec, quick(1)), InvalidArgument);
}

TEST(SubpopSpecific, IdenticalGroupsGiveIdenticalModels) {
    auto exp = synthetic_experiment(1.5);
    for (auto* p : {&exp.data.train, &exp.data.validation, &exp.data.test})
        std::fill(p->membership.begin(), p->membership.end(), GroupMask{3});
    const auto models = train_subpop_specific(exp.data, exp.data.group_names, quick(5));
    ASSERT_EQ(models.size(), 2u);
    const auto& a = models[0].first.parameters();
    const auto& b = models[1].first.parameters();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
    EXPECT_EQ(models[0].first.spec().trunk.hidden_units, 10u);
}

TEST(SubpopSpecific, SingleClassGroupIsError) {
    auto exp = synthetic_experiment(1.5);
    for (std::size_t i = 0; i < exp.data.train.size(); ++i)
        if (exp.data.train.membership[i] == 2u) exp.data.train.targets[i] = 0.0;
    EXPECT_THROW(train_subpop_specific(exp.data, exp.data.group_names, quick(2)), DegenerateStratum);
}
