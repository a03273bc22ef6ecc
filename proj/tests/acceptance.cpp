// Acceptance suite: one PASS/FAIL line per criterion. Criterion 10 is
// informational and never affects the exit status.
//
// usage: acceptance <fairnet-cli> <work-dir>

#include "fairnet/errors.hpp"
#include "fairnet/experiment.hpp"
#include "fairnet/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
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

struct Verdict {
    int id;
    bool pass;
    bool gating;
    std::string title;
    std::vector<std::string> details;
};

std::vector<Verdict> verdicts;

void report(int id, bool pass, std::string title, std::vector<std::string> details = {}, bool gating = true) {
    std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << (gating ? "" : " (informational)") << "  "
              << title << '\n';
    for (const auto& d : details) std::cout << "    " << d << '\n';
    std::cout.flush();
    verdicts.push_back({id, pass, gating, std::move(title), std::move(details)});
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

fs::path data_dir() {
    if (const char* env = std::getenv("FAIRNET_DATA_DIR"); env && *env) return env;
    return FAIRNET_DEFAULT_DATA_DIR;
}

Dataset load(const std::string& name) {
    return load_dataset(read_manifest(fs::path(FAIRNET_MANIFEST_DIR) / (name + ".manifest")), data_dir());
}

std::vector<std::size_t> all_rows(const Dataset& ds) {
    std::vector<std::size_t> r(ds.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = i;
    return r;
}

const std::vector<std::string> kBlack{"B", "BM", "BF"};

// ---------------------------------------------------------------- criterion 1

void criterion_1(const std::map<std::string, Dataset>& sets) {
    struct Row {
        std::string dataset, group;
        std::size_t n;  // 0: not checked
        double pct;     // NaN: not checked
        double ir;
    };
    const double nan = std::nan("");
    const std::vector<Row> table{
        {"compas", "all", 6172, 45.5, 1.2},          {"credit_default", "all", 30000, 22.12, 3.52},
        {"adult_census", "all", 45222, 24.78, 3.0},  {"compas", "F", 0, nan, 1.8},
        {"compas", "NF", 0, nan, 1.08},              {"credit_default", "M", 0, nan, 3.14},
        {"credit_default", "F", 0, nan, 3.81},       {"adult_census", "B", 0, nan, 6.8},
        {"adult_census", "BM", 0, nan, 4.26},        {"adult_census", "BF", 0, nan, 14.7},
    };
    bool ok = true;
    std::vector<std::string> details;
    for (const auto& row : table) {
        const auto& ds = sets.at(row.dataset);
        for (const auto& s : group_statistics(ds, all_rows(ds))) {
            if (s.group != row.group) continue;
            bool good = std::abs(s.imbalance_ratio - row.ir) <= 0.05 + 1e-12;
            std::string line = fmt("%-15s %-3s IR %.3f (ref %.2f)", row.dataset.c_str(), row.group.c_str(),
                                   s.imbalance_ratio, row.ir);
            if (row.n) {
                good = good && s.size == row.n;
                line += fmt("  N %zu (ref %zu)", s.size, row.n);
            }
            if (!std::isnan(row.pct)) {
                good = good && std::abs(s.positive_percent - row.pct) <= 0.05 + 1e-12;
                line += fmt("  positives %.3f%% (ref %.2f%%)", s.positive_percent, row.pct);
            }
            details.push_back(line + (good ? "" : "  <-- outside tolerance"));
            ok = ok && good;
        }
    }
    report(1, ok, "dataset statistics match reference counts (exact N, +-0.05 on percentages and IR)", details);
}

// ----------------------------------------------------- criteria 2, 3, 4, 9, 10

using SeedEvals = std::map<std::string, Evaluation>;

const GroupReport& group_of(const Evaluation& e, const std::string& g) {
    for (const auto& r : e.groups)
        if (r.group == g) return r;
    throw InvalidArgument("no group " + g);
}

struct Adult {
    std::vector<SeedEvals> seeds;
    std::string first_checkpoint;
    std::string first_record;
};

Adult train_adult(const Dataset& ds) {
    const std::vector<ModelRun> runs{
        parse_model_run("fair-net-branched", "none", false),
        parse_model_run("fair-net-branched", "none", true),
        parse_model_run("fair-net-unbranched", "none", false),
        parse_model_run("fair-net-unbranched", "none", true),
        parse_model_run("baseline-nn", "none", false),
        parse_model_run("subpop-specific", "none", false),
        parse_model_run("fair-net-branched", "drop_primary_Y", false),
        parse_model_run("fair-net-branched", "drop_secondary_Y_prime", false),
    };
    Adult out;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto exp = make_experiment(ds, seed);
        TrainConfig cfg;
        cfg.seed = seed;
        SeedEvals evals;
        for (const auto& run : runs) {
            const auto trained = train_run(exp, run, cfg, {});
            evals.emplace(run.label, evaluate(exp, trained, run.label));
            if (seed == 0 && run.label == "fair-net-branched") {
                std::ostringstream os;
                write_checkpoint(os, std::span<const Classifier>(&trained.classifier, 1));
                out.first_checkpoint = os.str();
                out.first_record = to_json(trained.records[0]).dump() + to_json(evals.at(run.label)).dump();
            }
        }
        std::cerr << "adult seed " << seed << " trained\n";
        out.seeds.push_back(std::move(evals));
    }
    return out;
}

void criterion_2(const Adult& a) {
    double f = 0, auc = 0, ece = 0, fstd = 0;
    std::vector<std::string> details;
    for (std::size_t s = 0; s < a.seeds.size(); ++s) {
        const auto& d = a.seeds[s].at("fair-net-branched").disparity;
        details.push_back(fmt("seed %zu: F %.4f+-%.4f  AUC %.4f+-%.4f  ECE %.4f+-%.4f", s, d.f_measure.mean,
                              d.f_measure.std, d.roc_auc.mean, d.roc_auc.std, d.ece.mean, d.ece.std));
        f += d.f_measure.mean;
        auc += d.roc_auc.mean;
        ece += d.ece.mean;
        fstd += d.f_measure.std;
    }
    const double k = static_cast<double>(a.seeds.size());
    f /= k, auc /= k, ece /= k, fstd /= k;
    const bool ok = std::abs(f - 0.69) <= 0.03 && std::abs(auc - 0.917) <= 0.015 && ece <= 0.016 + 0.015 &&
                    fstd <= 0.05;
    details.push_back(fmt("5-seed average of across-group (8 groups) mean/std: F %.4f (band 0.69+-0.03), AUC %.4f "
                          "(0.917+-0.015), ECE %.4f (<= 0.031), F std %.4f (<= 0.05)",
                          f, auc, ece, fstd));
    report(2, ok, "across-group F, AUC, ECE band for Fair-Net Branched on adult census", details);
}

void criterion_3(const Adult& a) {
    int va = 0, vb = 0, vc = 0, vc_branched = 0, vc_unbranched = 0;
    std::vector<std::string> details;
    for (std::size_t s = 0; s < a.seeds.size(); ++s) {
        const auto& e = a.seeds[s];
        bool ca = true, cb = true;
        for (const auto& g : {"all", "B", "BM", "BF"})
            ca = ca && group_of(e.at("fair-net-branched"), g).ece < group_of(e.at("baseline-nn"), g).ece;
        for (const auto& g : kBlack)
            cb = cb && group_of(e.at("fair-net-branched"), g).f_measure_max >
                           group_of(e.at("subpop-specific"), g).f_measure_max;
        const double eb = group_of(e.at("fair-net-branched"), "all").ece;
        const double ebh = group_of(e.at("fair-net-branched+hist"), "all").ece;
        const double eu = group_of(e.at("fair-net-unbranched"), "all").ece;
        const double euh = group_of(e.at("fair-net-unbranched+hist"), "all").ece;
        const bool c1 = ebh <= eb, c2 = euh <= eu;
        va += ca, vb += cb, vc += c1 && c2, vc_branched += c1, vc_unbranched += c2;
        details.push_back(fmt("seed %zu: (a) %s (b) %s (c) branched %.4f->%.4f %s, unbranched %.4f->%.4f %s", s,
                              ca ? "yes" : "no", cb ? "yes" : "no", eb, ebh, c1 ? "yes" : "no", eu, euh,
                              c2 ? "yes" : "no"));
    }
    const int half = static_cast<int>(a.seeds.size()) / 2;
    details.push_back(fmt("votes: (a) %d/5  (b) %d/5  (c) %d/5 (branched pair %d/5, unbranched pair %d/5)", va, vb,
                          vc, vc_branched, vc_unbranched));
    report(3, va > half && vb > half && vc > half,
           "ordering claims on adult census, majority over 5 seeds for each of (a), (b), (c)", details);
}

void criterion_4(const Adult& a) {
    const std::vector<std::string> settings{"fair-net-branched", "fair-net-branched/drop_primary_Y",
                                            "fair-net-branched/drop_secondary_Y_prime"};
    auto seed_values = [&](const std::string& model, const std::string& group, bool f) {
        std::vector<double> v;
        for (const auto& e : a.seeds) {
            const auto& r = group_of(e.at(model), group);
            v.push_back(f ? r.f_measure_max : r.ece);
        }
        return v;
    };
    auto mean = [](const std::vector<double>& v) { return mean_std(v).mean; };
    // Tied: the mean paired (per-seed) difference is within one standard error.
    std::vector<std::string> details;
    auto tied_or_better = [&](const std::string& group, const std::string& other, bool f) {
        const auto full = seed_values(settings[0], group, f), alt = seed_values(other, group, f);
        std::vector<double> diff;
        for (std::size_t i = 0; i < full.size(); ++i) diff.push_back(f ? full[i] - alt[i] : alt[i] - full[i]);
        const auto ms = mean_std(diff);
        const double se = ms.std * std::sqrt(1.0 / static_cast<double>(diff.size() - 1));
        if (ms.mean < -se)
            details.push_back(fmt("%-2s %s: full worse than %s by %.4f, standard error %.4f", group.c_str(),
                                  f ? "F" : "ECE", other.c_str(), -ms.mean, se));
        return ms.mean >= -se;
    };

    bool ok = true;
    for (const auto& g : kBlack) {
        const double ece_full = mean(seed_values(settings[0], g, false));
        const double ece_noy = mean(seed_values(settings[1], g, false));
        const double ece_noyp = mean(seed_values(settings[2], g, false));
        const double f_full = mean(seed_values(settings[0], g, true));
        const double f_noy = mean(seed_values(settings[1], g, true));
        const double f_noyp = mean(seed_values(settings[2], g, true));
        const bool up = ece_noy > ece_full;
        const bool down = f_noyp < f_full;
        bool best = true;
        for (std::size_t k = 1; k < 3; ++k)
            best = best && tied_or_better(g, settings[k], false) && tied_or_better(g, settings[k], true);
        ok = ok && up && down && best;
        details.push_back(fmt("%-2s ECE full %.4f / no Y %.4f / no Y' %.4f   F full %.4f / no Y %.4f / no Y' %.4f   "
                              "[Y drop raises ECE: %s, Y' drop lowers F: %s, full best or tied: %s]",
                              g.c_str(), ece_full, ece_noy, ece_noyp, f_full, f_noy, f_noyp, up ? "yes" : "no",
                              down ? "yes" : "no", best ? "yes" : "no"));
    }
    report(4, ok, "ablation directions on B/BM/BF (5-seed means)", details);
}

void criterion_10(const Adult& a) {
    const std::vector<std::string> cols{"all", "W", "M", "WM", "F", "WF", "B", "BM", "BF"};
    const std::vector<double> ref{16.29, 17.09, 20.1, 21.7, 7.67, 7.95, 9.5, 13.25, 3.83};
    bool ok = true;
    std::string line = "classification error % (5-seed mean vs reference):";
    for (std::size_t i = 0; i < cols.size(); ++i) {
        double m = 0;
        for (const auto& e : a.seeds) m += group_of(e.at("fair-net-branched"), cols[i]).classification_error_pct;
        m /= static_cast<double>(a.seeds.size());
        const bool in = std::abs(m - ref[i]) <= 3.0;
        ok = ok && in;
        line += fmt(" %s %.2f/%.2f%s", cols[i].c_str(), m, ref[i], in ? "" : "(!)");
    }
    report(10, ok, "classification-error row within +-3 points per group", {line,
           "reference split, feature encoding and training regime are unknown; deviations are expected"},
           false);
}

// ---------------------------------------------------------------- criterion 5

void criterion_5(const Dataset& adult) {
    const auto exp = make_experiment(adult, 0);
    const TrunkSpec trunk{exp.encoder.width(), 5, 1e-4, true};
    const auto b = Model::build_fairnet(trunk, exp.data.group_names, Variant::fairnet_branched, Ablation::none, 0);
    const auto u = Model::build_fairnet(trunk, exp.data.group_names, Variant::fairnet_unbranched, Ablation::none, 0);
    // Count branch scalars by name, independent of the model's own bookkeeping.
    auto count = [](const Model& m) {
        std::size_t n = 0;
        for (const auto& p : m.parameters())
            if (p.name.rfind("branch.", 0) == 0) n += static_cast<std::size_t>(p.values.size());
        return n;
    };
    const bool ok = count(b) == 48 && b.branch_parameter_count() == 48 && count(u) == 6 &&
                    u.branch_parameter_count() == 6 && exp.data.group_names.size() == 8;
    report(5, ok, "branch parameter counts: Branched 6 x 8 = 48, Un-Branched 6",
           {fmt("branched %zu, unbranched %zu, groups %zu, encoded width %zu", count(b), count(u),
                exp.data.group_names.size(), exp.encoder.width())});
}

// ---------------------------------------------------------------- criterion 6

struct Inst {
    std::vector<double> p, t;
};

Inst instance(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (;;) {
        Inst in;
        const int n = std::uniform_int_distribution<int>(2, 12)(rng);
        for (int i = 0; i < n; ++i) {
            const bool on_grid = rng() & 1;
            in.p.push_back(on_grid ? std::uniform_int_distribution<int>(0, 10)(rng) / 10.0
                                   : std::uniform_real_distribution<double>(0, 1)(rng));
            in.t.push_back(static_cast<double>(rng() & 1));
        }
        int pos = 0;
        for (double v : in.t) pos += v > 0.5;
        if (pos > 0 && pos < n) return in;
    }
}

void criterion_6() {
    long mismatches = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto in = instance(seed + 7919);
        const auto n = in.p.size();
        // F: every threshold, ties to the lower threshold.
        double bf = -1, bth = 2;
        std::vector<double> ths{0.0, 1.0};
        ths.insert(ths.end(), in.p.begin(), in.p.end());
        for (double th : ths) {
            double tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const bool c = in.p[i] >= th;
                tp += c && in.t[i] == 1;
                fp += c && in.t[i] == 0;
                fn += !c && in.t[i] == 1;
            }
            const double f = tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
            if (f > bf || (f == bf && th < bth)) bf = f, bth = th;
        }
        const auto fm = max_f_measure(in.p, in.t);
        mismatches += fm.f != bf || fm.threshold != bth;
        // AUC: all positive/negative pairs.
        double wins = 0, pairs = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (in.t[i] == 1 && in.t[j] == 0) {
                    pairs += 1;
                    wins += in.p[i] > in.p[j] ? 1.0 : in.p[i] == in.p[j] ? 0.5 : 0.0;
                }
        mismatches += roc_auc(in.p, in.t) != wins / pairs;
        // ECE: interval membership per bin.
        for (std::size_t bins : {2u, 10u, 20u}) {
            double total = 0;
            for (std::size_t b = 0; b < bins; ++b) {
                const double lo = double(b) / bins, hi = double(b + 1) / bins;
                double c = 0, ps = 0, pos = 0;
                for (std::size_t i = 0; i < n; ++i)
                    if (in.p[i] >= lo && (in.p[i] < hi || b + 1 == bins)) c += 1, ps += in.p[i], pos += in.t[i];
                if (c > 0) total += (c / double(n)) * std::abs(pos / c - ps / c);
            }
            mismatches += ece(in.p, in.t, bins) != total;
        }
    }
    // Perfectly calibrated constructions: dyadic predictions, positives matching exactly.
    long nonzero = 0;
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> p, t;
        std::map<std::size_t, bool> used;
        for (int k = 0; k < 6; ++k) {
            const int size = 1 << std::uniform_int_distribution<int>(0, 3)(rng);
            const int pos = std::uniform_int_distribution<int>(0, size)(rng);
            const double v = double(pos) / size;
            if (used[bin_of(v, 10)]) continue;
            used[bin_of(v, 10)] = true;
            for (int i = 0; i < size; ++i) p.push_back(v), t.push_back(i < pos ? 1.0 : 0.0);
        }
        nonzero += ece(p, t, 10) != 0.0;
    }
    report(6, mismatches == 0 && nonzero == 0,
           "max F, ROC AUC and ECE equal brute-force oracles on 1000 random instances (N <= 12); calibrated "
           "constructions give ECE 0",
           {fmt("oracle mismatches %ld, non-zero ECE on calibrated constructions %ld of 1000", mismatches, nonzero)});
}

// ---------------------------------------------------------------- criterion 7

void criterion_7(const Dataset& adult) {
    const auto exp = make_experiment(adult, 0);
    const auto& names = exp.data.group_names;
    double worst = 0;
    std::string where;
    for (std::uint64_t init = 0; init < 100; ++init) {
        std::mt19937_64 rng(1000 + init);
        auto model = Model::build_fairnet(TrunkSpec{exp.encoder.width(), 5, 1e-4, true}, names,
                                          Variant::fairnet_branched, Ablation::none, init);
        std::normal_distribution<double> normal(0.0, 0.5);
        for (std::size_t i = 0; i < model.parameters().size(); ++i) {
            auto& v = model.parameters()[i].values;
            for (Eigen::Index k = 0; k < v.size(); ++k) v.data()[k] += normal(rng);
        }
        // 96 random training rows, real group memberships.
        std::vector<std::size_t> rows;
        std::uniform_int_distribution<std::size_t> pick(0, exp.data.train.size() - 1);
        for (int i = 0; i < 96; ++i) rows.push_back(pick(rng));
        ad::Matrix x(96, exp.data.train.features.cols());
        for (int i = 0; i < 96; ++i) x.row(i) = exp.data.train.features.row(static_cast<Eigen::Index>(rows[i]));

        LossSpec spec;
        spec.groups = names;
        spec.use_histogram = true;
        const auto weights = class_weights(exp.data.train, names, spec);
        std::vector<GroupBatch> groups;
        for (std::size_t g = 0; g < names.size(); ++g) {
            GroupBatch gb{names[g], {}, {}, weights.at(names[g])};
            std::vector<double> t;
            for (int i = 0; i < 96; ++i)
                if ((exp.data.train.membership[rows[i]] >> g) & 1u) {
                    gb.rows.push_back(i);
                    t.push_back(exp.data.train.targets[rows[i]]);
                }
            gb.targets = Eigen::Map<ad::Vector>(t.data(), static_cast<Eigen::Index>(t.size()));
            groups.push_back(std::move(gb));
        }
        FrozenBins frozen;
        {
            ad::Tape tape(model.parameters());
            const auto out = model.forward(tape, tape.input(x));
            for (std::size_t g = 0; g < names.size(); ++g) {
                std::vector<double> y;
                for (auto r : groups[g].rows) y.push_back(tape.value(*out.branches[g].y)(r, 0));
                frozen[names[g]] = bin_assignment(y, spec.histogram_bins);
            }
        }
        const auto r = ad::finite_difference_check(
            model.parameters(),
            [&](ad::Tape& tape) {
                const auto out = model.forward(tape, tape.input(x));
                return total_loss(tape, model, out, groups, spec, true, &frozen).total;
            },
            1e-5);
        if (r.max_relative_error > worst) {
            worst = r.max_relative_error;
            where = fmt("init %llu, %s[%lld]", static_cast<unsigned long long>(init), r.worst_parameter.c_str(),
                        static_cast<long long>(r.worst_entry));
        }
    }
    report(7, worst < 1e-4,
           "finite differences match gradients of the full objective with histogram surrogate (100 initialisations)",
           {fmt("max relative error %.3e at %s", worst, where.c_str())});
}

// ---------------------------------------------------------------- criterion 8

void criterion_8(const std::map<std::string, Dataset>& sets) {
    std::size_t checked = 0, failed = 0;
    double worst_float = 0;
    for (const auto& [name, ds] : sets) {
        const auto exp = make_experiment(ds, 0);
        std::vector<std::string> groups{std::string(kAllGroup)};
        groups.insert(groups.end(), ds.group_names.begin(), ds.group_names.end());
        LossSpec spec;
        spec.groups = groups;
        // Full dataset counts and the training-split counts the trainer uses.
        std::vector<std::map<std::string, ClassWeights, std::less<>>> tables{class_weights(exp.data.train, ds.group_names, spec)};
        {
            std::map<std::string, ClassWeights, std::less<>> full;
            for (const auto& s : group_statistics(ds, all_rows(ds)))
                full.emplace(s.group, ClassWeights::from_counts(s.group, s.positives, s.size - s.positives));
            tables.push_back(std::move(full));
        }
        for (const auto& table : tables)
            for (const auto& [g, w] : table) {
                ++checked;
                const bool exact = w.classes_equally_weighted() && w.total_weight_preserved();
                const double p = static_cast<double>(w.positives), n = static_cast<double>(w.negatives);
                const double N = static_cast<double>(w.total);
                const double e1 = std::abs(w.w_pos * p - w.w_neg * n) / N;
                const double e2 = std::abs(w.w_pos * p + w.w_neg * n - N) / N;
                worst_float = std::max({worst_float, e1, e2});
                failed += !exact || e1 > 1e-15 || e2 > 1e-15;
            }
    }
    report(8, failed == 0, "w_pos*p_g = w_neg*n_g and w_pos*p_g + w_neg*n_g = N_g for every group of every benchmark",
           {fmt("%zu weight tables checked (full data and training split), %zu failures; exact integer identity; "
                "worst floating-point relative residual %.2e",
                checked, failed, worst_float)});
}

// ---------------------------------------------------------------- criterion 9

std::map<std::string, std::string> read_tree(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream is(e.path(), std::ios::binary);
        std::ostringstream ss;
        ss << is.rdbuf();
        out[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return out;
}

void criterion_9(const Adult& first, const Dataset& adult, const std::string& cli, const fs::path& work) {
    std::vector<std::string> details;
    bool ok = true;

    // In-process: retrain adult seed 0.
    {
        const auto exp = make_experiment(adult, 0);
        TrainConfig cfg;
        const auto run = parse_model_run("fair-net-branched", "none", false);
        const auto trained = train_run(exp, run, cfg, {});
        std::ostringstream os;
        write_checkpoint(os, std::span<const Classifier>(&trained.classifier, 1));
        const bool same_ckpt = os.str() == first.first_checkpoint;
        const bool same_rec =
            to_json(trained.records[0]).dump() + to_json(evaluate(exp, trained, run.label)).dump() == first.first_record;
        ok = ok && same_ckpt && same_rec;
        details.push_back(fmt("adult fair-net-branched seed 0 retrained: checkpoint %s, record+report %s",
                              same_ckpt ? "identical" : "DIFFERENT", same_rec ? "identical" : "DIFFERENT"));
    }
    // Through the command line, twice each.
    const std::vector<std::pair<std::string, std::string>> commands{
        {"train", "train --dataset compas --variant fair-net-branched --histogram --seed 7"},
        {"subpop", "train --dataset credit_default --variant subpop-specific --seed 3 --epochs 5"},
        {"ablate", "ablate --dataset compas --seeds 2 --epochs 5"},
    };
    for (const auto& [tag, args] : commands) {
        std::map<std::string, std::string> trees[2];
        bool ran = true;
        for (int k = 0; k < 2; ++k) {
            const auto out = work / (tag + "_" + std::to_string(k));
            fs::remove_all(out);
            const std::string cmd = "\"" + cli + "\" " + args + " --out \"" + out.string() + "\" > /dev/null 2>&1";
            ran = ran && std::system(cmd.c_str()) == 0;
            if (ran) trees[k] = read_tree(out);
        }
        const bool same = ran && !trees[0].empty() && trees[0] == trees[1];
        ok = ok && same;
        details.push_back(fmt("fairnet %s: %zu files, %s", args.c_str(), trees[0].size(),
                              !ran ? "command failed" : same ? "byte-identical" : "DIFFERENT"));
    }
    report(9, ok, "same (config, seed) reproduces checkpoints and reports byte-identically", details);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::cerr << "usage: acceptance <fairnet-cli> <work-dir>\n";
        return static_cast<int>(ExitCode::usage);
    }
    const std::string cli = argv[1];
    const fs::path work = argv[2];
    fs::create_directories(work);

    try {
        std::map<std::string, Dataset> sets;
        for (const auto* name : {"compas", "credit_default", "adult_census"}) sets.emplace(name, load(name));

        criterion_1(sets);
        criterion_5(sets.at("adult_census"));
        criterion_6();
        criterion_7(sets.at("adult_census"));
        criterion_8(sets);
        const auto adult = train_adult(sets.at("adult_census"));
        criterion_2(adult);
        criterion_3(adult);
        criterion_4(adult);
        criterion_9(adult, sets.at("adult_census"), cli, work);
        criterion_10(adult);
    } catch (const Error& e) {
        std::cout << "acceptance aborted: " << e.what() << '\n';
        return static_cast<int>(e.code());
    }

    Json summary = Json::array();
    int failed = 0;
    std::sort(verdicts.begin(), verdicts.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::cout << "\nsummary:\n";
    for (const auto& v : verdicts) {
        std::cout << "  criterion " << v.id << ": " << (v.pass ? "PASS" : "FAIL") << (v.gating ? "" : " (informational)")
                  << '\n';
        failed += v.gating && !v.pass;
        summary.push_back({{"criterion", v.id}, {"pass", v.pass}, {"gating", v.gating}, {"title", v.title},
                           {"details", v.details}});
    }
    write_json(work / "acceptance.json", summary);
    std::cout << failed << " gating criteria failed\n";
    return failed == 0 ? 0 : 1;
}
