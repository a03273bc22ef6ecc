#include "fairnet/training.hpp"

#include "fairnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fairnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    return std::mt19937_64(seq);
}

Partition subset(const Partition& p, std::span<const std::size_t> rows) {
    Partition out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), p.features.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.features.row(static_cast<Eigen::Index>(i)) = p.features.row(static_cast<Eigen::Index>(rows[i]));
        out.targets.push_back(p.targets[rows[i]]);
        out.membership.push_back(p.membership[rows[i]]);
    }
    return out;
}

bool member(const Partition& p, std::span<const std::string> names, std::string_view group, std::size_t row) {
    if (group == kAllGroup) return true;
    for (std::size_t g = 0; g < names.size(); ++g)
        if (names[g] == group) return (p.membership[row] >> g) & 1u;
    throw InvalidArgument("unknown group '" + std::string(group) + "'");
}

// GroupBatch list for the partition rows in `rows` (batch row i = rows[i]).
std::vector<GroupBatch> group_batches(const Partition& p, std::span<const std::size_t> rows,
                                      std::span<const std::string> names, const LossSpec& spec,
                                      const std::map<std::string, ClassWeights, std::less<>>& weights) {
    std::vector<GroupBatch> out;
    for (const auto& g : spec.groups) {
        GroupBatch gb;
        gb.group = g;
        gb.weights = weights.at(g);
        std::vector<double> t;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!member(p, names, g, rows[i])) continue;
            gb.rows.push_back(static_cast<Eigen::Index>(i));
            t.push_back(p.targets[rows[i]]);
        }
        gb.targets = Eigen::Map<const ad::Vector>(t.data(), static_cast<Eigen::Index>(t.size()));
        out.push_back(std::move(gb));
    }
    return out;
}

std::vector<GroupComponents> components(const ad::Tape& tape, const LossTerms& terms) {
    std::vector<GroupComponents> out;
    for (const auto& g : terms.groups) {
        GroupComponents c{g.group, g.count, kNaN, kNaN, kNaN};
        if (g.xent) c.xent = tape.scalar(*g.xent);
        if (g.balanced) c.balanced = tape.scalar(*g.balanced);
        if (g.histogram) c.histogram = tape.scalar(*g.histogram);
        out.push_back(c);
    }
    return out;
}

class OptimizerState {
public:
    OptimizerState(const ad::ParameterSet& params, const TrainConfig& config) : config_(config) {
        for (const auto& p : params) {
            m_.push_back(ad::Matrix::Zero(p.values.rows(), p.values.cols()));
            v_.push_back(ad::Matrix::Zero(p.values.rows(), p.values.cols()));
        }
    }

    void step(ad::ParameterSet& params, const ad::Gradients& grads) {
        ++t_;
        const double lr = config_.learning_rate;
        if (config_.optimizer == Optimizer::sgd_momentum) {
            for (std::size_t i = 0; i < params.size(); ++i) {
                m_[i] = config_.momentum * m_[i] + grads[i];
                params[i].values -= lr * m_[i];
            }
            return;
        }
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1 * m_[i] + (1.0 - b1) * grads[i];
            v_[i] = b2 * v_[i] + (1.0 - b2) * grads[i].cwiseProduct(grads[i]);
            params[i].values.array() -=
                lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
        }
    }

private:
    TrainConfig config_;
    std::vector<ad::Matrix> m_;
    std::vector<ad::Matrix> v_;
    std::size_t t_ = 0;
};

std::vector<std::size_t> epoch_order(const Partition& train, const TrainConfig& config, std::size_t epoch) {
    auto rng = epoch_rng(config.seed, epoch);
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    if (!config.group_stratified_batches) return order;

    // Interleave cells: key = (position within cell + 0.5) / cell size.
    std::map<std::pair<GroupMask, int>, std::size_t> cell_size, seen;
    auto cell = [&](std::size_t r) { return std::make_pair(train.membership[r], train.targets[r] > 0.5 ? 1 : 0); };
    for (auto r : order) ++cell_size[cell(r)];
    std::vector<std::pair<double, std::size_t>> keyed;
    keyed.reserve(order.size());
    for (auto r : order) {
        const auto c = cell(r);
        const double key = (static_cast<double>(seen[c]++) + 0.5) / static_cast<double>(cell_size[c]);
        keyed.emplace_back(key, r);
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = keyed[i].second;
    return order;
}

}  // namespace

std::string_view to_string(Optimizer o) noexcept {
    return o == Optimizer::sgd_momentum ? "sgd_momentum" : "adaptive_moment";
}

Optimizer parse_optimizer(std::string_view s) {
    if (s == "sgd_momentum") return Optimizer::sgd_momentum;
    if (s == "adaptive_moment") return Optimizer::adaptive_moment;
    throw InvalidArgument("unknown optimizer '" + std::string(s) + "'; expected sgd_momentum or adaptive_moment");
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw InvalidArgument("learning rate must be finite and non-negative");
    if (batch_size < 8) throw InvalidArgument("batch size must be at least 8");
    if (patience < 1) throw InvalidArgument("patience must be at least 1");
    if (max_epochs < 1) throw InvalidArgument("max epochs must be at least 1");
    if (!(l2_coefficient >= 0.0)) throw InvalidArgument("l2 coefficient must be non-negative");
}

PreparedData prepare(const Dataset& dataset, const SplitSpec& split, const Encoder& encoder,
                     std::vector<std::string>* warnings) {
    PreparedData out;
    out.group_names = dataset.group_names;
    auto build = [&](const std::vector<std::size_t>& rows) {
        Partition p;
        p.features = encoder.transform(dataset, rows, warnings);
        p.targets = dataset.targets_of(rows);
        for (auto r : rows) p.membership.push_back(dataset.membership.at(r));
        return p;
    };
    out.train = build(split.train);
    out.validation = build(split.validation);
    out.test = build(split.test);
    return out;
}

std::vector<std::size_t> partition_members(const Partition& partition, std::span<const std::string> group_names,
                                           std::string_view group) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < partition.size(); ++i)
        if (member(partition, group_names, group, i)) out.push_back(i);
    return out;
}

std::map<std::string, ClassWeights, std::less<>> class_weights(const Partition& partition,
                                                               std::span<const std::string> group_names,
                                                               const LossSpec& spec) {
    std::map<std::string, ClassWeights, std::less<>> out;
    for (const auto& g : spec.groups) {
        std::uint64_t pos = 0, neg = 0;
        for (auto r : partition_members(partition, group_names, g)) (partition.targets[r] > 0.5 ? pos : neg) += 1;
        out.emplace(g, ClassWeights::from_counts(g, pos, neg));
    }
    return out;
}

LossEvaluation evaluate_loss(const Model& model, const Partition& partition, std::span<const std::string> group_names,
                             const LossSpec& spec, const std::map<std::string, ClassWeights, std::less<>>& weights) {
    std::vector<std::size_t> rows(partition.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    ad::Tape tape(model.parameters());
    const auto outputs = model.forward(tape, tape.input(partition.features));
    const auto groups = group_batches(partition, rows, group_names, spec, weights);
    const auto terms = total_loss(tape, model, outputs, groups, spec, false);
    return {tape.scalar(terms.objective), components(tape, terms)};
}

TrainRecord train(Model& model, const PreparedData& data, const LossSpec& spec, const TrainConfig& config) {
    config.validate();
    spec.validate();
    for (const auto& g : spec.groups)
        if (g != kAllGroup && std::find(data.group_names.begin(), data.group_names.end(), g) == data.group_names.end())
            throw InvalidArgument("loss group '" + g + "' is not a dataset group");
    if (data.train.size() == 0 || data.validation.size() == 0)
        throw DegenerateStratum("training needs non-empty train and validation partitions");

    const auto weights = class_weights(data.train, data.group_names, spec);
    auto& params = model.parameters();
    OptimizerState optimizer(params, config);

    TrainRecord record;
    record.config = config;
    record.initial_validation_objective =
        evaluate_loss(model, data.validation, data.group_names, spec, weights).objective;
    double best = record.initial_validation_objective;
    ad::ParameterSet best_params = params;
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto order = epoch_order(data.train, config, epoch);
        EpochRecord er;
        er.epoch = epoch;
        std::size_t batches = 0;
        std::map<std::string, GroupComponents, std::less<>> sums;
        std::map<std::string, std::size_t, std::less<>> seen;

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, end - start);
            ad::Matrix x(static_cast<Eigen::Index>(rows.size()), data.train.features.cols());
            for (std::size_t i = 0; i < rows.size(); ++i)
                x.row(static_cast<Eigen::Index>(i)) = data.train.features.row(static_cast<Eigen::Index>(rows[i]));

            ad::Tape tape(params);
            LossTerms terms;
            try {
                const auto outputs = model.forward(tape, tape.input(std::move(x)));
                const auto groups = group_batches(data.train, rows, data.group_names, spec, weights);
                terms = total_loss(tape, model, outputs, groups, spec, true);
            } catch (const NumericFault& e) {
                throw NumericFault(e.node(), "epoch " + std::to_string(epoch) + ": " + e.what());
            }
            optimizer.step(params, tape.backward(terms.total));

            er.train_objective += tape.scalar(terms.objective);
            ++batches;
            for (const auto& c : components(tape, terms)) {
                auto& s = sums.try_emplace(c.group, GroupComponents{c.group, 0, 0.0, 0.0, 0.0}).first->second;
                s.count += c.count;
                s.xent += c.xent;
                s.balanced += c.balanced;
                s.histogram += c.histogram;
                ++seen[c.group];
            }
        }
        er.train_objective /= static_cast<double>(batches);
        for (const auto& g : spec.groups) {
            const auto it = sums.find(g);
            if (it == sums.end()) continue;
            auto c = it->second;
            const double k = static_cast<double>(seen[g]);
            c.xent /= k;
            c.balanced /= k;
            c.histogram /= k;
            er.train_groups.push_back(c);
        }

        for (const auto& p : params)
            if (!p.values.allFinite())
                throw NumericFault(0, "epoch " + std::to_string(epoch) + ": parameter " + p.name + " diverged");
        const auto val = evaluate_loss(model, data.validation, data.group_names, spec, weights);
        if (!std::isfinite(val.objective))
            throw NumericFault(0, "validation loss is not finite at epoch " + std::to_string(epoch));
        er.validation_objective = val.objective;
        er.validation_groups = val.groups;
        record.epochs.push_back(std::move(er));

        if (val.objective < best) {
            best = val.objective;
            best_params = params;
            record.selected_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    params = best_params;
    record.selected_validation_objective = best;
    return record;
}

std::vector<std::pair<Model, TrainRecord>> train_subpop_specific(const PreparedData& data,
                                                                 std::span<const std::string> groups,
                                                                 const TrainConfig& config, std::size_t hidden_units) {
    std::vector<std::pair<Model, TrainRecord>> out;
    for (const auto& g : groups) {
        const auto train_rows = partition_members(data.train, data.group_names, g);
        const auto val_rows = partition_members(data.validation, data.group_names, g);
        if (train_rows.empty() || val_rows.empty())
            throw DegenerateStratum("group '" + g + "' has no training or validation samples");

        PreparedData sub;
        sub.group_names = {g};
        sub.train = subset(data.train, train_rows);
        sub.validation = subset(data.validation, val_rows);
        for (auto* p : {&sub.train, &sub.validation}) std::fill(p->membership.begin(), p->membership.end(), 1u);

        TrunkSpec trunk{static_cast<std::size_t>(data.train.features.cols()), hidden_units, config.l2_coefficient, true};
        Model model = Model::build_baseline(trunk, g, Variant::subpop_specific, config.seed);
        LossSpec spec;
        spec.groups = {g};
        auto record = train(model, sub, spec, config);
        record.label = "subpop-specific/" + g;
        out.emplace_back(std::move(model), std::move(record));
    }
    return out;
}

}  // namespace fairnet
