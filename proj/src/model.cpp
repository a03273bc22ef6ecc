#include "fairnet/model.hpp"

#include "fairnet/errors.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace fairnet {

namespace {

constexpr std::string_view kHiddenWeight = "trunk.hidden.weight";
constexpr std::string_view kHiddenBias = "trunk.hidden.bias";
constexpr std::string_view kScoreWeight = "trunk.score.weight";
constexpr std::string_view kScoreBias = "trunk.score.bias";

std::string branch_param(std::string_view group, std::string_view head, std::string_view kind) {
    std::string s = "branch.";
    s += group;
    s += '.';
    s += head;
    s += '.';
    s += kind;
    return s;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

ad::Matrix glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    ad::Matrix m(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
    // Column-major fill order is part of the determinism contract.
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = (2.0 * uniform01(rng) - 1.0) * limit;
    return m;
}

void add_trunk(ad::ParameterSet& params, const TrunkSpec& trunk, std::mt19937_64& rng) {
    if (trunk.input_width == 0) throw InvalidArgument("trunk input width must be positive");
    if (trunk.hidden_units == 0) throw InvalidArgument("trunk needs at least one hidden unit");
    if (!trunk.emits_scalar_score) throw InvalidArgument("branch heads require a trunk that emits a scalar score");
    const auto h = static_cast<Eigen::Index>(trunk.hidden_units);
    params.add(std::string(kHiddenWeight), glorot(trunk.input_width, trunk.hidden_units, rng), trunk.l2_coefficient);
    params.add(std::string(kHiddenBias), ad::Matrix::Zero(1, h));
    params.add(std::string(kScoreWeight), glorot(trunk.hidden_units, 1, rng), trunk.l2_coefficient);
    params.add(std::string(kScoreBias), ad::Matrix::Zero(1, 1));
}

template <typename E>
struct Named {
    E value;
    std::string_view name;
};

constexpr Named<Variant> kVariants[] = {
    {Variant::fairnet_branched, "fair-net-branched"},
    {Variant::fairnet_unbranched, "fair-net-unbranched"},
    {Variant::calnet, "cal-net"},
    {Variant::baseline_balanced_xent, "baseline-nn"},
    {Variant::subpop_specific, "subpop-specific"},
};
constexpr Named<Ablation> kAblations[] = {
    {Ablation::none, "none"},
    {Ablation::drop_primary_y, "drop_primary_Y"},
    {Ablation::drop_secondary_y_prime, "drop_secondary_Y_prime"},
};
constexpr Named<Activation> kActivations[] = {
    {Activation::elu, "elu"},
    {Activation::identity, "identity"},
};

template <typename E, std::size_t N>
std::string_view name_of(const Named<E> (&table)[N], E v) noexcept {
    for (const auto& e : table)
        if (e.value == v) return e.name;
    return "unknown";
}

template <typename E, std::size_t N>
E parse(const Named<E> (&table)[N], std::string_view s, std::string_view what) {
    for (const auto& e : table)
        if (e.name == s) return e.value;
    std::string msg = "unknown " + std::string(what) + " '" + std::string(s) + "'; expected one of:";
    for (const auto& e : table) msg += " " + std::string(e.name);
    throw InvalidArgument(msg);
}

}  // namespace

std::string_view to_string(Variant v) noexcept { return name_of(kVariants, v); }
std::string_view to_string(Ablation a) noexcept { return name_of(kAblations, a); }
std::string_view to_string(Activation a) noexcept { return name_of(kActivations, a); }
Variant parse_variant(std::string_view s) { return parse(kVariants, s, "variant"); }
Ablation parse_ablation(std::string_view s) { return parse(kAblations, s, "ablation"); }
Activation parse_activation(std::string_view s) { return parse(kActivations, s, "activation"); }

std::size_t BranchSpec::parameter_count() const noexcept {
    if (!has_bottleneck) return 0;
    return 2 + (has_primary_output ? 2 : 0) + (has_secondary_output ? 2 : 0);
}

Model Model::build_fairnet(const TrunkSpec& trunk, const std::vector<std::string>& groups, Variant variant,
                           Ablation ablation, std::uint64_t seed, Activation bottleneck) {
    if (groups.empty()) throw InvalidArgument("build_fairnet requires at least one group");
    if (variant != Variant::fairnet_branched && variant != Variant::fairnet_unbranched && variant != Variant::calnet)
        throw InvalidArgument("build_fairnet cannot build variant " + std::string(to_string(variant)));

    Model m;
    m.spec_.variant = variant;
    m.spec_.ablation = ablation;
    m.spec_.trunk = trunk;
    m.spec_.bottleneck = bottleneck;

    std::vector<std::string> branch_groups;
    if (variant == Variant::fairnet_branched)
        branch_groups = groups;
    else
        branch_groups.emplace_back(kAllGroup);

    std::mt19937_64 rng(seed);
    add_trunk(m.params_, trunk, rng);
    for (const auto& g : branch_groups) {
        if (g.empty() || g.find_first_of(" \t\n") != std::string::npos)
            throw InvalidArgument("group names must be non-empty and contain no whitespace: '" + g + "'");
        BranchSpec b{g, ablation != Ablation::drop_primary_y, ablation != Ablation::drop_secondary_y_prime, true};
        if (m.branch_index(g)) throw InvalidArgument("duplicate group " + g);
        m.spec_.branches.push_back(b);
        const ad::Matrix one = ad::Matrix::Ones(1, 1);
        const ad::Matrix zero = ad::Matrix::Zero(1, 1);
        m.params_.add(branch_param(g, "h", "weight"), one, trunk.l2_coefficient);
        m.params_.add(branch_param(g, "h", "bias"), zero);
        if (b.has_primary_output) {
            m.params_.add(branch_param(g, "y", "weight"), one, trunk.l2_coefficient);
            m.params_.add(branch_param(g, "y", "bias"), zero);
        }
        if (b.has_secondary_output) {
            m.params_.add(branch_param(g, "y_prime", "weight"), one, trunk.l2_coefficient);
            m.params_.add(branch_param(g, "y_prime", "bias"), zero);
        }
    }
    return m;
}

Model Model::build_baseline(const TrunkSpec& trunk, std::string group, Variant variant, std::uint64_t seed) {
    if (variant != Variant::baseline_balanced_xent && variant != Variant::subpop_specific)
        throw InvalidArgument("build_baseline cannot build variant " + std::string(to_string(variant)));
    if (group.empty() || group.find_first_of(" \t\n") != std::string::npos)
        throw InvalidArgument("group names must be non-empty and contain no whitespace");
    Model m;
    m.spec_.variant = variant;
    m.spec_.trunk = trunk;
    m.spec_.branches.push_back(BranchSpec{std::move(group), false, true, false});
    std::mt19937_64 rng(seed);
    add_trunk(m.params_, trunk, rng);
    return m;
}

Model::Model(ModelSpec spec, ad::ParameterSet params) : spec_(std::move(spec)), params_(std::move(params)) {
    validate();
}

void Model::validate() const {
    const auto& t = spec_.trunk;
    auto expect = [&](std::string_view name, Eigen::Index rows, Eigen::Index cols) {
        const auto idx = params_.find(name);
        if (idx == params_.size()) throw InvalidArgument("model is missing parameter " + std::string(name));
        const auto& v = params_[idx].values;
        if (v.rows() != rows || v.cols() != cols)
            throw InvalidArgument("parameter " + std::string(name) + " has the wrong shape");
    };
    if (t.input_width == 0 || t.hidden_units == 0) throw InvalidArgument("invalid trunk spec");
    if (spec_.branches.empty()) throw InvalidArgument("model has no branches");
    const auto d = static_cast<Eigen::Index>(t.input_width);
    const auto h = static_cast<Eigen::Index>(t.hidden_units);
    expect(kHiddenWeight, d, h);
    expect(kHiddenBias, 1, h);
    expect(kScoreWeight, h, 1);
    expect(kScoreBias, 1, 1);
    std::size_t expected = 4;
    for (const auto& b : spec_.branches) {
        if (!b.has_primary_output && !b.has_secondary_output) throw InvalidArgument("branch has no outputs");
        if (!b.has_bottleneck) continue;
        expect(branch_param(b.group, "h", "weight"), 1, 1);
        expect(branch_param(b.group, "h", "bias"), 1, 1);
        if (b.has_primary_output) {
            expect(branch_param(b.group, "y", "weight"), 1, 1);
            expect(branch_param(b.group, "y", "bias"), 1, 1);
        }
        if (b.has_secondary_output) {
            expect(branch_param(b.group, "y_prime", "weight"), 1, 1);
            expect(branch_param(b.group, "y_prime", "bias"), 1, 1);
        }
        expected += b.parameter_count();
    }
    if (expected != params_.size()) throw InvalidArgument("model has parameters its spec does not reference");
}

Model::Outputs Model::forward(ad::Tape& tape, ad::NodeId input) const {
    if (tape.value(input).cols() != static_cast<Eigen::Index>(spec_.trunk.input_width)) {
        std::ostringstream os;
        os << "feature width " << tape.value(input).cols() << " does not match model input width "
           << spec_.trunk.input_width;
        throw InvalidArgument(os.str());
    }
    Outputs out;
    const auto hidden = tape.elu(tape.affine(input, tape.parameter(kHiddenWeight), tape.parameter(kHiddenBias)));
    out.score = tape.affine(hidden, tape.parameter(kScoreWeight), tape.parameter(kScoreBias));
    for (const auto& b : spec_.branches) {
        BranchNodes nodes;
        if (!b.has_bottleneck) {
            nodes.h = out.score;
            nodes.y_prime = tape.sigmoid(out.score);
            out.branches.push_back(nodes);
            continue;
        }
        auto pre = tape.affine(out.score, tape.parameter(branch_param(b.group, "h", "weight")),
                               tape.parameter(branch_param(b.group, "h", "bias")));
        nodes.h = spec_.bottleneck == Activation::elu ? tape.elu(pre) : pre;
        if (b.has_primary_output)
            nodes.y = tape.sigmoid(tape.affine(nodes.h, tape.parameter(branch_param(b.group, "y", "weight")),
                                               tape.parameter(branch_param(b.group, "y", "bias"))));
        if (b.has_secondary_output)
            nodes.y_prime =
                tape.sigmoid(tape.affine(nodes.h, tape.parameter(branch_param(b.group, "y_prime", "weight")),
                                         tape.parameter(branch_param(b.group, "y_prime", "bias"))));
        out.branches.push_back(nodes);
    }
    return out;
}

std::optional<std::size_t> Model::branch_index(std::string_view group) const noexcept {
    for (std::size_t i = 0; i < spec_.branches.size(); ++i)
        if (spec_.branches[i].group == group) return i;
    return std::nullopt;
}

ad::Vector Model::predict_branch(const ad::Matrix& features, std::size_t branch) const {
    if (branch >= spec_.branches.size()) throw InvalidArgument("branch index out of range");
    ad::Tape tape(params_);
    const auto out = forward(tape, tape.input(features));
    return tape.value(out.branches[branch].probability()).col(0);
}

ad::Vector Model::predict(const ad::Matrix& features, std::span<const std::string> group_of) const {
    if (group_of.size() != static_cast<std::size_t>(features.rows()))
        throw InvalidArgument("group_of length does not match the number of rows");
    const bool single = spec_.branches.size() == 1;
    std::vector<std::size_t> branch_of(group_of.size(), 0);
    if (!single) {
        for (std::size_t i = 0; i < group_of.size(); ++i) {
            const auto b = branch_index(group_of[i]);
            if (!b) throw InvalidArgument("no branch for group '" + group_of[i] + "'");
            branch_of[i] = *b;
        }
    }
    ad::Tape tape(params_);
    const auto out = forward(tape, tape.input(features));
    ad::Vector result(features.rows());
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        result(i) = tape.value(out.branches[branch_of[static_cast<std::size_t>(i)]].probability())(i, 0);
    return result;
}

std::size_t Model::trunk_parameter_count() const noexcept {
    const auto d = spec_.trunk.input_width, h = spec_.trunk.hidden_units;
    return d * h + h + h + 1;
}

std::size_t Model::branch_parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& b : spec_.branches) n += b.parameter_count();
    return n;
}

ad::Vector Classifier::predict_group(const ad::Matrix& features, std::string_view group) const {
    if (members.empty()) throw InvalidArgument("classifier '" + label + "' has no models");
    for (const auto& m : members) {
        if (const auto b = m.branch_index(group)) return m.predict_branch(features, *b);
    }
    if (members.size() == 1 && members.front().spec().branches.size() == 1)
        return members.front().predict_branch(features, 0);
    throw InvalidArgument("classifier '" + label + "' has no head for group '" + std::string(group) + "'");
}

ad::Vector Classifier::predict_rows(const ad::Matrix& features, std::span<const std::string> group_of) const {
    if (group_of.size() != static_cast<std::size_t>(features.rows()))
        throw InvalidArgument("group_of length does not match the number of rows");
    if (members.size() == 1) return members.front().predict(features, group_of);

    // Score each group's rows with that group's member, then scatter back.
    ad::Vector result(features.rows());
    std::vector<std::string> seen;
    for (std::size_t i = 0; i < group_of.size(); ++i) {
        const auto& g = group_of[i];
        bool done = false;
        for (const auto& s : seen) done = done || s == g;
        if (done) continue;
        seen.push_back(g);
        std::vector<Eigen::Index> rows;
        for (std::size_t j = i; j < group_of.size(); ++j)
            if (group_of[j] == g) rows.push_back(static_cast<Eigen::Index>(j));
        ad::Matrix sub(static_cast<Eigen::Index>(rows.size()), features.cols());
        for (std::size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = features.row(rows[r]);
        const ad::Vector p = predict_group(sub, g);
        for (std::size_t r = 0; r < rows.size(); ++r) result(rows[r]) = p(static_cast<Eigen::Index>(r));
    }
    return result;
}

std::string_view to_string(Monotonicity m) noexcept {
    switch (m) {
        case Monotonicity::co_monotone: return "co_monotone";
        case Monotonicity::anti_monotone: return "anti_monotone";
        case Monotonicity::neither: return "neither";
        case Monotonicity::not_applicable: return "not_applicable";
    }
    return "unknown";
}

Monotonicity check_monotone_link(const Model& model, std::string_view group, std::span<const double> probe) {
    const auto b = model.branch_index(group);
    if (!b) throw InvalidArgument("no branch for group '" + std::string(group) + "'");
    const auto& spec = model.spec().branches[*b];
    if (!spec.has_bottleneck || !spec.has_primary_output || !spec.has_secondary_output)
        return Monotonicity::not_applicable;

    const auto& p = model.parameters();
    auto scalar = [&](std::string_view head, std::string_view kind) {
        return p[p.find(branch_param(group, head, kind))].values(0, 0);
    };
    const double w2 = scalar("y", "weight"), b2 = scalar("y", "bias");
    const double w3 = scalar("y_prime", "weight"), b3 = scalar("y_prime", "bias");
    auto sig = [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); };

    bool y_up = true, y_down = true, yp_up = true, yp_down = true;
    for (std::size_t i = 1; i < probe.size(); ++i) {
        const double dy = sig(w2 * probe[i] + b2) - sig(w2 * probe[i - 1] + b2);
        const double dyp = sig(w3 * probe[i] + b3) - sig(w3 * probe[i - 1] + b3);
        const double dh = probe[i] - probe[i - 1];
        // Orient each step by the direction of H so unsorted probes work.
        const double sy = dh >= 0 ? dy : -dy;
        const double syp = dh >= 0 ? dyp : -dyp;
        y_up = y_up && sy >= 0;
        y_down = y_down && sy <= 0;
        yp_up = yp_up && syp >= 0;
        yp_down = yp_down && syp <= 0;
    }
    if ((y_up && yp_up) || (y_down && yp_down)) return Monotonicity::co_monotone;
    if ((y_up && yp_down) || (y_down && yp_up)) return Monotonicity::anti_monotone;
    return Monotonicity::neither;
}

std::vector<double> probe_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) throw InvalidArgument("probe grid requires lo <= hi and step > 0");
    std::vector<double> grid;
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
    grid.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) grid.push_back(lo + static_cast<double>(i) * step);
    return grid;
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string expect_token(std::istream& is, std::string_view expected) {
    std::string tok;
    if (!(is >> tok)) throw IoError("checkpoint truncated; expected '" + std::string(expected) + "'");
    if (!expected.empty() && tok != expected)
        throw IoError("checkpoint parse error: expected '" + std::string(expected) + "', got '" + tok + "'");
    return tok;
}

template <typename T>
T read_value(std::istream& is, std::string_view what) {
    T v{};
    if (!(is >> v)) throw IoError("checkpoint parse error reading " + std::string(what));
    return v;
}

double read_double(std::istream& is) {
    std::string tok = expect_token(is, "");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw IoError("checkpoint parse error: bad number '" + tok + "'");
    return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, std::span<const Classifier> classifiers) {
    os << "fairnet-checkpoint 1\n";
    os << "classifiers " << classifiers.size() << "\n";
    for (const auto& c : classifiers) {
        os << "classifier " << c.label << " " << c.members.size() << "\n";
        for (const auto& m : c.members) {
            const auto& s = m.spec();
            os << "model\n";
            os << "variant " << to_string(s.variant) << " ablation " << to_string(s.ablation) << " bottleneck "
               << to_string(s.bottleneck) << "\n";
            os << "trunk " << s.trunk.input_width << " " << s.trunk.hidden_units << " "
               << fmt17(s.trunk.l2_coefficient) << "\n";
            os << "branches " << s.branches.size() << "\n";
            for (const auto& b : s.branches)
                os << "branch " << b.group << " " << int(b.has_primary_output) << " " << int(b.has_secondary_output)
                   << " " << int(b.has_bottleneck) << "\n";
            const auto& params = m.parameters();
            os << "params " << params.size() << "\n";
            for (const auto& p : params) {
                os << "param " << p.name << " " << p.values.rows() << " " << p.values.cols() << " "
                   << fmt17(p.l2_coefficient) << "\n";
                for (Eigen::Index i = 0; i < p.values.rows(); ++i) {
                    for (Eigen::Index j = 0; j < p.values.cols(); ++j) {
                        if (j) os << ' ';
                        os << fmt17(p.values(i, j));
                    }
                    os << "\n";
                }
            }
            os << "end\n";
        }
    }
}

std::vector<Classifier> read_checkpoint(std::istream& is) {
    expect_token(is, "fairnet-checkpoint");
    if (read_value<int>(is, "version") != 1) throw IoError("unsupported checkpoint version");
    expect_token(is, "classifiers");
    const auto count = read_value<std::size_t>(is, "classifier count");
    std::vector<Classifier> out;
    for (std::size_t c = 0; c < count; ++c) {
        expect_token(is, "classifier");
        Classifier cls;
        cls.label = expect_token(is, "");
        const auto members = read_value<std::size_t>(is, "member count");
        for (std::size_t k = 0; k < members; ++k) {
            expect_token(is, "model");
            ModelSpec spec;
            expect_token(is, "variant");
            spec.variant = parse_variant(expect_token(is, ""));
            expect_token(is, "ablation");
            spec.ablation = parse_ablation(expect_token(is, ""));
            expect_token(is, "bottleneck");
            spec.bottleneck = parse_activation(expect_token(is, ""));
            expect_token(is, "trunk");
            spec.trunk.input_width = read_value<std::size_t>(is, "input width");
            spec.trunk.hidden_units = read_value<std::size_t>(is, "hidden units");
            spec.trunk.l2_coefficient = read_double(is);
            expect_token(is, "branches");
            const auto nb = read_value<std::size_t>(is, "branch count");
            for (std::size_t b = 0; b < nb; ++b) {
                expect_token(is, "branch");
                BranchSpec bs;
                bs.group = expect_token(is, "");
                bs.has_primary_output = read_value<int>(is, "flag") != 0;
                bs.has_secondary_output = read_value<int>(is, "flag") != 0;
                bs.has_bottleneck = read_value<int>(is, "flag") != 0;
                spec.branches.push_back(bs);
            }
            expect_token(is, "params");
            const auto np = read_value<std::size_t>(is, "parameter count");
            ad::ParameterSet params;
            for (std::size_t p = 0; p < np; ++p) {
                expect_token(is, "param");
                std::string name = expect_token(is, "");
                const auto rows = read_value<Eigen::Index>(is, "rows");
                const auto cols = read_value<Eigen::Index>(is, "cols");
                const double l2 = read_double(is);
                if (rows <= 0 || cols <= 0) throw IoError("checkpoint parameter " + name + " has an empty shape");
                ad::Matrix values(rows, cols);
                for (Eigen::Index i = 0; i < rows; ++i)
                    for (Eigen::Index j = 0; j < cols; ++j) values(i, j) = read_double(is);
                params.add(std::move(name), std::move(values), l2);
            }
            expect_token(is, "end");
            cls.members.emplace_back(std::move(spec), std::move(params));
        }
        out.push_back(std::move(cls));
    }
    return out;
}

}  // namespace fairnet
