#pragma once

#include "fairnet/autodiff.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairnet {

// Group name reserved for "every sample" (Cal-Net and the global baseline
// train one head over the whole population).
inline constexpr std::string_view kAllGroup = "all";

enum class Variant {
    fairnet_branched,
    fairnet_unbranched,
    calnet,
    baseline_balanced_xent,
    subpop_specific,
};

enum class Ablation {
    none,
    drop_primary_y,
    drop_secondary_y_prime,
};

// Activation applied at the single-node bottleneck H.
enum class Activation { elu, identity };

std::string_view to_string(Variant v) noexcept;
std::string_view to_string(Ablation a) noexcept;
std::string_view to_string(Activation a) noexcept;
Variant parse_variant(std::string_view s);
Ablation parse_ablation(std::string_view s);
Activation parse_activation(std::string_view s);

struct TrunkSpec {
    std::size_t input_width = 0;
    std::size_t hidden_units = 5;
    double l2_coefficient = 1e-4;
    bool emits_scalar_score = true;
};

// One output head. Fair-Net heads read the trunk score s through
// H = act(w1*s + b1) and emit Y = sigmoid(w2*H + b2), Y' = sigmoid(w3*H + b3).
// Baseline heads have no bottleneck: the sole output is sigmoid(s), carried
// in the Y' slot because it is trained with balanced cross-entropy.
struct BranchSpec {
    std::string group;
    bool has_primary_output = true;
    bool has_secondary_output = true;
    bool has_bottleneck = true;

    std::size_t parameter_count() const noexcept;
};

struct ModelSpec {
    Variant variant = Variant::fairnet_branched;
    Ablation ablation = Ablation::none;
    TrunkSpec trunk;
    std::vector<BranchSpec> branches;
    Activation bottleneck = Activation::elu;
};

class Model {
public:
    // Fair-Net Branched (one branch per group), Un-Branched or Cal-Net (one
    // branch). Trunk weights are Glorot-uniform from `seed`, trunk biases 0,
    // branch weights 1 and biases 0.
    static Model build_fairnet(const TrunkSpec& trunk, const std::vector<std::string>& groups, Variant variant,
                               Ablation ablation, std::uint64_t seed, Activation bottleneck = Activation::elu);

    // input -> hidden ELU layer -> single sigmoid output. `group` labels the
    // population the network is meant for (kAllGroup for the global baseline).
    static Model build_baseline(const TrunkSpec& trunk, std::string group, Variant variant, std::uint64_t seed);

    // Reassembles a model from a spec and stored parameters (checkpoints).
    Model(ModelSpec spec, ad::ParameterSet params);

    struct BranchNodes {
        ad::NodeId h;
        std::optional<ad::NodeId> y;
        std::optional<ad::NodeId> y_prime;

        // Y unless Y was ablated away.
        ad::NodeId probability() const { return y ? *y : *y_prime; }
    };
    struct Outputs {
        ad::NodeId score;
        std::vector<BranchNodes> branches;
    };

    Outputs forward(ad::Tape& tape, ad::NodeId input) const;

    const ModelSpec& spec() const noexcept { return spec_; }
    ad::ParameterSet& parameters() noexcept { return params_; }
    const ad::ParameterSet& parameters() const noexcept { return params_; }

    std::optional<std::size_t> branch_index(std::string_view group) const noexcept;

    // Probability estimates for every row, each row read from its own
    // branch. Rejects rows whose group has no branch (single-branch models
    // accept any group).
    ad::Vector predict(const ad::Matrix& features, std::span<const std::string> group_of) const;
    ad::Vector predict_branch(const ad::Matrix& features, std::size_t branch) const;

    std::size_t trunk_parameter_count() const noexcept;
    std::size_t branch_parameter_count() const noexcept;

private:
    Model() = default;
    void validate() const;

    ModelSpec spec_;
    ad::ParameterSet params_;
};

// A trained predictor as reported: a single model, or one model per group
// for the subpopulation-specific baseline.
struct Classifier {
    std::string label;
    std::vector<Model> members;

    // Predictions for rows that all belong to `group`.
    ad::Vector predict_group(const ad::Matrix& features, std::string_view group) const;
    // Row-wise routing: row i is scored as a member of group_of[i].
    ad::Vector predict_rows(const ad::Matrix& features, std::span<const std::string> group_of) const;
};

enum class Monotonicity { co_monotone, anti_monotone, neither, not_applicable };

std::string_view to_string(Monotonicity m) noexcept;

// Evaluates Y(H) and Y'(H) of one branch over a grid of H values and reports
// whether they move together, in opposite directions, or neither.
Monotonicity check_monotone_link(const Model& model, std::string_view group, std::span<const double> probe);

std::vector<double> probe_grid(double lo, double hi, double step);

// Checkpoint text format (all numbers are decimal, 17 significant digits):
//
//   fairnet-checkpoint 1
//   classifiers <count>
//   classifier <label> <member count>
//   model                                   (repeated per member)
//   variant <variant> ablation <ablation> bottleneck <activation>
//   trunk <input_width> <hidden_units> <l2_coefficient>
//   branches <count>
//   branch <group> <has_primary 0|1> <has_secondary 0|1> <has_bottleneck 0|1>
//   params <count>
//   param <name> <rows> <cols> <l2_coefficient>
//   <row-major values, one matrix row per line>
//   end
//
// Group names and labels may not contain whitespace.
void write_checkpoint(std::ostream& os, std::span<const Classifier> classifiers);
std::vector<Classifier> read_checkpoint(std::istream& is);

}  // namespace fairnet
