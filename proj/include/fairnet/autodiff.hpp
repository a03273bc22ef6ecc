#pragma once

// Reverse-mode differentiation over small dense graphs.
//
// A Tape is built define-by-run: every operation evaluates eagerly when it is
// recorded, so after construction every node's value cache is populated.
// Values are dense matrices whose rows index samples in a batch; scalars are
// 1x1. The engine is sized for networks of at most a few thousand parameters
// and favours determinism over throughput: reductions run in a fixed order
// and repeated evaluation of the same inputs is bit-reproducible.
//
// A Tape is single-writer. Distinct tapes over distinct ParameterSets may be
// used from different threads.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace fairnet::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Parameter {
    std::string name;
    Matrix values;
    double l2_coefficient = 0.0;
};

// Owns trainable parameters. Indices returned by add() are stable.
class ParameterSet {
public:
    std::size_t add(std::string name, Matrix init, double l2_coefficient = 0.0);

    std::size_t size() const noexcept { return params_.size(); }
    Parameter& operator[](std::size_t i) { return params_.at(i); }
    const Parameter& operator[](std::size_t i) const { return params_.at(i); }

    // Index of the parameter called `name`, or size() when absent.
    std::size_t find(std::string_view name) const noexcept;
    bool contains(std::string_view name) const noexcept { return find(name) != size(); }

    std::size_t scalar_count() const noexcept;

    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

private:
    std::vector<Parameter> params_;
};

// One gradient matrix per parameter, aligned with ParameterSet indices.
using Gradients = std::vector<Matrix>;

enum class Op {
    input,
    constant,
    parameter,
    affine,
    elu,
    sigmoid,
    add,
    subtract,
    multiply,
    scale,
    log,
    sum,
    mean,
    square,
    sqrt,
    clamp,
    gather_rows,
    project,
};

std::string_view op_name(Op op) noexcept;

struct NodeId {
    std::size_t index = 0;
    bool operator==(const NodeId&) const = default;
};

class Tape {
public:
    explicit Tape(const ParameterSet& params) : params_(&params) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaves. input() and constant() carry no gradient to parameters.
    NodeId input(Matrix value);
    NodeId constant(Matrix value);
    NodeId constant(double value);
    NodeId parameter(std::size_t index);
    NodeId parameter(std::string_view name);

    // x: B x in, weight: in x out, bias: 1 x out  ->  B x out
    NodeId affine(NodeId x, NodeId weight, NodeId bias);

    NodeId elu(NodeId x);
    NodeId sigmoid(NodeId x);
    NodeId log(NodeId x);
    NodeId square(NodeId x);
    // The derivative at exactly 0 is taken as 0.
    NodeId sqrt(NodeId x);
    // Elementwise clip; gradient passes only where lo < x < hi.
    NodeId clamp(NodeId x, double lo, double hi);

    // Elementwise binary ops. Shapes must agree, or one side is 1x1 and is
    // broadcast.
    NodeId add(NodeId a, NodeId b);
    NodeId subtract(NodeId a, NodeId b);
    NodeId multiply(NodeId a, NodeId b);
    NodeId scale(NodeId x, double factor);

    // Reductions to 1x1, accumulated in storage order.
    NodeId sum(NodeId x);
    NodeId mean(NodeId x);

    // Rows of x selected by `rows` (in that order).
    NodeId gather_rows(NodeId x, std::vector<Eigen::Index> rows);
    // Constant linear map: projection * x.
    NodeId project(Matrix projection, NodeId x);

    const Matrix& value(NodeId id) const { return nodes_.at(id.index).value; }
    double scalar(NodeId id) const;
    // Adjoint from the most recent backward(); zero for nodes off the path.
    Matrix gradient(NodeId id) const;
    Op op(NodeId id) const { return nodes_.at(id.index).op; }
    std::size_t size() const noexcept { return nodes_.size(); }

    // Accumulates adjoints of `loss` (must be 1x1) into every node and returns
    // the gradient for each parameter in the set. Parameters not reached are 0.
    Gradients backward(NodeId loss);

private:
    struct Node {
        Op op;
        std::vector<std::size_t> inputs;
        Matrix value;
        Matrix grad;
        bool has_grad = false;
        std::size_t param = 0;
        double lo = 0.0;
        double hi = 0.0;
        std::vector<Eigen::Index> rows;
        Matrix aux;
    };

    NodeId push(Node node);
    const Node& node(NodeId id) const;
    void accumulate(std::size_t target, const Matrix& adjoint);
    NodeId binary(Op op, NodeId a, NodeId b);

    const ParameterSet* params_;
    std::vector<Node> nodes_;
};

struct FiniteDifferenceResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    Eigen::Index worst_entry = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Compares backward() against central differences for every scalar of every
// parameter. `build` records the objective on a fresh tape and returns the
// loss node; it must be a deterministic function of the parameter values.
// Relative error is |analytic - numeric| / max(1, |numeric|).
FiniteDifferenceResult finite_difference_check(ParameterSet& params,
                                               const std::function<NodeId(Tape&)>& build,
                                               double step = 1e-5);

}  // namespace fairnet::ad
