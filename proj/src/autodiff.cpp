#include "fairnet/autodiff.hpp"

#include "fairnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fairnet::ad {

std::size_t ParameterSet::add(std::string name, Matrix init, double l2_coefficient) {
    if (contains(name)) throw InvalidArgument("duplicate parameter name: " + name);
    if (!(l2_coefficient >= 0.0)) throw InvalidArgument("l2 coefficient must be non-negative for " + name);
    if (!init.allFinite()) throw InvalidArgument("non-finite initial value for " + name);
    params_.push_back({std::move(name), std::move(init), l2_coefficient});
    return params_.size() - 1;
}

std::size_t ParameterSet::find(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return i;
    return params_.size();
}

std::size_t ParameterSet::scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.values.size());
    return n;
}

std::string_view op_name(Op op) noexcept {
    switch (op) {
        case Op::input: return "input";
        case Op::constant: return "constant";
        case Op::parameter: return "parameter";
        case Op::affine: return "affine";
        case Op::elu: return "elu";
        case Op::sigmoid: return "sigmoid";
        case Op::add: return "add";
        case Op::subtract: return "subtract";
        case Op::multiply: return "multiply";
        case Op::scale: return "scale";
        case Op::log: return "log";
        case Op::sum: return "sum";
        case Op::mean: return "mean";
        case Op::square: return "square";
        case Op::sqrt: return "sqrt";
        case Op::clamp: return "clamp";
        case Op::gather_rows: return "gather_rows";
        case Op::project: return "project";
    }
    return "unknown";
}

namespace {

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

bool is_scalar(const Matrix& m) { return m.rows() == 1 && m.cols() == 1; }

std::string shape(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

// Reduce an adjoint to the shape of an operand that was broadcast from 1x1.
Matrix reduce_to(const Matrix& adjoint, const Matrix& operand) {
    if (adjoint.rows() == operand.rows() && adjoint.cols() == operand.cols()) return adjoint;
    return Matrix::Constant(1, 1, adjoint.sum());
}

}  // namespace

const Tape::Node& Tape::node(NodeId id) const {
    if (id.index >= nodes_.size()) throw InvalidArgument("node id out of range");
    return nodes_[id.index];
}

NodeId Tape::push(Node n) {
    for (auto in : n.inputs)
        if (in >= nodes_.size()) throw InvalidArgument("input references a node that does not exist yet");
    if (!n.value.allFinite()) {
        std::ostringstream os;
        os << "non-finite value at node " << nodes_.size() << " (" << op_name(n.op) << ")";
        throw NumericFault(nodes_.size(), os.str());
    }
    nodes_.push_back(std::move(n));
    return NodeId{nodes_.size() - 1};
}

NodeId Tape::input(Matrix value) {
    Node n{Op::input, {}, std::move(value)};
    return push(std::move(n));
}

NodeId Tape::constant(Matrix value) {
    Node n{Op::constant, {}, std::move(value)};
    return push(std::move(n));
}

NodeId Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

NodeId Tape::parameter(std::size_t index) {
    if (index >= params_->size()) throw InvalidArgument("parameter index out of range");
    Node n{Op::parameter, {}, (*params_)[index].values};
    n.param = index;
    return push(std::move(n));
}

NodeId Tape::parameter(std::string_view name) {
    const auto idx = params_->find(name);
    if (idx == params_->size()) throw InvalidArgument("unknown parameter: " + std::string(name));
    return parameter(idx);
}

NodeId Tape::affine(NodeId x, NodeId weight, NodeId bias) {
    const Matrix& xv = node(x).value;
    const Matrix& wv = node(weight).value;
    const Matrix& bv = node(bias).value;
    if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols())
        throw InvalidArgument("affine shape mismatch: x " + shape(xv) + ", w " + shape(wv) + ", b " + shape(bv));
    Matrix out = xv * wv;
    out.rowwise() += bv.row(0);
    Node n{Op::affine, {x.index, weight.index, bias.index}, std::move(out)};
    return push(std::move(n));
}

NodeId Tape::elu(NodeId x) {
    Matrix out = node(x).value.unaryExpr([](double v) { return v >= 0.0 ? v : std::expm1(v); });
    Node n{Op::elu, {x.index}, std::move(out)};
    return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId x) {
    Matrix out = node(x).value.unaryExpr([](double v) { return sigmoid_scalar(v); });
    Node n{Op::sigmoid, {x.index}, std::move(out)};
    return push(std::move(n));
}

NodeId Tape::log(NodeId x) {
    Matrix out = node(x).value.array().log().matrix();
    Node n{Op::log, {x.index}, std::move(out)};
    return push(std::move(n));
}

NodeId Tape::square(NodeId x) {
    Matrix out = node(x).value.array().square().matrix();
    Node n{Op::square, {x.index}, std::move(out)};
    return push(std::move(n));
}

NodeId Tape::sqrt(NodeId x) {
    const Matrix& xv = node(x).value;
    if ((xv.array() < 0.0).any()) {
        std::ostringstream os;
        os << "sqrt of negative value at node " << nodes_.size();
        throw NumericFault(nodes_.size(), os.str());
    }
    Node n{Op::sqrt, {x.index}, xv.array().sqrt().matrix()};
    return push(std::move(n));
}

NodeId Tape::clamp(NodeId x, double lo, double hi) {
    if (!(lo < hi)) throw InvalidArgument("clamp requires lo < hi");
    Node n{Op::clamp, {x.index}, node(x).value.cwiseMax(lo).cwiseMin(hi)};
    n.lo = lo;
    n.hi = hi;
    return push(std::move(n));
}

NodeId Tape::binary(Op op, NodeId a, NodeId b) {
    const Matrix& av = node(a).value;
    const Matrix& bv = node(b).value;
    const bool same = av.rows() == bv.rows() && av.cols() == bv.cols();
    if (!same && !is_scalar(av) && !is_scalar(bv))
        throw InvalidArgument(std::string(op_name(op)) + " shape mismatch: " + shape(av) + " vs " + shape(bv));

    auto expand = [&](const Matrix& m, const Matrix& other) -> Matrix {
        if (same || !is_scalar(m)) return m;
        return Matrix::Constant(other.rows(), other.cols(), m(0, 0));
    };
    const Matrix lhs = expand(av, bv);
    const Matrix rhs = expand(bv, av);
    Matrix out;
    switch (op) {
        case Op::add: out = lhs + rhs; break;
        case Op::subtract: out = lhs - rhs; break;
        case Op::multiply: out = lhs.cwiseProduct(rhs); break;
        default: throw InvalidArgument("not a binary op");
    }
    Node n{op, {a.index, b.index}, std::move(out)};
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) { return binary(Op::add, a, b); }
NodeId Tape::subtract(NodeId a, NodeId b) { return binary(Op::subtract, a, b); }
NodeId Tape::multiply(NodeId a, NodeId b) { return binary(Op::multiply, a, b); }

NodeId Tape::scale(NodeId x, double factor) {
    Node n{Op::scale, {x.index}, node(x).value * factor};
    n.lo = factor;
    return push(std::move(n));
}

NodeId Tape::sum(NodeId x) {
    const Matrix& xv = node(x).value;
    double acc = 0.0;
    for (Eigen::Index j = 0; j < xv.cols(); ++j)
        for (Eigen::Index i = 0; i < xv.rows(); ++i) acc += xv(i, j);
    Node n{Op::sum, {x.index}, Matrix::Constant(1, 1, acc)};
    return push(std::move(n));
}

NodeId Tape::mean(NodeId x) {
    const Matrix& xv = node(x).value;
    if (xv.size() == 0) throw InvalidArgument("mean of an empty node");
    double acc = 0.0;
    for (Eigen::Index j = 0; j < xv.cols(); ++j)
        for (Eigen::Index i = 0; i < xv.rows(); ++i) acc += xv(i, j);
    Node n{Op::mean, {x.index}, Matrix::Constant(1, 1, acc / static_cast<double>(xv.size()))};
    return push(std::move(n));
}

NodeId Tape::gather_rows(NodeId x, std::vector<Eigen::Index> rows) {
    const Matrix& xv = node(x).value;
    Matrix out(static_cast<Eigen::Index>(rows.size()), xv.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] < 0 || rows[r] >= xv.rows()) throw InvalidArgument("gather_rows index out of range");
        out.row(static_cast<Eigen::Index>(r)) = xv.row(rows[r]);
    }
    Node n{Op::gather_rows, {x.index}, std::move(out)};
    n.rows = std::move(rows);
    return push(std::move(n));
}

NodeId Tape::project(Matrix projection, NodeId x) {
    const Matrix& xv = node(x).value;
    if (projection.cols() != xv.rows())
        throw InvalidArgument("project shape mismatch: " + shape(projection) + " * " + shape(xv));
    Node n{Op::project, {x.index}, projection * xv};
    n.aux = std::move(projection);
    return push(std::move(n));
}

double Tape::scalar(NodeId id) const {
    const Matrix& v = node(id).value;
    if (!is_scalar(v)) throw InvalidArgument("node is not scalar: " + shape(v));
    return v(0, 0);
}

Matrix Tape::gradient(NodeId id) const {
    const Node& n = node(id);
    if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::accumulate(std::size_t target, const Matrix& adjoint) {
    Node& t = nodes_[target];
    if (!t.has_grad) {
        t.grad = adjoint;
        t.has_grad = true;
    } else {
        t.grad += adjoint;
    }
}

Gradients Tape::backward(NodeId loss) {
    const Node& root = node(loss);
    if (!is_scalar(root.value)) throw InvalidArgument("backward requires a scalar loss node, got " + shape(root.value));

    for (auto& n : nodes_) {
        n.has_grad = false;
        n.grad.resize(0, 0);
    }
    nodes_[loss.index].grad = Matrix::Ones(1, 1);
    nodes_[loss.index].has_grad = true;

    for (std::size_t k = loss.index + 1; k-- > 0;) {
        Node& n = nodes_[k];
        if (!n.has_grad) continue;
        const Matrix& g = n.grad;
        switch (n.op) {
            case Op::input:
            case Op::constant:
            case Op::parameter:
                break;
            case Op::affine: {
                const Matrix& x = nodes_[n.inputs[0]].value;
                const Matrix& w = nodes_[n.inputs[1]].value;
                accumulate(n.inputs[0], g * w.transpose());
                accumulate(n.inputs[1], x.transpose() * g);
                accumulate(n.inputs[2], g.colwise().sum());
                break;
            }
            case Op::elu: {
                const Matrix& x = nodes_[n.inputs[0]].value;
                Matrix d = x.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : std::exp(v); });
                accumulate(n.inputs[0], g.cwiseProduct(d));
                break;
            }
            case Op::sigmoid: {
                Matrix d = n.value.array() * (1.0 - n.value.array());
                accumulate(n.inputs[0], g.cwiseProduct(d));
                break;
            }
            case Op::log:
                accumulate(n.inputs[0], g.cwiseQuotient(nodes_[n.inputs[0]].value));
                break;
            case Op::square:
                accumulate(n.inputs[0], 2.0 * g.cwiseProduct(nodes_[n.inputs[0]].value));
                break;
            case Op::sqrt: {
                Matrix d = n.value.unaryExpr([](double s) { return s > 0.0 ? 0.5 / s : 0.0; });
                accumulate(n.inputs[0], g.cwiseProduct(d));
                break;
            }
            case Op::clamp: {
                const Matrix& x = nodes_[n.inputs[0]].value;
                const double lo = n.lo, hi = n.hi;
                Matrix d = x.unaryExpr([lo, hi](double v) { return (v > lo && v < hi) ? 1.0 : 0.0; });
                accumulate(n.inputs[0], g.cwiseProduct(d));
                break;
            }
            case Op::add:
            case Op::subtract:
            case Op::multiply: {
                const Matrix& a = nodes_[n.inputs[0]].value;
                const Matrix& b = nodes_[n.inputs[1]].value;
                auto full = [&](const Matrix& m) -> Matrix {
                    if (m.rows() == g.rows() && m.cols() == g.cols()) return m;
                    return Matrix::Constant(g.rows(), g.cols(), m(0, 0));
                };
                if (n.op == Op::add) {
                    accumulate(n.inputs[0], reduce_to(g, a));
                    accumulate(n.inputs[1], reduce_to(g, b));
                } else if (n.op == Op::subtract) {
                    accumulate(n.inputs[0], reduce_to(g, a));
                    accumulate(n.inputs[1], reduce_to(Matrix(-g), b));
                } else {
                    accumulate(n.inputs[0], reduce_to(g.cwiseProduct(full(b)), a));
                    accumulate(n.inputs[1], reduce_to(g.cwiseProduct(full(a)), b));
                }
                break;
            }
            case Op::scale:
                accumulate(n.inputs[0], g * n.lo);
                break;
            case Op::sum: {
                const Matrix& x = nodes_[n.inputs[0]].value;
                accumulate(n.inputs[0], Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
                break;
            }
            case Op::mean: {
                const Matrix& x = nodes_[n.inputs[0]].value;
                accumulate(n.inputs[0], Matrix::Constant(x.rows(), x.cols(), g(0, 0) / static_cast<double>(x.size())));
                break;
            }
            case Op::gather_rows: {
                const Matrix& x = nodes_[n.inputs[0]].value;
                Matrix d = Matrix::Zero(x.rows(), x.cols());
                for (std::size_t r = 0; r < n.rows.size(); ++r) d.row(n.rows[r]) += g.row(static_cast<Eigen::Index>(r));
                accumulate(n.inputs[0], d);
                break;
            }
            case Op::project:
                accumulate(n.inputs[0], n.aux.transpose() * g);
                break;
        }
    }

    Gradients grads;
    grads.reserve(params_->size());
    for (std::size_t i = 0; i < params_->size(); ++i) {
        const auto& v = (*params_)[i].values;
        grads.push_back(Matrix::Zero(v.rows(), v.cols()));
    }
    for (const auto& n : nodes_)
        if (n.op == Op::parameter && n.has_grad) grads[n.param] += n.grad;
    return grads;
}

FiniteDifferenceResult finite_difference_check(ParameterSet& params, const std::function<NodeId(Tape&)>& build,
                                               double step) {
    if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");

    Gradients analytic;
    {
        Tape tape(params);
        const NodeId loss = build(tape);
        analytic = tape.backward(loss);
    }
    auto evaluate = [&] {
        Tape tape(params);
        return tape.scalar(build(tape));
    };

    FiniteDifferenceResult result;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& values = params[p].values;
        for (Eigen::Index k = 0; k < values.size(); ++k) {
            const double original = values(k);
            values(k) = original + step;
            const double up = evaluate();
            values(k) = original - step;
            const double down = evaluate();
            values(k) = original;
            const double numeric = (up - down) / (2.0 * step);
            const double a = analytic[p](k);
            const double err = std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
            if (err > result.max_relative_error || result.worst_parameter.empty()) {
                result.max_relative_error = err;
                result.worst_parameter = params[p].name;
                result.worst_entry = k;
                result.analytic = a;
                result.numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace fairnet::ad
