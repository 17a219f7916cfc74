#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "habcast/dome.hpp"

namespace habcast {

double apply_op(Op op, double a, double b) {
    switch (op) {
        case Op::Add: return a + b;
        case Op::Sub: return a - b;
        case Op::Mul: return a * b;
        case Op::Div: return a / b;
    }
    return 0.0;
}

ExpressionTree ExpressionTree::constant(double c) { return ExpressionTree({ExprNode::make_constant(c)}); }

ExpressionTree ExpressionTree::variable(std::size_t j) { return ExpressionTree({ExprNode::make_variable(j)}); }

ExpressionTree ExpressionTree::binary(Op op, const ExpressionTree& left, const ExpressionTree& right) {
    std::vector<ExprNode> nodes;
    nodes.reserve(1 + left.node_count() + right.node_count());
    nodes.push_back(ExprNode::make_op(op));
    nodes.insert(nodes.end(), left.nodes_.begin(), left.nodes_.end());
    nodes.insert(nodes.end(), right.nodes_.begin(), right.nodes_.end());
    return ExpressionTree(std::move(nodes));
}

ExpressionTree ExpressionTree::from_nodes(std::vector<ExprNode> nodes) {
    // A prefix sequence is one tree iff the open-slot count hits zero exactly at the end.
    std::size_t open = 1;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (open == 0) throw std::invalid_argument("expression: trailing nodes after a complete tree");
        open = open - 1 + (nodes[i].is_leaf() ? 0 : 2);
    }
    if (nodes.empty() || open != 0) throw std::invalid_argument("expression: incomplete prefix sequence");
    return ExpressionTree(std::move(nodes));
}

std::size_t ExpressionTree::subtree_end(std::size_t i) const {
    std::size_t need = 1;
    while (need > 0) {
        need += nodes_[i].is_leaf() ? 0 : 2;
        --need;
        ++i;
    }
    return i;
}

ExpressionTree ExpressionTree::subtree(std::size_t i) const {
    return ExpressionTree(std::vector<ExprNode>(nodes_.begin() + static_cast<std::ptrdiff_t>(i),
                                                nodes_.begin() + static_cast<std::ptrdiff_t>(subtree_end(i))));
}

ExpressionTree ExpressionTree::replace_subtree(std::size_t i, const ExpressionTree& with) const {
    const auto end = subtree_end(i);
    std::vector<ExprNode> nodes;
    nodes.reserve(nodes_.size() - (end - i) + with.node_count());
    nodes.insert(nodes.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(i));
    nodes.insert(nodes.end(), with.nodes_.begin(), with.nodes_.end());
    nodes.insert(nodes.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(end), nodes_.end());
    return ExpressionTree(std::move(nodes));
}

void ExpressionTree::set_constant(std::size_t i, double value) {
    if (nodes_.at(i).kind != ExprNode::Kind::Constant) throw std::invalid_argument("expression: node is not a constant");
    nodes_[i].constant = value;
}

std::size_t ExpressionTree::variable_bound() const {
    std::size_t bound = 0;
    for (const auto& n : nodes_) {
        if (n.kind == ExprNode::Kind::Variable) bound = std::max(bound, n.variable + 1);
    }
    return bound;
}

std::vector<std::size_t> ExpressionTree::constant_positions() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].kind == ExprNode::Kind::Constant) out.push_back(i);
    }
    return out;
}

namespace {

double guard_denominator(double d, double guard, bool& hit) {
    if (std::abs(d) < guard) {
        hit = true;
        return d < 0.0 ? -guard : guard;
    }
    return d;
}

} // namespace

double ExpressionTree::evaluate(std::span<const double> x, double guard, bool* guarded) const {
    // Walking prefix order backwards leaves the left operand on top of the stack.
    std::vector<double> stack;
    stack.reserve(nodes_.size());
    bool hit = false;
    for (std::size_t k = nodes_.size(); k-- > 0;) {
        const auto& n = nodes_[k];
        switch (n.kind) {
            case ExprNode::Kind::Constant: stack.push_back(n.constant); break;
            case ExprNode::Kind::Variable:
                if (n.variable >= x.size()) throw std::out_of_range("expression: variable index beyond query dimension");
                stack.push_back(x[n.variable]);
                break;
            case ExprNode::Kind::Operator: {
                const double a = stack.back();
                stack.pop_back();
                double b = stack.back();
                if (n.op == Op::Div) b = guard_denominator(b, guard, hit);
                stack.back() = apply_op(n.op, a, b);
                break;
            }
        }
    }
    if (guarded != nullptr) *guarded = hit;
    return stack.back();
}

TreeValues evaluate_columns(const ExpressionTree& tree, const std::vector<std::vector<double>>& columns,
                            std::size_t rows, double guard) {
    TreeValues out;
    const auto& nodes = tree.nodes();
    out.values.assign(nodes.size(), {});
    for (std::size_t k = nodes.size(); k-- > 0;) {
        const auto& n = nodes[k];
        auto& v = out.values[k];
        switch (n.kind) {
            case ExprNode::Kind::Constant: v.assign(rows, n.constant); break;
            case ExprNode::Kind::Variable: v = columns.at(n.variable); break;
            case ExprNode::Kind::Operator: {
                const auto& a = out.values[tree.left_child(k)];
                const auto& b = out.values[tree.right_child(k)];
                v.resize(rows);
                if (n.op == Op::Div) {
                    for (std::size_t r = 0; r < rows; ++r) {
                        const double d = guard_denominator(b[r], guard, out.guard_hit);
                        v[r] = a[r] / d;
                    }
                } else {
                    for (std::size_t r = 0; r < rows; ++r) v[r] = apply_op(n.op, a[r], b[r]);
                }
                break;
            }
        }
    }
    for (double r : out.values.front()) {
        if (!std::isfinite(r)) {
            out.non_finite = true;
            break;
        }
    }
    return out;
}

} // namespace habcast
