#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "habcast/regressor.hpp"

namespace habcast {

enum class Op : char { Add = '+', Sub = '-', Mul = '*', Div = '/' };

inline constexpr double kDivGuard = 1e-12;

struct ExprNode {
    enum class Kind : std::uint8_t { Constant, Variable, Operator };
    Kind kind = Kind::Constant;
    double constant = 0.0;
    std::size_t variable = 0;
    Op op = Op::Add;

    static ExprNode make_constant(double c) { return {Kind::Constant, c, 0, Op::Add}; }
    static ExprNode make_variable(std::size_t j) { return {Kind::Variable, 0.0, j, Op::Add}; }
    static ExprNode make_op(Op o) { return {Kind::Operator, 0.0, 0, o}; }

    [[nodiscard]] bool is_leaf() const { return kind != Kind::Operator; }
    friend bool operator==(const ExprNode&, const ExprNode&) = default;
};

/// Binary arithmetic expression stored in prefix order: an operator node is
/// followed by its left subtree, then its right subtree.
class ExpressionTree {
  public:
    ExpressionTree() : nodes_{ExprNode::make_constant(0.0)} {}

    static ExpressionTree constant(double c);
    static ExpressionTree variable(std::size_t j);
    static ExpressionTree binary(Op op, const ExpressionTree& left, const ExpressionTree& right);
    /// Takes a prefix node sequence; throws std::invalid_argument if it is not exactly one tree.
    static ExpressionTree from_nodes(std::vector<ExprNode> nodes);

    [[nodiscard]] const std::vector<ExprNode>& nodes() const { return nodes_; }
    [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
    [[nodiscard]] const ExprNode& node(std::size_t i) const { return nodes_[i]; }

    /// One past the last prefix position of the subtree rooted at i.
    [[nodiscard]] std::size_t subtree_end(std::size_t i) const;
    [[nodiscard]] std::size_t left_child(std::size_t i) const { return i + 1; }
    [[nodiscard]] std::size_t right_child(std::size_t i) const { return subtree_end(i + 1); }
    [[nodiscard]] ExpressionTree subtree(std::size_t i) const;
    [[nodiscard]] ExpressionTree replace_subtree(std::size_t i, const ExpressionTree& with) const;
    void set_constant(std::size_t i, double value);

    /// Largest variable index + 1 (0 for variable-free trees).
    [[nodiscard]] std::size_t variable_bound() const;
    [[nodiscard]] std::vector<std::size_t> constant_positions() const;

    /// Denominators with |d| < guard are clamped to +-guard; `guarded` is set when that happens.
    [[nodiscard]] double evaluate(std::span<const double> x, double guard = kDivGuard, bool* guarded = nullptr) const;

    friend bool operator==(const ExpressionTree&, const ExpressionTree&) = default;

  private:
    explicit ExpressionTree(std::vector<ExprNode> nodes) : nodes_(std::move(nodes)) {}
    std::vector<ExprNode> nodes_;
};

double apply_op(Op op, double a, double b);

/// Per-node values of a tree over every row of a column-major data block.
/// `guard_hit` is set when some division saw |denominator| < guard.
struct TreeValues {
    std::vector<std::vector<double>> values; ///< [node][row]
    bool guard_hit = false;
    bool non_finite = false;
};
TreeValues evaluate_columns(const ExpressionTree& tree, const std::vector<std::vector<double>>& columns,
                            std::size_t rows, double guard = kDivGuard);

// Equation text ------------------------------------------------------------

/// Infix text with minimal parentheses. Variables take names[j] when present,
/// otherwise "x<j>". Constants use `significant_digits` (17 round-trips exactly).
std::string to_equation(const ExpressionTree& tree, std::span<const std::string> names = {},
                        int significant_digits = 6);

/// Parses infix text with + - * / and parentheses. Identifiers (with an
/// optional "[...]" suffix) resolve against `names`, then as "x<j>".
ExpressionTree parse_equation(std::string_view text, std::span<const std::string> names = {});

/// Nested prefix form, e.g. "(+ 1 (* x0 2))", with exact constants.
std::string to_prefix(const ExpressionTree& tree);
ExpressionTree parse_prefix(std::string_view text);

// Search -------------------------------------------------------------------

struct DomeSpec {
    double min_reduction_mse = 1e-4;
    int max_num_nodes = 30;
    double div_guard = kDivGuard;
    int constant_iterations = 20; ///< joint Levenberg-Marquardt steps after each change
    int max_iterations = 1000;
};

struct DomeStep {
    std::string move;
    std::size_t node_count = 0;
    double mse = 0.0;
};

struct DomeFit {
    ExpressionTree tree;
    std::vector<DomeStep> history; ///< initial constant first, then one entry per accepted change
    double mse = 0.0;
};

/// Greedy search starting from the target mean. Every accepted step lowers the
/// training MSE and keeps the node count within max_num_nodes.
DomeFit dome_fit(const Matrix& x, std::span<const double> y, const DomeSpec& spec);

Prediction dome_predict(const ExpressionTree& tree, std::span<const double> x, double guard = kDivGuard);

class DomeRegressor final : public BatchRegressor {
  public:
    explicit DomeRegressor(DomeSpec spec) : spec_(spec) {}
    void fit(const Matrix& x, std::span<const double> y) override;
    [[nodiscard]] Prediction predict(std::span<const double> x) const override;
    [[nodiscard]] const DomeFit& result() const { return fit_; }
    [[nodiscard]] const DomeSpec& spec() const { return spec_; }

  private:
    DomeSpec spec_;
    DomeFit fit_;
    std::size_t dimension_ = 0;
    bool fitted_ = false;
};

} // namespace habcast
