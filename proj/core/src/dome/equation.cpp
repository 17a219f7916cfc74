#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "habcast/dome.hpp"
#include "habcast/format.hpp"

namespace habcast {

namespace {

int precedence(const ExprNode& n) {
    if (n.is_leaf()) return 3;
    return (n.op == Op::Add || n.op == Op::Sub) ? 1 : 2;
}

std::string format_constant(double c, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, c);
    return buf;
}

std::string variable_name(std::size_t j, std::span<const std::string> names) {
    return j < names.size() ? names[j] : "x" + std::to_string(j);
}

class InfixWriter {
  public:
    InfixWriter(const ExpressionTree& tree, std::span<const std::string> names, int digits)
        : tree_(tree), names_(names), digits_(digits) {}

    std::string write(std::size_t i, bool top) const {
        const auto& n = tree_.node(i);
        switch (n.kind) {
            case ExprNode::Kind::Constant: {
                auto text = format_constant(n.constant, digits_);
                return (!top && std::signbit(n.constant)) ? "(" + text + ")" : text;
            }
            case ExprNode::Kind::Variable: return variable_name(n.variable, names_);
            case ExprNode::Kind::Operator: break;
        }
        const auto l = tree_.left_child(i);
        const auto r = tree_.right_child(i);
        const int p = precedence(n);
        auto left = write(l, false);
        auto right = write(r, false);
        if (precedence(tree_.node(l)) < p) left = "(" + left + ")";
        const int pr = precedence(tree_.node(r));
        if (pr < p || (pr == p && (n.op == Op::Sub || n.op == Op::Div))) right = "(" + right + ")";
        return left + " " + static_cast<char>(n.op) + " " + right;
    }

  private:
    const ExpressionTree& tree_;
    std::span<const std::string> names_;
    int digits_;
};

class InfixParser {
  public:
    InfixParser(std::string_view text, std::span<const std::string> names) : text_(text), names_(names) {}

    ExpressionTree parse() {
        auto tree = expr();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return tree;
    }

  private:
    ExpressionTree expr() {
        auto left = term();
        for (;;) {
            skip_space();
            if (accept('+')) {
                left = ExpressionTree::binary(Op::Add, left, term());
            } else if (accept('-')) {
                left = ExpressionTree::binary(Op::Sub, left, term());
            } else {
                return left;
            }
        }
    }

    ExpressionTree term() {
        auto left = unary();
        for (;;) {
            skip_space();
            if (accept('*')) {
                left = ExpressionTree::binary(Op::Mul, left, unary());
            } else if (accept('/')) {
                left = ExpressionTree::binary(Op::Div, left, unary());
            } else {
                return left;
            }
        }
    }

    ExpressionTree unary() {
        skip_space();
        if (accept('-')) {
            skip_space();
            if (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
                return ExpressionTree::constant(-number());
            }
            return ExpressionTree::binary(Op::Sub, ExpressionTree::constant(0.0), unary());
        }
        return primary();
    }

    ExpressionTree primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = expr();
            skip_space();
            if (!accept(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return ExpressionTree::constant(number());
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ExpressionTree::variable(identifier());
        fail(std::string("unexpected character '") + c + "'");
    }

    double number() {
        const auto start = pos_;
        auto digits = [&] {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            digits();
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (ec != std::errc{} || ptr != text_.data() + pos_) fail("malformed number");
        return v;
    }

    std::size_t identifier() {
        const auto start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' || text_[pos_] == '.')) {
            ++pos_;
        }
        if (pos_ < text_.size() && text_[pos_] == '[') {
            const auto close = text_.find(']', pos_);
            if (close == std::string_view::npos) fail("unterminated '['");
            pos_ = close + 1;
        }
        const auto name = text_.substr(start, pos_ - start);
        for (std::size_t j = 0; j < names_.size(); ++j) {
            if (names_[j] == name) return j;
        }
        if (name.size() > 1 && name[0] == 'x') {
            std::size_t j = 0;
            const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), j);
            if (ec == std::errc{} && ptr == name.data() + name.size()) return j;
        }
        fail("unknown variable '" + std::string(name) + "'");
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("equation parse error at offset " + std::to_string(pos_) + ": " + what);
    }

    std::string_view text_;
    std::span<const std::string> names_;
    std::size_t pos_ = 0;
};

void write_prefix(const ExpressionTree& tree, std::size_t i, std::string& out) {
    const auto& n = tree.node(i);
    switch (n.kind) {
        case ExprNode::Kind::Constant: out += format_number(n.constant); return;
        case ExprNode::Kind::Variable: out += "x" + std::to_string(n.variable); return;
        case ExprNode::Kind::Operator: break;
    }
    out += '(';
    out += static_cast<char>(n.op);
    out += ' ';
    write_prefix(tree, tree.left_child(i), out);
    out += ' ';
    write_prefix(tree, tree.right_child(i), out);
    out += ')';
}

class PrefixParser {
  public:
    explicit PrefixParser(std::string_view text) : text_(text) {}

    ExpressionTree parse() {
        node();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return ExpressionTree::from_nodes(std::move(nodes_));
    }

  private:
    void node() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        if (text_[pos_] == '(') {
            ++pos_;
            skip_space();
            if (pos_ >= text_.size()) fail("missing operator");
            const char c = text_[pos_++];
            if (c != '+' && c != '-' && c != '*' && c != '/') fail("unknown operator");
            nodes_.push_back(ExprNode::make_op(static_cast<Op>(c)));
            node();
            node();
            skip_space();
            if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
            ++pos_;
            return;
        }
        const auto start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
               text_[pos_] != ')') {
            ++pos_;
        }
        const auto atom = text_.substr(start, pos_ - start);
        if (atom.empty()) fail("empty atom");
        if (atom[0] == 'x') {
            std::size_t j = 0;
            const auto [ptr, ec] = std::from_chars(atom.data() + 1, atom.data() + atom.size(), j);
            if (ec != std::errc{} || ptr != atom.data() + atom.size()) fail("bad variable");
            nodes_.push_back(ExprNode::make_variable(j));
            return;
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(atom.data(), atom.data() + atom.size(), v);
        if (ec != std::errc{} || ptr != atom.data() + atom.size()) fail("bad number");
        nodes_.push_back(ExprNode::make_constant(v));
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("prefix parse error at offset " + std::to_string(pos_) + ": " + what);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::vector<ExprNode> nodes_;
};

} // namespace

std::string to_equation(const ExpressionTree& tree, std::span<const std::string> names, int significant_digits) {
    if (significant_digits < 1 || significant_digits > 17) {
        throw std::invalid_argument("to_equation: significant digits must be in 1..17");
    }
    return InfixWriter(tree, names, significant_digits).write(0, true);
}

ExpressionTree parse_equation(std::string_view text, std::span<const std::string> names) {
    return InfixParser(text, names).parse();
}

std::string to_prefix(const ExpressionTree& tree) {
    std::string out;
    write_prefix(tree, 0, out);
    return out;
}

ExpressionTree parse_prefix(std::string_view text) { return PrefixParser(text).parse(); }

} // namespace habcast
