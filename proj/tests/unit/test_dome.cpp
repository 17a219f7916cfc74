#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "habcast/dome.hpp"

using namespace habcast;

namespace {

// Independent pointer-based expression used as an evaluation oracle.
struct Naive {
    char kind = 'c'; // c constant, v variable, o operator
    double c = 0.0;
    std::size_t v = 0;
    char op = '+';
    std::unique_ptr<Naive> l, r;

    double eval(const std::vector<double>& x) const {
        if (kind == 'c') return c;
        if (kind == 'v') return x[v];
        const double a = l->eval(x);
        const double b = r->eval(x);
        switch (op) {
            case '+': return a + b;
            case '-': return a - b;
            case '*': return a * b;
            default: return a / b;
        }
    }
    ExpressionTree to_tree() const {
        if (kind == 'c') return ExpressionTree::constant(c);
        if (kind == 'v') return ExpressionTree::variable(v);
        return ExpressionTree::binary(static_cast<Op>(op), l->to_tree(), r->to_tree());
    }
};

std::unique_ptr<Naive> random_naive(std::mt19937_64& rng, int depth, std::size_t vars) {
    auto n = std::make_unique<Naive>();
    std::uniform_int_distribution<int> pick(0, 3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    if (depth == 0 || pick(rng) == 0) {
        if (pick(rng) < 2) {
            n->kind = 'c';
            n->c = u(rng);
        } else {
            n->kind = 'v';
            n->v = std::uniform_int_distribution<std::size_t>(0, vars - 1)(rng);
        }
        return n;
    }
    n->kind = 'o';
    n->op = "+-*/"[pick(rng)];
    n->l = random_naive(rng, depth - 1, vars);
    n->r = random_naive(rng, depth - 1, vars);
    return n;
}

Matrix grid_points(std::size_t n, std::size_t p, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) m(i, j) = u(rng);
    }
    return m;
}

double r2(const ExpressionTree& t, const Matrix& x, const std::vector<double>& y) {
    double mean = 0.0;
    for (double v : y) mean += v / static_cast<double>(y.size());
    double res = 0.0;
    double tot = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        res += std::pow(y[i] - t.evaluate(x.row(i)), 2);
        tot += std::pow(y[i] - mean, 2);
    }
    return 1.0 - res / tot;
}

} // namespace

TEST_CASE("tree evaluation basics") {
    CHECK(ExpressionTree::constant(7.0).evaluate(std::vector<double>{1.0, 2.0}) == 7.0);
    // (x0 + x1) * 2 at (1, 2)
    const auto t = ExpressionTree::binary(
        Op::Mul, ExpressionTree::binary(Op::Add, ExpressionTree::variable(0), ExpressionTree::variable(1)),
        ExpressionTree::constant(2.0));
    CHECK(t.evaluate(std::vector<double>{1.0, 2.0}) == 6.0);
    CHECK(t.node_count() == 5);
    CHECK(t.variable_bound() == 2);
    CHECK(t.constant_positions() == std::vector<std::size_t>{4});
}

TEST_CASE("tree evaluation matches a naive recursive interpreter") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto naive = random_naive(rng, 5, 4);
        const auto tree = naive->to_tree();
        for (int k = 0; k < 10; ++k) {
            std::vector<double> x{u(rng), u(rng), u(rng), u(rng)};
            const double expect = naive->eval(x);
            bool guarded = false;
            const double got = tree.evaluate(x, 0.0, &guarded);
            if (std::isfinite(expect)) CHECK(got == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

TEST_CASE("structure from the published example evaluates like the oracle") {
    // c0 + c1*a + c2*b - (c3*d)/(e + c4) shape over five named inputs.
    const std::vector<std::string> names{"DacumA8[i]", "DacumA8[i-4]", "stdVbottomSA3[i-1]", "TA8[i]", "UI[i-2]"};
    const auto tree = parse_equation("6.2309 + 0.55 * DacumA8[i] + 0.12 * DacumA8[i-4] - "
                                     "(3.1 * stdVbottomSA3[i-1]) / (TA8[i] + 4.5) + UI[i-2] / 7",
                                     names);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> x{u(rng), u(rng), u(rng), u(rng), u(rng)};
        const double expect = 6.2309 + 0.55 * x[0] + 0.12 * x[1] - (3.1 * x[2]) / (x[3] + 4.5) + x[4] / 7.0;
        CHECK(tree.evaluate(x) == doctest::Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("equation text") {
    CHECK(to_equation(ExpressionTree::constant(6.2309)) == "6.2309");
    const std::vector<std::string> names{"Dacum"};
    CHECK(to_equation(ExpressionTree::binary(Op::Add, ExpressionTree::constant(1.0), ExpressionTree::variable(0)),
                      names) == "1 + Dacum");
    // Minimal parentheses around a lower-precedence right operand.
    const auto t = ExpressionTree::binary(
        Op::Sub, ExpressionTree::variable(0),
        ExpressionTree::binary(Op::Sub, ExpressionTree::variable(1), ExpressionTree::variable(2)));
    CHECK(to_equation(t) == "x0 - (x1 - x2)");
    const auto u = ExpressionTree::binary(
        Op::Add, ExpressionTree::binary(Op::Mul, ExpressionTree::variable(0), ExpressionTree::constant(2.0)),
        ExpressionTree::variable(1));
    CHECK(to_equation(u) == "x0 * 2 + x1");
}

TEST_CASE("equation and prefix round trips") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    const std::vector<std::string> names{"a[i]", "b[i-1]", "c", "d_2"};
    for (int trial = 0; trial < 100; ++trial) {
        const auto tree = random_naive(rng, 5, 4)->to_tree();
        const auto text = to_equation(tree, names, 17);
        const auto back = parse_equation(text, names);
        const auto prefix = parse_prefix(to_prefix(tree));
        CHECK(prefix == tree);
        for (int k = 0; k < 100; ++k) {
            std::vector<double> x{u(rng), u(rng), u(rng), u(rng)};
            const double a = tree.evaluate(x);
            const double b = back.evaluate(x);
            if (std::isfinite(a) && std::abs(a) < 1e6) CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST_CASE("malformed text is rejected") {
    CHECK_THROWS(parse_equation("1 +"));
    CHECK_THROWS(parse_equation("(x0 * 2"));
    CHECK_THROWS(parse_equation("unknown_name + 1"));
    CHECK_THROWS(parse_prefix("(+ 1)"));
    CHECK_THROWS(ExpressionTree::from_nodes({ExprNode::make_op(Op::Add), ExprNode::make_constant(1.0)}));
}

TEST_CASE("guarded division clamps and flags") {
    const auto t = ExpressionTree::binary(Op::Div, ExpressionTree::constant(1.0), ExpressionTree::variable(0));
    const auto p = dome_predict(t, std::vector<double>{0.0});
    CHECK(p.flags.guarded_division);
    CHECK(p.value == doctest::Approx(1.0 / kDivGuard));
    const auto q = dome_predict(t, std::vector<double>{2.0});
    CHECK(!q.flags.guarded_division);
    CHECK(q.value == 0.5);
}

TEST_CASE("constant target stays a constant tree") {
    const auto x = grid_points(30, 2, 1, -1.0, 1.0);
    const std::vector<double> y(30, 3.5);
    const auto fit = dome_fit(x, y, DomeSpec{});
    CHECK(fit.tree.node_count() == 1);
    CHECK(fit.tree.evaluate(x.row(0)) == 3.5);
    CHECK(fit.mse == 0.0);
}

TEST_CASE("identical feature rows with varying targets give the mean") {
    Matrix x(10, 2, 1.0);
    std::vector<double> y;
    for (int i = 0; i < 10; ++i) y.push_back(i);
    const auto fit = dome_fit(x, y, DomeSpec{});
    CHECK(fit.tree.evaluate(x.row(0)) == doctest::Approx(4.5));
}

TEST_CASE("planted linear target is recovered within five nodes") {
    const auto x = grid_points(100, 3, 2, -2.0, 2.0);
    std::vector<double> y;
    for (std::size_t i = 0; i < x.rows(); ++i) y.push_back(2.0 * x(i, 0) + 3.0);
    DomeSpec spec;
    spec.max_num_nodes = 5;
    spec.min_reduction_mse = 1e-7;
    const auto fit = dome_fit(x, y, spec);
    CHECK(r2(fit.tree, x, y) >= 0.999);
    CHECK(fit.tree.node_count() <= 5);
}

TEST_CASE("planted rational target is recovered within fifteen nodes") {
    Matrix x = grid_points(200, 2, 3, 0.0, 4.0);
    std::vector<double> y;
    for (std::size_t i = 0; i < x.rows(); ++i) y.push_back(x(i, 0) / (x(i, 1) + 5.0));
    DomeSpec spec;
    spec.max_num_nodes = 15;
    spec.min_reduction_mse = 1e-7;
    const auto fit = dome_fit(x, y, spec);
    CHECK(r2(fit.tree, x, y) >= 0.99);
}

TEST_CASE("search history is monotone and respects the budget") {
    const auto x = grid_points(150, 4, 4, -1.0, 1.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.05);
    std::vector<double> y;
    for (std::size_t i = 0; i < x.rows(); ++i) y.push_back(std::sin(2.0 * x(i, 0)) + x(i, 1) * x(i, 2) + g(rng));
    for (int budget : {5, 10, 25}) {
        DomeSpec spec;
        spec.max_num_nodes = budget;
        spec.min_reduction_mse = 1e-6;
        const auto fit = dome_fit(x, y, spec);
        REQUIRE(!fit.history.empty());
        for (std::size_t i = 1; i < fit.history.size(); ++i) {
            CHECK(fit.history[i].mse <= fit.history[i - 1].mse);
            CHECK(fit.history[i].node_count <= static_cast<std::size_t>(budget));
        }
        CHECK(fit.tree.node_count() <= static_cast<std::size_t>(budget));
        CHECK(fit.mse <= fit.history.front().mse);
        // Deterministic for identical inputs.
        CHECK(dome_fit(x, y, spec).tree == fit.tree);
    }
}

TEST_CASE("regressor rejects degenerate input and dimension mismatches") {
    DomeRegressor r(DomeSpec{});
    Matrix one(1, 2, 0.0);
    CHECK_THROWS(r.fit(one, std::vector<double>{1.0}));
    const auto x = grid_points(20, 2, 6, -1.0, 1.0);
    std::vector<double> y(20);
    for (std::size_t i = 0; i < 20; ++i) y[i] = x(i, 0);
    r.fit(x, y);
    CHECK_THROWS((void)r.predict(std::vector<double>{1.0}));
    std::vector<double> bad = y;
    bad[0] = std::nan("");
    CHECK_THROWS(DomeRegressor(DomeSpec{}).fit(x, bad));
}
