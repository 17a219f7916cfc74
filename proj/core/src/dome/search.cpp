#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "habcast/dome.hpp"

namespace habcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kShortlist = 16;

/// Prediction as a function of one node's value v, row by row:
/// pred = (a v + b) / (c v + d). Exact because every operator is a Mobius map
/// in each of its operands.
struct PathMaps {
    std::vector<double> a, b, c, d;
    bool affine = true; ///< c == 0 on every row
};

void compose(const PathMaps& parent, Op op, bool is_left, const std::vector<double>& sibling, PathMaps& out) {
    const auto n = sibling.size();
    out.a.resize(n);
    out.b.resize(n);
    out.c.resize(n);
    out.d.resize(n);
    out.affine = true;
    for (std::size_t r = 0; r < n; ++r) {
        const double s = sibling[r];
        // Matrix [[e f][g h]] of the operator as a map of this operand.
        double e = 1.0;
        double f = 0.0;
        double g = 0.0;
        double h = 1.0;
        switch (op) {
            case Op::Add: f = s; break;
            case Op::Sub:
                if (is_left) {
                    f = -s;
                } else {
                    e = -1.0;
                    f = s;
                }
                break;
            case Op::Mul: e = s; break;
            case Op::Div:
                if (is_left) {
                    h = s;
                } else {
                    e = 0.0;
                    f = s;
                    g = 1.0;
                    h = 0.0;
                }
                break;
        }
        double a = parent.a[r] * e + parent.b[r] * g;
        double b = parent.a[r] * f + parent.b[r] * h;
        double c = parent.c[r] * e + parent.d[r] * g;
        double d = parent.c[r] * f + parent.d[r] * h;
        const double m = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
        if (m > 1e100 || (m > 0.0 && m < 1e-100)) {
            a /= m;
            b /= m;
            c /= m;
            d /= m;
        }
        out.a[r] = a;
        out.b[r] = b;
        out.c[r] = c;
        out.d[r] = d;
        if (c != 0.0) out.affine = false;
    }
}

std::vector<PathMaps> path_maps(const ExpressionTree& tree, const TreeValues& tv) {
    const auto n = tv.values.front().size();
    std::vector<PathMaps> maps(tree.node_count());
    maps[0].a.assign(n, 1.0);
    maps[0].b.assign(n, 0.0);
    maps[0].c.assign(n, 0.0);
    maps[0].d.assign(n, 1.0);
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        const auto& node = tree.node(i);
        if (node.is_leaf()) continue;
        const auto l = tree.left_child(i);
        const auto r = tree.right_child(i);
        compose(maps[i], node.op, true, tv.values[r], maps[l]);
        compose(maps[i], node.op, false, tv.values[l], maps[r]);
    }
    return maps;
}

enum class Move : std::uint8_t { Constant, Prune, LeafVariable, WithConstant, WithVariable, WithScaledVariable, WithShiftedVariable };

struct Candidate {
    double sse = kInf;
    std::size_t new_count = 0;
    std::size_t order = 0;
    std::size_t node = 0;
    Move move = Move::Constant;
    Op op = Op::Add;
    std::size_t variable = 0;
    double theta = 0.0;
};

struct ThetaFit {
    double theta = 0.0;
    double sse = kInf;
};

class Search {
  public:
    Search(const Matrix& x, std::span<const double> y, const DomeSpec& spec)
        : n_(x.rows()), p_(x.cols()), y_(y.begin(), y.end()), spec_(spec) {
        cols_.assign(p_, std::vector<double>(n_));
        min_.assign(p_, kInf);
        max_.assign(p_, -kInf);
        nonzero_.assign(p_, true);
        for (std::size_t r = 0; r < n_; ++r) {
            for (std::size_t j = 0; j < p_; ++j) {
                const double v = x(r, j);
                cols_[j][r] = v;
                min_[j] = std::min(min_[j], v);
                max_[j] = std::max(max_[j], v);
                if (std::abs(v) < spec_.div_guard) nonzero_[j] = false;
            }
        }
    }

    DomeFit run() {
        const double mean = std::accumulate(y_.begin(), y_.end(), 0.0) / static_cast<double>(n_);
        DomeFit fit;
        fit.tree = ExpressionTree::constant(mean);
        fit.mse = mse_of(fit.tree).value_or(kInf);
        fit.history.push_back({"initial constant", 1, fit.mse});
        const auto budget = static_cast<std::size_t>(std::max(1, spec_.max_num_nodes));

        for (int iter = 0; iter < spec_.max_iterations && fit.mse > 0.0; ++iter) {
            const auto tv = evaluate_columns(fit.tree, cols_, n_, spec_.div_guard);
            const auto maps = path_maps(fit.tree, tv);
            auto candidates = enumerate(fit.tree, tv, maps, budget, fit.mse * static_cast<double>(n_));
            std::sort(candidates.begin(), candidates.end(), [](const Candidate& l, const Candidate& r) {
                if (l.sse != r.sse) return l.sse < r.sse;
                if (l.new_count != r.new_count) return l.new_count < r.new_count;
                return l.order < r.order;
            });

            // Shortlist: the best raw scores plus the best of every move class,
            // each re-scored after joint constant optimization.
            std::vector<std::size_t> shortlist;
            std::vector<std::pair<Move, Op>> seen;
            for (std::size_t k = 0; k < candidates.size(); ++k) {
                const std::pair<Move, Op> cls{candidates[k].move, candidates[k].op};
                const bool new_class = std::find(seen.begin(), seen.end(), cls) == seen.end();
                if (new_class) seen.push_back(cls);
                if (k < kShortlist || new_class) shortlist.push_back(k);
            }

            std::optional<DomeFit> best;
            const Candidate* best_move = nullptr;
            for (auto k : shortlist) {
                DomeFit trial;
                trial.tree = apply(fit.tree, candidates[k]);
                const auto mse = mse_of(trial.tree);
                if (!mse) continue;
                trial.mse = *mse;
                optimize_constants(trial);
                if (!best || trial.mse < best->mse ||
                    (trial.mse == best->mse && trial.tree.node_count() < best->tree.node_count())) {
                    best = std::move(trial);
                    best_move = &candidates[k];
                }
            }
            if (!best || !(best->mse < fit.mse)) break;
            if ((fit.mse - best->mse) / fit.mse < spec_.min_reduction_mse) break;
            fit.tree = std::move(best->tree);
            fit.mse = best->mse;
            fit.history.push_back({describe(*best_move), fit.tree.node_count(), fit.mse});
        }
        return fit;
    }

  private:
    /// Training MSE, or nullopt when the guard fires or the output is not finite.
    std::optional<double> mse_of(const ExpressionTree& tree) const {
        const auto tv = evaluate_columns(tree, cols_, n_, spec_.div_guard);
        if (tv.guard_hit || tv.non_finite) return std::nullopt;
        double sse = 0.0;
        const auto& out = tv.values.front();
        for (std::size_t r = 0; r < n_; ++r) {
            const double e = out[r] - y_[r];
            sse += e * e;
        }
        return sse / static_cast<double>(n_);
    }

    /// Best theta for a node value w(r, theta). When the path is affine and w is
    /// linear in theta the least-squares optimum is closed-form; otherwise a
    /// damped Gauss-Newton (Levenberg-Marquardt) iteration from theta0.
    template <class W>
    ThetaFit fit_theta(const PathMaps& m, W&& w, bool linear, double theta0) const {
        if (linear && m.affine) {
            // pred = alpha + beta * theta
            double sab = 0.0;
            double sbb = 0.0;
            double saa = 0.0;
            for (std::size_t r = 0; r < n_; ++r) {
                const auto [w0, dw] = w(r, 0.0);
                const double alpha = (m.a[r] * w0 + m.b[r]) / m.d[r];
                const double beta = m.a[r] * dw / m.d[r];
                const double res = y_[r] - alpha;
                sab += beta * res;
                sbb += beta * beta;
                saa += res * res;
            }
            if (!std::isfinite(saa) || !std::isfinite(sab) || !std::isfinite(sbb)) return {};
            if (!(sbb > 0.0)) return {theta0, saa};
            return {sab / sbb, std::max(0.0, saa - sab * sab / sbb)};
        }

        auto eval = [&](double th, double& sse, double& g, double& h) {
            sse = 0.0;
            g = 0.0;
            h = 0.0;
            for (std::size_t r = 0; r < n_; ++r) {
                const auto [wv, dw] = w(r, th);
                const double num = m.a[r] * wv + m.b[r];
                const double den = m.c[r] * wv + m.d[r];
                const double res = num / den - y_[r];
                const double dp = (m.a[r] * m.d[r] - m.b[r] * m.c[r]) / (den * den) * dw;
                sse += res * res;
                g += dp * res;
                h += dp * dp;
            }
            if (!std::isfinite(sse) || !std::isfinite(g) || !std::isfinite(h)) sse = kInf;
        };

        double th = theta0;
        double sse = 0.0;
        double g = 0.0;
        double h = 0.0;
        eval(th, sse, g, h);
        if (!std::isfinite(sse)) return {};
        double lambda = 0.0;
        for (int it = 0; it < 30; ++it) {
            if (!(h > 0.0)) break;
            const double step = -g / (h * (1.0 + lambda));
            if (!std::isfinite(step) || std::abs(step) <= 1e-12 * (std::abs(th) + 1e-12)) break;
            double sse_n = 0.0;
            double g_n = 0.0;
            double h_n = 0.0;
            eval(th + step, sse_n, g_n, h_n);
            if (sse_n < sse) {
                const bool negligible = sse - sse_n <= 1e-12 * sse;
                th += step;
                sse = sse_n;
                g = g_n;
                h = h_n;
                lambda /= 10.0;
                if (negligible) break;
            } else {
                lambda = lambda == 0.0 ? 1e-3 : lambda * 10.0;
                if (lambda > 1e10) break;
            }
        }
        return {th, sse};
    }

    std::vector<Candidate> enumerate(const ExpressionTree& tree, const TreeValues& tv, const std::vector<PathMaps>& maps,
                                     std::size_t budget, double current_sse) const {
        std::vector<Candidate> out;
        std::size_t order = 0;
        const auto count = tree.node_count();
        auto consider = [&](Candidate c) {
            c.order = order++;
            if (std::isfinite(c.sse) && c.sse < current_sse) out.push_back(c);
        };
        // Rows of the pair (value, d value / d theta) for a node value that is
        // an expression of theta.
        using Pair = std::pair<double, double>;

        for (std::size_t i = 0; i < count; ++i) {
            const auto& node = tree.node(i);
            const auto& s = tv.values[i];
            const auto& m = maps[i];
            const auto size = tree.subtree_end(i) - i;

            if (node.kind == ExprNode::Kind::Constant) {
                const auto f = fit_theta(m, [](std::size_t, double th) { return Pair{th, 1.0}; }, true, node.constant);
                consider({f.sse, count, 0, i, Move::Constant, Op::Add, 0, f.theta});
            } else if (node.kind == ExprNode::Kind::Operator) {
                const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(n_);
                const auto f = fit_theta(m, [](std::size_t, double th) { return Pair{th, 1.0}; }, true, mean);
                consider({f.sse, count - size + 1, 0, i, Move::Prune, Op::Add, 0, f.theta});
            }

            if (node.is_leaf()) {
                for (std::size_t j = 0; j < p_; ++j) {
                    if (node.kind == ExprNode::Kind::Variable && node.variable == j) continue;
                    const auto& xj = cols_[j];
                    consider({direct_sse(m, [&](std::size_t r) { return xj[r]; }), count, 0, i, Move::LeafVariable,
                              Op::Add, j, 0.0});
                }
            }

            if (count + 2 <= budget) {
                auto f = fit_theta(m, [&](std::size_t r, double th) { return Pair{s[r] + th, 1.0}; }, true, 0.0);
                consider({f.sse, count + 2, 0, i, Move::WithConstant, Op::Add, 0, f.theta});
                f = fit_theta(m, [&](std::size_t r, double th) { return Pair{s[r] * th, s[r]}; }, true, 1.0);
                consider({f.sse, count + 2, 0, i, Move::WithConstant, Op::Mul, 0, f.theta});

                for (std::size_t j = 0; j < p_; ++j) {
                    const auto& xj = cols_[j];
                    for (Op op : {Op::Add, Op::Sub, Op::Mul, Op::Div}) {
                        if (op == Op::Div && !nonzero_[j]) continue;
                        const double sse = direct_sse(m, [&](std::size_t r) { return apply_op(op, s[r], xj[r]); });
                        consider({sse, count + 2, 0, i, Move::WithVariable, op, j, 0.0});
                    }
                }
            }

            if (count + 4 <= budget) {
                for (std::size_t j = 0; j < p_; ++j) {
                    const auto& xj = cols_[j];
                    auto f = fit_theta(m, [&](std::size_t r, double th) { return Pair{s[r] + th * xj[r], xj[r]}; },
                                       true, 0.0);
                    consider({f.sse, count + 4, 0, i, Move::WithScaledVariable, Op::Add, j, f.theta});
                    f = fit_theta(m, [&](std::size_t r, double th) { return Pair{th * s[r] * xj[r], s[r] * xj[r]}; },
                                  true, 1.0);
                    consider({f.sse, count + 4, 0, i, Move::WithScaledVariable, Op::Mul, j, f.theta});
                    if (nonzero_[j]) {
                        // S / (K x) fitted through phi = 1 / K, which is linear.
                        f = fit_theta(m, [&](std::size_t r, double ph) { return Pair{ph * s[r] / xj[r], s[r] / xj[r]}; },
                                      true, 1.0);
                        if (f.theta != 0.0 && std::isfinite(1.0 / f.theta)) {
                            consider({f.sse, count + 4, 0, i, Move::WithScaledVariable, Op::Div, j, 1.0 / f.theta});
                        } else {
                            ++order;
                        }
                    } else {
                        ++order;
                    }

                    f = fit_theta(m, [&](std::size_t r, double th) { return Pair{s[r] * (xj[r] + th), s[r]}; }, true,
                                  0.0);
                    consider({f.sse, count + 4, 0, i, Move::WithShiftedVariable, Op::Mul, j, f.theta});
                    const double range = max_[j] - min_[j];
                    if (range > 0.0) {
                        const double start = -min_[j] + range;
                        f = fit_theta(
                            m,
                            [&](std::size_t r, double th) {
                                const double den = xj[r] + th;
                                return Pair{s[r] / den, -s[r] / (den * den)};
                            },
                            false, start);
                        consider({f.sse, count + 4, 0, i, Move::WithShiftedVariable, Op::Div, j, f.theta});
                    } else {
                        ++order;
                    }
                }
            }
        }
        return out;
    }

    template <class V>
    double direct_sse(const PathMaps& m, V&& value) const {
        double sse = 0.0;
        for (std::size_t r = 0; r < n_; ++r) {
            const double w = value(r);
            const double res = (m.a[r] * w + m.b[r]) / (m.c[r] * w + m.d[r]) - y_[r];
            sse += res * res;
        }
        return std::isfinite(sse) ? sse : kInf;
    }

    static ExpressionTree apply(const ExpressionTree& tree, const Candidate& c) {
        const auto k = ExpressionTree::constant(c.theta);
        const auto v = ExpressionTree::variable(c.variable);
        switch (c.move) {
            case Move::Constant:
            case Move::Prune: return tree.replace_subtree(c.node, k);
            case Move::LeafVariable: return tree.replace_subtree(c.node, v);
            case Move::WithConstant: return tree.replace_subtree(c.node, ExpressionTree::binary(c.op, tree.subtree(c.node), k));
            case Move::WithVariable: return tree.replace_subtree(c.node, ExpressionTree::binary(c.op, tree.subtree(c.node), v));
            case Move::WithScaledVariable:
                return tree.replace_subtree(
                    c.node, ExpressionTree::binary(c.op, tree.subtree(c.node), ExpressionTree::binary(Op::Mul, k, v)));
            case Move::WithShiftedVariable:
                return tree.replace_subtree(
                    c.node, ExpressionTree::binary(c.op, tree.subtree(c.node), ExpressionTree::binary(Op::Add, v, k)));
        }
        return tree;
    }

    static std::string describe(const Candidate& c) {
        const std::string at = "node " + std::to_string(c.node) + ": ";
        const std::string op(1, static_cast<char>(c.op));
        const std::string var = "x" + std::to_string(c.variable);
        switch (c.move) {
            case Move::Constant: return at + "refit constant";
            case Move::Prune: return at + "prune to constant";
            case Move::LeafVariable: return at + "leaf -> " + var;
            case Move::WithConstant: return at + "S " + op + " K";
            case Move::WithVariable: return at + "S " + op + " " + var;
            case Move::WithScaledVariable: return at + "S " + op + " (K * " + var + ")";
            case Move::WithShiftedVariable: return at + "S " + op + " (" + var + " + K)";
        }
        return at;
    }

    /// Joint Levenberg-Marquardt over every constant. The Jacobian column of a
    /// constant is the derivative of its path map at the node's value. Steps are
    /// kept only when the guarded training MSE strictly improves.
    void optimize_constants(DomeFit& fit) const {
        const auto positions = fit.tree.constant_positions();
        const auto m = static_cast<Eigen::Index>(positions.size());
        if (m == 0) return;
        double lambda = 1e-3;
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(n_), m);
        Eigen::VectorXd res(static_cast<Eigen::Index>(n_));
        for (int it = 0; it < spec_.constant_iterations; ++it) {
            const auto tv = evaluate_columns(fit.tree, cols_, n_, spec_.div_guard);
            const auto maps = path_maps(fit.tree, tv);
            for (Eigen::Index k = 0; k < m; ++k) {
                const auto pos = positions[static_cast<std::size_t>(k)];
                const auto& pm = maps[pos];
                const auto& v = tv.values[pos];
                for (std::size_t r = 0; r < n_; ++r) {
                    const double den = pm.c[r] * v[r] + pm.d[r];
                    jac(static_cast<Eigen::Index>(r), k) = (pm.a[r] * pm.d[r] - pm.b[r] * pm.c[r]) / (den * den);
                }
            }
            for (std::size_t r = 0; r < n_; ++r) res(static_cast<Eigen::Index>(r)) = tv.values.front()[r] - y_[r];
            if (!jac.allFinite()) return;
            const Eigen::MatrixXd a = jac.transpose() * jac;
            const Eigen::VectorXd g = jac.transpose() * res;
            const double scale = std::max(a.diagonal().maxCoeff(), 1e-300);

            bool stepped = false;
            while (lambda <= 1e10) {
                Eigen::MatrixXd damped = a;
                for (Eigen::Index k = 0; k < m; ++k) damped(k, k) += lambda * a(k, k) + 1e-12 * scale;
                const Eigen::VectorXd delta = damped.ldlt().solve(-g);
                if (!delta.allFinite()) {
                    lambda *= 10.0;
                    continue;
                }
                auto trial = fit.tree;
                for (Eigen::Index k = 0; k < m; ++k) {
                    const auto pos = positions[static_cast<std::size_t>(k)];
                    trial.set_constant(pos, trial.node(pos).constant + delta(k));
                }
                const auto mse = mse_of(trial);
                if (mse && *mse < fit.mse) {
                    const bool negligible = fit.mse - *mse <= 1e-12 * fit.mse;
                    fit.tree = std::move(trial);
                    fit.mse = *mse;
                    lambda = std::max(lambda / 10.0, 1e-9);
                    stepped = !negligible;
                    break;
                }
                lambda *= 10.0;
            }
            if (!stepped) return;
        }
    }

    std::size_t n_;
    std::size_t p_;
    std::vector<double> y_;
    DomeSpec spec_;
    std::vector<std::vector<double>> cols_;
    std::vector<double> min_;
    std::vector<double> max_;
    std::vector<bool> nonzero_;
};

} // namespace

DomeFit dome_fit(const Matrix& x, std::span<const double> y, const DomeSpec& spec) {
    if (x.rows() != y.size()) throw std::invalid_argument("dome_fit: feature/target row mismatch");
    if (y.size() < 2) throw std::invalid_argument("dome_fit: need at least two rows");
    if (std::any_of(y.begin(), y.end(), [](double v) { return !std::isfinite(v); })) {
        throw std::invalid_argument("dome_fit: non-finite target");
    }
    if (spec.max_num_nodes < 1) throw std::invalid_argument("dome_fit: max_num_nodes must be positive");
    if (!(spec.min_reduction_mse >= 0.0)) throw std::invalid_argument("dome_fit: min_reduction_mse must be >= 0");
    return Search(x, y, spec).run();
}

Prediction dome_predict(const ExpressionTree& tree, std::span<const double> x, double guard) {
    if (tree.variable_bound() > x.size()) throw std::invalid_argument("dome_predict: query dimension too small");
    Prediction p;
    p.value = tree.evaluate(x, guard, &p.flags.guarded_division);
    return p;
}

void DomeRegressor::fit(const Matrix& x, std::span<const double> y) {
    fit_ = dome_fit(x, y, spec_);
    dimension_ = x.cols();
    fitted_ = true;
}

Prediction DomeRegressor::predict(std::span<const double> x) const {
    if (!fitted_) throw std::logic_error("DoME: predict before fit");
    if (x.size() != dimension_) throw std::invalid_argument("DoME: query dimension mismatch");
    return dome_predict(fit_.tree, x, spec_.div_guard);
}

} // namespace habcast
