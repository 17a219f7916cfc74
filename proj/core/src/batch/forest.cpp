#include "habcast/batch/forest.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace habcast {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

double xlogmean(double sum, double weight) {
    // sum * log(sum / weight); zero-mean children contribute nothing.
    if (sum <= 0.0) return 0.0;
    return sum * std::log(sum / weight);
}

/// Presorted per-feature row lists; every node owns the same [begin, end) range
/// in each feature's list.
class TreeBuilder {
  public:
    TreeBuilder(const Matrix& x, std::span<const double> y, std::span<const double> w, SplitCriterion criterion)
        : x_(x), y_(y), w_(w), criterion_(criterion) {
        for (std::size_t i = 0; i < x.rows(); ++i) {
            if (w[i] > 0.0) active_.push_back(i);
        }
        if (active_.empty()) throw std::invalid_argument("regression tree: no rows with positive weight");
        if (x.cols() == 0) throw std::invalid_argument("regression tree: no features");
        if (criterion == SplitCriterion::Poisson) {
            for (auto i : active_) {
                if (y[i] < 0.0) throw std::invalid_argument("Poisson split criterion requires non-negative targets");
            }
        }
        m_ = active_.size();
        p_ = x.cols();
        order_.resize(p_ * m_);
        for (std::size_t f = 0; f < p_; ++f) {
            auto* seg = order_.data() + f * m_;
            std::copy(active_.begin(), active_.end(), seg);
            std::stable_sort(seg, seg + m_, [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
        }
        left_flag_.assign(x.rows(), 0);
        scratch_.resize(m_);
    }

    [[nodiscard]] std::size_t size() const { return m_; }

    std::optional<SplitChoice> find_split(std::size_t begin, std::size_t end, double total_w, double total_s) const {
        std::optional<SplitChoice> best;
        for (std::size_t f = 0; f < p_; ++f) {
            const auto* seg = order_.data() + f * m_;
            double wl = 0.0;
            double sl = 0.0;
            for (std::size_t k = begin; k + 1 < end; ++k) {
                const auto r = seg[k];
                wl += w_[r];
                sl += w_[r] * y_[r];
                const double v = x_(r, f);
                const double v_next = x_(seg[k + 1], f);
                if (!(v < v_next)) continue;
                const double wr = total_w - wl;
                const double imp = split_improvement(criterion_, wl, sl, wr, total_s - sl);
                if (!best || imp > best->improvement) {
                    double thr = v + (v_next - v) / 2.0;
                    if (!(thr < v_next)) thr = v;
                    best = SplitChoice{f, thr, imp};
                }
            }
        }
        return best;
    }

    /// Stable partition of every feature list in [begin, end); returns the left size.
    std::size_t partition(std::size_t begin, std::size_t end, const SplitChoice& split) {
        const auto* ref = order_.data() + split.feature * m_;
        std::size_t n_left = 0;
        for (std::size_t k = begin; k < end; ++k) {
            const auto r = ref[k];
            left_flag_[r] = x_(r, split.feature) <= split.threshold ? 1 : 0;
            n_left += left_flag_[r];
        }
        for (std::size_t f = 0; f < p_; ++f) {
            auto* seg = order_.data() + f * m_;
            std::size_t li = begin;
            std::size_t ri = 0;
            for (std::size_t k = begin; k < end; ++k) {
                if (left_flag_[seg[k]]) {
                    seg[li++] = seg[k];
                } else {
                    scratch_[ri++] = seg[k];
                }
            }
            std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(ri), seg + li);
        }
        return n_left;
    }

    void stats(std::size_t begin, std::size_t end, double& w, double& s, double& ymin, double& ymax) const {
        w = 0.0;
        s = 0.0;
        ymin = std::numeric_limits<double>::infinity();
        ymax = -ymin;
        for (std::size_t k = begin; k < end; ++k) {
            const auto r = order_[k];
            w += w_[r];
            s += w_[r] * y_[r];
            ymin = std::min(ymin, y_[r]);
            ymax = std::max(ymax, y_[r]);
        }
    }

  private:
    const Matrix& x_;
    std::span<const double> y_;
    std::span<const double> w_;
    SplitCriterion criterion_;
    std::vector<std::size_t> active_;
    std::size_t m_ = 0;
    std::size_t p_ = 0;
    std::vector<std::size_t> order_;
    std::vector<char> left_flag_;
    std::vector<std::size_t> scratch_;
};

} // namespace

double split_improvement(SplitCriterion criterion, double w_left, double sum_left, double w_right, double sum_right) {
    const double w = w_left + w_right;
    const double s = sum_left + sum_right;
    switch (criterion) {
        case SplitCriterion::SquaredError:
            return sum_left * sum_left / w_left + sum_right * sum_right / w_right - s * s / w;
        case SplitCriterion::FriedmanMse: {
            const double diff = sum_left / w_left - sum_right / w_right;
            return w_left * w_right / w * diff * diff;
        }
        case SplitCriterion::Poisson:
            // Deviance(node) = 2 * (sum y log y - S log(S/W)); the y log y terms cancel.
            return 2.0 * (xlogmean(sum_left, w_left) + xlogmean(sum_right, w_right) - xlogmean(s, w));
    }
    return 0.0;
}

std::optional<SplitChoice> best_split(const Matrix& x, std::span<const double> y, std::span<const double> weights,
                                      SplitCriterion criterion) {
    TreeBuilder builder(x, y, weights, criterion);
    double w = 0.0;
    double s = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    builder.stats(0, builder.size(), w, s, lo, hi);
    return builder.find_split(0, builder.size(), w, s);
}

void RegressionTree::fit(const Matrix& x, std::span<const double> y, std::span<const double> weights,
                         SplitCriterion criterion, std::optional<int> max_depth, double min_samples_split) {
    if (x.rows() != y.size() || y.size() != weights.size()) {
        throw std::invalid_argument("regression tree: row count mismatch");
    }
    TreeBuilder builder(x, y, weights, criterion);
    nodes_.clear();

    struct Pending {
        std::size_t begin;
        std::size_t end;
        std::int32_t node;
    };
    std::vector<Pending> stack;
    nodes_.push_back(Node{});
    stack.push_back({0, builder.size(), 0});
    while (!stack.empty()) {
        const auto item = stack.back();
        stack.pop_back();
        double w = 0.0;
        double s = 0.0;
        double ymin = 0.0;
        double ymax = 0.0;
        builder.stats(item.begin, item.end, w, s, ymin, ymax);
        auto& node = nodes_[static_cast<std::size_t>(item.node)];
        node.value = s / w;
        const int depth = node.depth;
        if ((max_depth && depth >= *max_depth) || w < min_samples_split || ymin == ymax) continue;
        const auto split = builder.find_split(item.begin, item.end, w, s);
        if (!split || !(split->improvement > 0.0)) continue;
        const std::size_t n_left = builder.partition(item.begin, item.end, *split);

        const auto left = static_cast<std::int32_t>(nodes_.size());
        nodes_.push_back(Node{0, 0.0, -1, -1, 0.0, depth + 1});
        nodes_.push_back(Node{0, 0.0, -1, -1, 0.0, depth + 1});
        auto& parent = nodes_[static_cast<std::size_t>(item.node)];
        parent.feature = split->feature;
        parent.threshold = split->threshold;
        parent.left = left;
        parent.right = left + 1;
        stack.push_back({item.begin + n_left, item.end, left + 1});
        stack.push_back({item.begin, item.begin + n_left, left});
    }
}

double RegressionTree::predict(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const auto& n = nodes_[i];
        i = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left : n.right);
    }
    return nodes_[i].value;
}

int RegressionTree::depth() const {
    int d = 0;
    for (const auto& n : nodes_) d = std::max(d, n.depth);
    return d;
}

std::vector<double> RandomForest::bootstrap_weights(std::size_t t, std::size_t n) const {
    std::vector<double> w(n, 0.0);
    if (!spec_.bootstrap) {
        std::fill(w.begin(), w.end(), 1.0);
        return w;
    }
    std::mt19937_64 rng(mix_seed(seed_, t));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) w[pick(rng)] += 1.0;
    return w;
}

void RandomForest::fit(const Matrix& x, std::span<const double> y) {
    if (x.rows() == 0) throw std::invalid_argument("random forest: empty training set");
    if (x.rows() != y.size()) throw std::invalid_argument("random forest: feature/target row mismatch");
    if (spec_.n_trees <= 0) throw std::invalid_argument("random forest: n_trees must be positive");
    if (spec_.criterion == SplitCriterion::Poisson &&
        std::any_of(y.begin(), y.end(), [](double v) { return v < 0.0; })) {
        throw std::invalid_argument("Poisson split criterion requires non-negative targets");
    }
    const auto n_trees = static_cast<std::size_t>(spec_.n_trees);
    trees_.assign(n_trees, RegressionTree{});

    unsigned workers = spec_.threads != 0 ? spec_.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_trees));
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](unsigned wid) {
        try {
            for (std::size_t t = wid; t < n_trees; t += workers) {
                const auto w = bootstrap_weights(t, x.rows());
                trees_[t].fit(x, y, w, spec_.criterion, spec_.max_depth, spec_.min_samples_split);
            }
        } catch (...) {
            errors[wid] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned wid = 0; wid < workers; ++wid) pool.emplace_back(work, wid);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

Prediction RandomForest::predict(std::span<const double> x) const {
    if (trees_.empty()) throw std::logic_error("random forest: predict before fit");
    double acc = 0.0;
    for (const auto& t : trees_) acc += t.predict(x);
    return {acc / static_cast<double>(trees_.size()), {}};
}

} // namespace habcast
