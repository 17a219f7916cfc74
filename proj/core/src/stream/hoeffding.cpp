#include "habcast/stream/hoeffding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "habcast/hash.hpp"

namespace habcast {

double hoeffding_bound(double range, double delta, double n) {
    return std::sqrt(range * range * std::log(1.0 / delta) / (2.0 * n));
}

void TargetStats::add(double y) {
    const double d = y - mean();
    n += 1.0;
    sum += y;
    m2 += d * (y - sum / n);
}

void TargetStats::merge(const TargetStats& other) {
    if (other.n == 0.0) return;
    if (n == 0.0) {
        *this = other;
        return;
    }
    const double total = n + other.n;
    const double diff = other.mean() - mean();
    m2 += other.m2 + diff * diff * n * other.n / total;
    n = total;
    sum += other.sum;
}

double FeatureHistogram::boundary(std::size_t b) const {
    return lo_ + (hi_ - lo_) * static_cast<double>(b + 1) / static_cast<double>(kBins);
}

std::size_t FeatureHistogram::bin_of(double x) const {
    if (!(hi_ > lo_)) return 0;
    // Bin b covers (edge_b, edge_{b+1}], so "x <= boundary(b)" matches "bin <= b".
    const double pos = (x - lo_) / (hi_ - lo_) * static_cast<double>(kBins);
    const double c = std::ceil(pos) - 1.0;
    if (c < 0.0) return 0;
    return std::min(kBins - 1, static_cast<std::size_t>(c));
}

void FeatureHistogram::expand(double x) {
    const auto old = bins_;
    const double old_lo = lo_;
    const double old_hi = hi_;
    lo_ = std::min(lo_, x);
    hi_ = std::max(hi_, x);
    bins_ = {};
    for (std::size_t b = 0; b < kBins; ++b) {
        if (old[b].n == 0.0) continue;
        const double center =
            old_hi > old_lo ? old_lo + (old_hi - old_lo) * (static_cast<double>(b) + 0.5) / static_cast<double>(kBins)
                            : old_lo;
        bins_[bin_of(center)].merge(old[b]);
    }
}

void FeatureHistogram::add(double x, double y) {
    if (!initialized_) {
        initialized_ = true;
        lo_ = hi_ = x;
    } else if (x < lo_ || x > hi_) {
        expand(x);
    }
    bins_[bin_of(x)].add(y);
}

std::optional<SplitCandidate> best_histogram_split(const FeatureHistogram& h, std::size_t feature,
                                                   const TargetStats& parent) {
    if (h.empty() || !(parent.m2 > 0.0)) return std::nullopt;
    const auto& bins = h.bins();
    std::array<TargetStats, FeatureHistogram::kBins> suffix{};
    TargetStats acc;
    for (std::size_t b = FeatureHistogram::kBins; b-- > 0;) {
        acc.merge(bins[b]);
        suffix[b] = acc;
    }
    std::optional<SplitCandidate> best;
    TargetStats left;
    for (std::size_t b = 0; b + 1 < FeatureHistogram::kBins; ++b) {
        left.merge(bins[b]);
        const auto& right = suffix[b + 1];
        if (left.n == 0.0 || right.n == 0.0) continue;
        const double merit = 1.0 - (left.m2 + right.m2) / parent.m2;
        if (!best || merit > best->merit) best = SplitCandidate{feature, h.boundary(b), merit, left, right};
    }
    return best;
}

struct HoeffdingTreeRegressor::Node {
    bool leaf = true;
    // Leaf state.
    TargetStats stats;
    std::vector<FeatureHistogram> hist;
    std::vector<double> w;
    double b = 0.0;
    double err_mean = 0.0;
    double err_model = 0.0;
    double last_check = 0.0;
    // Internal state.
    std::size_t feature = 0;
    double threshold = 0.0;
    std::unique_ptr<Node> left;
    std::unique_ptr<Node> right;
    std::unique_ptr<Adwin> errors;
    std::unique_ptr<Node> alternate;
    std::unique_ptr<Adwin> alternate_errors;

    [[nodiscard]] const Node& route(std::span<const double> x) const {
        const Node* n = this;
        while (!n->leaf) n = (x[n->feature] <= n->threshold ? n->left : n->right).get();
        return *n;
    }

    [[nodiscard]] double linear(std::span<const double> z) const {
        double acc = b;
        for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * z[j];
        return acc;
    }

    /// Leaf mean or leaf linear model, whichever has the lower faded error.
    [[nodiscard]] double leaf_value(std::span<const double> z) const {
        return err_model < err_mean ? linear(z) : stats.mean();
    }

    [[nodiscard]] double predict(std::span<const double> z, std::span<const double> x) const {
        return route(x).leaf_value(z);
    }

    void hash_into(Fnv1a& h) const {
        h.add(static_cast<std::uint64_t>(leaf));
        if (leaf) {
            h.add(stats.n);
            h.add(stats.sum);
            h.add(stats.m2);
            for (const auto& fh : hist) {
                h.add(fh.lo());
                h.add(fh.hi());
                for (const auto& bin : fh.bins()) {
                    h.add(bin.n);
                    h.add(bin.sum);
                    h.add(bin.m2);
                }
            }
            h.add(std::span<const double>(w));
            h.add(b);
            h.add(err_mean);
            h.add(err_model);
            h.add(last_check);
            return;
        }
        h.add(static_cast<std::uint64_t>(feature));
        h.add(threshold);
        if (errors) errors->hash_into(h);
        h.add(static_cast<std::uint64_t>(alternate != nullptr));
        if (alternate) {
            alternate->hash_into(h);
            alternate_errors->hash_into(h);
        }
        left->hash_into(h);
        right->hash_into(h);
    }

    [[nodiscard]] std::size_t count() const { return leaf ? 1 : 1 + left->count() + right->count(); }
    [[nodiscard]] std::size_t leaves() const { return leaf ? 1 : left->leaves() + right->leaves(); }
    [[nodiscard]] std::size_t height() const { return leaf ? 0 : 1 + std::max(left->height(), right->height()); }
};

HoeffdingTreeRegressor::HoeffdingTreeRegressor(HoeffdingSpec spec, bool adaptive) : spec_(spec), adaptive_(adaptive) {
    if (spec_.grace_period < 1) throw std::invalid_argument("Hoeffding tree: grace period must be positive");
    if (!(spec_.delta > 0.0 && spec_.delta < 1.0)) throw std::invalid_argument("Hoeffding tree: delta must lie in (0, 1)");
    if (!(spec_.model_selector_decay > 0.0 && spec_.model_selector_decay <= 1.0)) {
        throw std::invalid_argument("Hoeffding tree: model selector decay must lie in (0, 1]");
    }
    if (!(spec_.tau >= 0.0)) throw std::invalid_argument("Hoeffding tree: tau must be non-negative");
}

HoeffdingTreeRegressor::~HoeffdingTreeRegressor() = default;
HoeffdingTreeRegressor::HoeffdingTreeRegressor(HoeffdingTreeRegressor&&) noexcept = default;
HoeffdingTreeRegressor& HoeffdingTreeRegressor::operator=(HoeffdingTreeRegressor&&) noexcept = default;

std::unique_ptr<HoeffdingTreeRegressor::Node> HoeffdingTreeRegressor::make_leaf(std::size_t dim) const {
    auto leaf = std::make_unique<Node>();
    leaf->hist.resize(dim);
    leaf->w.assign(dim, 0.0);
    return leaf;
}

std::vector<double> HoeffdingTreeRegressor::standardize(std::span<const double> x) const {
    std::vector<double> z(x.size(), 0.0);
    if (seen_ == 0) return z;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double sd = std::sqrt(x_m2_[j] / static_cast<double>(seen_));
        z[j] = sd > 1e-12 ? (x[j] - x_mean_[j]) / sd : 0.0;
    }
    return z;
}

Prediction HoeffdingTreeRegressor::predict(std::span<const double> x) const {
    if (!root_ || (root_->leaf && root_->stats.n == 0.0)) return {0.0, {.cold_start = true}};
    if (x.size() != dim_) throw std::invalid_argument("Hoeffding tree: query dimension mismatch");
    const auto z = standardize(x);
    return {root_->predict(z, x), {}};
}

void HoeffdingTreeRegressor::learn_one(std::span<const double> x, double y) {
    if (!root_) {
        dim_ = x.size();
        x_mean_.assign(dim_, 0.0);
        x_m2_.assign(dim_, 0.0);
        root_ = make_leaf(dim_);
    }
    if (x.size() != dim_) throw std::invalid_argument("Hoeffding tree: sample dimension mismatch");
    ++seen_;
    const auto n = static_cast<double>(seen_);
    for (std::size_t j = 0; j < dim_; ++j) {
        const double d = x[j] - x_mean_[j];
        x_mean_[j] += d / n;
        x_m2_[j] += d * (x[j] - x_mean_[j]);
    }
    const auto z = standardize(x);
    learn_node(root_, z, x, y, 0);
}

void HoeffdingTreeRegressor::learn_node(std::unique_ptr<Node>& node, std::span<const double> z,
                                        std::span<const double> x, double y, std::size_t depth) {
    if (node->leaf) {
        learn_leaf(node, z, x, y, depth);
        return;
    }
    if (adaptive_) {
        const double err = std::abs(y - node->predict(z, x));
        const double before = node->errors->mean();
        if (node->errors->update(err)) {
            events_.push_back({seen_, "drift", depth});
            if (node->errors->mean() > before && !node->alternate) {
                node->alternate = make_leaf(dim_);
                node->alternate_errors = std::make_unique<Adwin>(spec_.adwin_delta);
                ++alternates_started_;
                events_.push_back({seen_, "alternate_started", depth});
            }
        }
        if (node->alternate) {
            node->alternate_errors->update(std::abs(y - node->alternate->predict(z, x)));
            learn_node(node->alternate, z, x, y, depth);
            const auto& eo = *node->errors;
            const auto& ea = *node->alternate_errors;
            const auto need = static_cast<double>(spec_.min_switch_samples);
            if (eo.width() >= need && ea.width() >= need) {
                const double bound = eo.confidence_radius() + ea.confidence_radius();
                if (eo.mean() - ea.mean() > bound) {
                    auto replacement = std::move(node->alternate);
                    node = std::move(replacement);
                    ++replacements_;
                    events_.push_back({seen_, "replaced", depth});
                    return;
                }
                if (ea.mean() - eo.mean() > bound) {
                    node->alternate.reset();
                    node->alternate_errors.reset();
                    events_.push_back({seen_, "alternate_pruned", depth});
                }
            }
        }
    }
    auto& child = x[node->feature] <= node->threshold ? node->left : node->right;
    learn_node(child, z, x, y, depth + 1);
}

void HoeffdingTreeRegressor::learn_leaf(std::unique_ptr<Node>& node, std::span<const double> z,
                                        std::span<const double> x, double y, std::size_t depth) {
    auto& leaf = *node;
    const double model_out = leaf.linear(z);
    if (leaf.stats.n > 0.0) {
        const double decay = spec_.model_selector_decay;
        const double em = y - leaf.stats.mean();
        const double el = y - model_out;
        leaf.err_mean = decay * leaf.err_mean + em * em;
        leaf.err_model = decay * leaf.err_model + el * el;
    }
    // Normalized step keeps the update stable for large inputs.
    double norm = 1.0;
    for (double v : z) norm += v * v;
    const double step = spec_.learning_rate * norm > 1.0 ? 1.0 / norm : spec_.learning_rate;
    const double e = y - model_out;
    for (std::size_t j = 0; j < dim_; ++j) leaf.w[j] += step * e * z[j];
    leaf.b += step * e;

    leaf.stats.add(y);
    for (std::size_t j = 0; j < dim_; ++j) leaf.hist[j].add(x[j], y);

    if (leaf.stats.n - leaf.last_check < static_cast<double>(spec_.grace_period)) return;
    leaf.last_check = leaf.stats.n;
    if (!(leaf.stats.m2 > 0.0)) return;

    std::optional<SplitCandidate> best;
    double second = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
        auto cand = best_histogram_split(leaf.hist[j], j, leaf.stats);
        if (!cand) continue;
        if (!best || cand->merit > best->merit) {
            if (best) second = std::max(second, best->merit);
            best = cand;
        } else {
            second = std::max(second, cand->merit);
        }
    }
    if (!best || !(best->merit > 0.0)) return;
    const double eps = hoeffding_bound(1.0, spec_.delta, leaf.stats.n);
    if (!(1.0 - second / best->merit > eps || eps < spec_.tau)) return;

    auto internal = std::make_unique<Node>();
    internal->leaf = false;
    internal->feature = best->feature;
    internal->threshold = best->threshold;
    if (adaptive_) internal->errors = std::make_unique<Adwin>(spec_.adwin_delta);
    for (auto* side : {&best->left, &best->right}) {
        auto child = make_leaf(dim_);
        child->stats = *side;
        child->last_check = side->n;
        child->w = leaf.w;
        child->b = leaf.b;
        child->err_mean = leaf.err_mean;
        child->err_model = leaf.err_model;
        (side == &best->left ? internal->left : internal->right) = std::move(child);
    }
    node = std::move(internal);
    events_.push_back({seen_, "split", depth});
}

std::uint64_t HoeffdingTreeRegressor::state_hash() const {
    Fnv1a h;
    h.add(static_cast<std::uint64_t>(seen_));
    h.add(std::span<const double>(x_mean_));
    h.add(std::span<const double>(x_m2_));
    if (root_) root_->hash_into(h);
    return h.value();
}

std::size_t HoeffdingTreeRegressor::node_count() const { return root_ ? root_->count() : 0; }
std::size_t HoeffdingTreeRegressor::leaf_count() const { return root_ ? root_->leaves() : 0; }
std::size_t HoeffdingTreeRegressor::depth() const { return root_ ? root_->height() : 0; }

std::optional<std::pair<std::size_t, double>> HoeffdingTreeRegressor::root_split() const {
    if (!root_ || root_->leaf) return std::nullopt;
    return std::make_pair(root_->feature, root_->threshold);
}

} // namespace habcast
