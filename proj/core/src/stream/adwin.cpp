#include "habcast/stream/adwin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace habcast {

Adwin::Adwin(double delta, std::size_t max_buckets, std::size_t min_window)
    : delta_(delta), max_buckets_(max_buckets), min_window_(min_window) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("ADWIN: delta must lie in (0, 1)");
    if (max_buckets < 2) throw std::invalid_argument("ADWIN: need at least two buckets per level");
    if (min_window < 1) throw std::invalid_argument("ADWIN: minimum sub-window must be positive");
}

Adwin::Bucket Adwin::merge(const Bucket& a, const Bucket& b) {
    if (a.count == 0.0) return b;
    if (b.count == 0.0) return a;
    const double n = a.count + b.count;
    const double diff = b.sum / b.count - a.sum / a.count;
    return {n, a.sum + b.sum, a.m2 + b.m2 + diff * diff * a.count * b.count / n};
}

bool Adwin::update(double value) {
    if (levels_.empty()) levels_.emplace_back();
    levels_[0].push_back({1.0, value, 0.0});
    total_ = merge(total_, levels_[0].back());
    compress();
    bool cut = false;
    while (detect_once()) {
        drop_oldest();
        cut = true;
    }
    if (cut) ++detections_;
    return cut;
}

void Adwin::compress() {
    for (std::size_t l = 0; l < levels_.size(); ++l) {
        if (levels_[l].size() <= max_buckets_) break;
        const Bucket merged = merge(levels_[l][0], levels_[l][1]);
        levels_[l].pop_front();
        levels_[l].pop_front();
        if (l + 1 == levels_.size()) levels_.emplace_back();
        levels_[l + 1].push_back(merged);
    }
}

void Adwin::drop_oldest() {
    for (std::size_t l = levels_.size(); l-- > 0;) {
        if (levels_[l].empty()) continue;
        const Bucket old = levels_[l].front();
        levels_[l].pop_front();
        // Remove `old` from the running totals (inverse of merge).
        const double n = total_.count - old.count;
        if (n <= 0.0) {
            total_ = {};
        } else {
            const double rest_sum = total_.sum - old.sum;
            const double diff = rest_sum / n - old.sum / old.count;
            total_ = {n, rest_sum, std::max(0.0, total_.m2 - old.m2 - diff * diff * old.count * n / total_.count)};
        }
        while (!levels_.empty() && levels_.back().empty()) levels_.pop_back();
        return;
    }
}

double Adwin::cut_threshold(double n0, double n1) const {
    const double n = n0 + n1;
    const double dd = std::log(2.0 * std::log(n) / delta_);
    const double mw = static_cast<double>(min_window_);
    const double m = 1.0 / (n0 - mw + 1.0) + 1.0 / (n1 - mw + 1.0);
    return std::sqrt(2.0 * m * variance() * dd) + 2.0 / 3.0 * dd * m;
}

double Adwin::confidence_radius() const {
    const double n = total_.count;
    if (n < 2.0) return std::numeric_limits<double>::infinity();
    const double dd = std::log(2.0 * std::log(std::max(n, 3.0)) / delta_);
    return std::sqrt(2.0 * variance() * dd / n) + 2.0 / 3.0 * dd / n;
}

bool Adwin::detect_once() {
    const auto mw = static_cast<double>(min_window_);
    if (total_.count < 2.0 * mw) return false;
    double n0 = 0.0;
    double s0 = 0.0;
    // Cuts at every bucket boundary, walking from the oldest bucket forward.
    for (std::size_t l = levels_.size(); l-- > 0;) {
        for (const auto& b : levels_[l]) {
            n0 += b.count;
            s0 += b.sum;
            const double n1 = total_.count - n0;
            if (n1 < mw) return false;
            if (n0 < mw) continue;
            const double gap = std::abs(s0 / n0 - (total_.sum - s0) / n1);
            if (gap >= cut_threshold(n0, n1)) return true;
        }
    }
    return false;
}

void Adwin::hash_into(Fnv1a& h) const {
    h.add(static_cast<std::uint64_t>(levels_.size()));
    for (const auto& level : levels_) {
        h.add(static_cast<std::uint64_t>(level.size()));
        for (const auto& b : level) {
            h.add(b.count);
            h.add(b.sum);
            h.add(b.m2);
        }
    }
    h.add(static_cast<std::uint64_t>(detections_));
}

} // namespace habcast
