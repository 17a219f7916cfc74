#include "habcast/stream/knn_stream.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "habcast/hash.hpp"

namespace habcast {

KnnStreamRegressor::KnnStreamRegressor(KnnStreamSpec spec) : spec_(spec) {
    if (spec_.k < 1) throw std::invalid_argument("kNN-SL: k must be positive");
    if (spec_.buffer_size < 1) throw std::invalid_argument("kNN-SL: buffer size must be positive");
}

Prediction KnnStreamRegressor::predict(std::span<const double> x) const {
    if (ys_.empty()) return {0.0, {.cold_start = true}};
    const auto k = static_cast<std::size_t>(spec_.k);
    if (ys_.size() <= k) {
        return {std::accumulate(ys_.begin(), ys_.end(), 0.0) / static_cast<double>(ys_.size()), {}};
    }
    std::vector<std::pair<double, std::size_t>> dist(ys_.size());
    for (std::size_t i = 0; i < ys_.size(); ++i) {
        if (xs_[i].size() != x.size()) throw std::invalid_argument("kNN-SL: query dimension mismatch");
        dist[i] = {squared_distance(xs_[i], x), i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += ys_[dist[i].second];
    return {acc / static_cast<double>(k), {}};
}

void KnnStreamRegressor::learn_one(std::span<const double> x, double y) {
    if (!xs_.empty() && xs_.front().size() != x.size()) throw std::invalid_argument("kNN-SL: sample dimension mismatch");
    xs_.emplace_back(x.begin(), x.end());
    ys_.push_back(y);
    if (ys_.size() > spec_.buffer_size) {
        xs_.pop_front();
        ys_.pop_front();
    }
}

std::uint64_t KnnStreamRegressor::state_hash() const {
    Fnv1a h;
    h.add(static_cast<std::uint64_t>(ys_.size()));
    for (std::size_t i = 0; i < ys_.size(); ++i) {
        h.add(std::span<const double>(xs_[i]));
        h.add(ys_[i]);
    }
    return h.value();
}

} // namespace habcast
