#include "habcast/batch/knn.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace habcast {

std::vector<std::size_t> nearest_neighbors(const Matrix& points, std::span<const double> query, std::size_t k) {
    if (query.size() != points.cols()) {
        throw std::invalid_argument("nearest_neighbors: query has " + std::to_string(query.size()) +
                                    " features, expected " + std::to_string(points.cols()));
    }
    k = std::min(k, points.rows());
    std::vector<std::pair<double, std::size_t>> dist(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) dist[i] = {squared_distance(points.row(i), query), i};
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
    return out;
}

double knn_bl_fit_predict(const Matrix& train, std::span<const double> targets, std::span<const double> query, int k) {
    if (train.rows() == 0) {
        throw std::invalid_argument("kNN: empty training set");
    }
    if (k <= 0 || static_cast<std::size_t>(k) > train.rows()) {
        throw std::invalid_argument("kNN: k=" + std::to_string(k) + " outside 1.." + std::to_string(train.rows()));
    }
    const auto idx = nearest_neighbors(train, query, static_cast<std::size_t>(k));
    double sum = 0.0;
    for (auto i : idx) sum += targets[i];
    return sum / static_cast<double>(idx.size());
}

void KnnRegressor::fit(const Matrix& x, std::span<const double> y) {
    if (x.rows() == 0) throw std::invalid_argument("kNN: empty training set");
    if (x.rows() != y.size()) throw std::invalid_argument("kNN: feature/target row mismatch");
    x_ = x;
    y_.assign(y.begin(), y.end());
}

Prediction KnnRegressor::predict(std::span<const double> x) const {
    return {knn_bl_fit_predict(x_, y_, x, spec_.k), {}};
}

} // namespace habcast
