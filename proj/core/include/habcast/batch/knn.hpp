#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "habcast/regressor.hpp"

namespace habcast {

struct KnnSpec {
    int k = 5;
};

/// Indices of the k Euclidean-nearest rows; equal distances resolve to the earlier row.
std::vector<std::size_t> nearest_neighbors(const Matrix& points, std::span<const double> query, std::size_t k);

/// Mean target of the k nearest training rows.
double knn_bl_fit_predict(const Matrix& train, std::span<const double> targets, std::span<const double> query, int k);

class KnnRegressor final : public BatchRegressor {
  public:
    explicit KnnRegressor(KnnSpec spec) : spec_(spec) {}
    void fit(const Matrix& x, std::span<const double> y) override;
    [[nodiscard]] Prediction predict(std::span<const double> x) const override;

  private:
    KnnSpec spec_;
    Matrix x_;
    std::vector<double> y_;
};

} // namespace habcast
