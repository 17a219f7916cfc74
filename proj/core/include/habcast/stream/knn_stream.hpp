#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "habcast/regressor.hpp"

namespace habcast {

struct KnnStreamSpec {
    int k = 5;
    std::size_t buffer_size = 1000;
    /// Leaf capacity of a spatial index; the buffer is searched exhaustively, so this is recorded only.
    int max_neighbors_per_node = 20;
};

/// kNN over a FIFO buffer of the most recent labeled samples.
class KnnStreamRegressor final : public StreamRegressor {
  public:
    explicit KnnStreamRegressor(KnnStreamSpec spec);

    [[nodiscard]] Prediction predict(std::span<const double> x) const override;
    void learn_one(std::span<const double> x, double y) override;
    [[nodiscard]] std::uint64_t state_hash() const override;

    [[nodiscard]] std::size_t buffered() const { return ys_.size(); }
    [[nodiscard]] const std::deque<std::vector<double>>& buffer_x() const { return xs_; }
    [[nodiscard]] const std::deque<double>& buffer_y() const { return ys_; }

  private:
    KnnStreamSpec spec_;
    std::deque<std::vector<double>> xs_;
    std::deque<double> ys_;
};

} // namespace habcast
