#pragma once

#include <cstdint>
#include <span>

#include "habcast/matrix.hpp"

namespace habcast {

struct PredictionFlags {
    bool cold_start = false;       ///< stream learner had nothing to predict from
    bool guarded_division = false; ///< an expression denominator was clamped
};

struct Prediction {
    double value = 0.0;
    PredictionFlags flags{};
};

/// Offline learner: sees the whole training partition at once.
class BatchRegressor {
  public:
    virtual ~BatchRegressor() = default;
    virtual void fit(const Matrix& x, std::span<const double> y) = 0;
    [[nodiscard]] virtual Prediction predict(std::span<const double> x) const = 0;
};

/// Online learner: interleaved predict / learn_one in arrival order.
class StreamRegressor {
  public:
    virtual ~StreamRegressor() = default;
    [[nodiscard]] virtual Prediction predict(std::span<const double> x) const = 0;
    virtual void learn_one(std::span<const double> x, double y) = 0;
    /// Hash of the full mutable state; equal hashes mean the learner did not change.
    [[nodiscard]] virtual std::uint64_t state_hash() const = 0;
};

} // namespace habcast
