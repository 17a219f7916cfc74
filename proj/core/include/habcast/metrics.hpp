#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "habcast/dataset.hpp"
#include "habcast/regressor.hpp"

namespace habcast {

struct PredictionRecord {
    Date date;
    double observed = 0.0;
    double predicted = 0.0;
    PredictionFlags flags{};
};

/// Chronological predictions of one experiment on its test rows.
struct PredictionLog {
    std::string experiment_id;
    std::vector<PredictionRecord> records;

    [[nodiscard]] std::vector<double> observed() const;
    [[nodiscard]] std::vector<double> predicted() const;
    /// Throws std::invalid_argument unless dates are strictly increasing.
    void validate() const;
};

/// R^2 is undefined when every observation is identical.
class UndefinedR2 : public std::domain_error {
  public:
    UndefinedR2() : std::domain_error("R^2 undefined: all observed values are identical") {}
};

struct MetricsReport {
    double r2 = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
};

/// 1 - sum (y - yhat)^2 / sum (y - mean(y))^2.
double r2_score(std::span<const double> observed, std::span<const double> predicted);
double mae(std::span<const double> observed, std::span<const double> predicted);
double rmse(std::span<const double> observed, std::span<const double> predicted);

MetricsReport compute_metrics(const PredictionLog& log);

} // namespace habcast
