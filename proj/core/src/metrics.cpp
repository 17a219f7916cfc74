#include "habcast/metrics.hpp"

#include <cmath>

namespace habcast {

namespace {

void check_pair(std::span<const double> observed, std::span<const double> predicted, std::size_t min_n, const char* what) {
    if (observed.size() != predicted.size()) {
        throw std::invalid_argument(std::string(what) + ": observed/predicted length mismatch");
    }
    if (observed.size() < min_n) {
        throw std::invalid_argument(std::string(what) + ": need at least " + std::to_string(min_n) + " values");
    }
}

} // namespace

std::vector<double> PredictionLog::observed() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.observed);
    return out;
}

std::vector<double> PredictionLog::predicted() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.predicted);
    return out;
}

void PredictionLog::validate() const {
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (!(records[i - 1].date < records[i].date)) {
            throw std::invalid_argument("prediction log " + experiment_id + ": dates not strictly increasing at " +
                                        format_date(records[i].date));
        }
    }
}

double r2_score(std::span<const double> observed, std::span<const double> predicted) {
    check_pair(observed, predicted, 2, "r2");
    double mean = 0.0;
    for (double v : observed) mean += v;
    mean /= static_cast<double>(observed.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    bool all_equal = true;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = observed[i] - predicted[i];
        const double d = observed[i] - mean;
        ss_res += e * e;
        ss_tot += d * d;
        if (observed[i] != observed[0]) all_equal = false;
    }
    if (all_equal) throw UndefinedR2();
    return 1.0 - ss_res / ss_tot;
}

double mae(std::span<const double> observed, std::span<const double> predicted) {
    check_pair(observed, predicted, 1, "mae");
    double acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) acc += std::abs(observed[i] - predicted[i]);
    return acc / static_cast<double>(observed.size());
}

double rmse(std::span<const double> observed, std::span<const double> predicted) {
    check_pair(observed, predicted, 1, "rmse");
    double acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = observed[i] - predicted[i];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(observed.size()));
}

MetricsReport compute_metrics(const PredictionLog& log) {
    log.validate();
    const auto obs = log.observed();
    const auto pred = log.predicted();
    return {r2_score(obs, pred), mae(obs, pred), rmse(obs, pred), obs.size()};
}

} // namespace habcast
