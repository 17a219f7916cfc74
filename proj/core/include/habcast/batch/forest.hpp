#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "habcast/regressor.hpp"

namespace habcast {

enum class SplitCriterion { SquaredError, FriedmanMse, Poisson };

struct ForestSpec {
    SplitCriterion criterion = SplitCriterion::SquaredError;
    std::optional<int> max_depth; ///< nullopt grows until leaves are pure
    int n_trees = 1000;
    bool bootstrap = true;
    double min_samples_split = 2.0;
    unsigned threads = 0; ///< 0 uses the hardware concurrency
};

struct SplitChoice {
    std::size_t feature = 0;
    double threshold = 0.0;
    double improvement = 0.0;
};

/// Impurity decrease of splitting a node (weighted totals) into left/right children.
/// Squared error: SSE reduction; Friedman: wL*wR/(wL+wR)*(meanL-meanR)^2;
/// Poisson: deviance reduction, a child with mean 0 contributing 0.
double split_improvement(SplitCriterion criterion, double w_left, double sum_left, double w_right, double sum_right);

/// Best axis-aligned split of `rows` (weights may repeat rows, as bootstrap counts do).
/// Thresholds are midpoints between consecutive distinct values; ties keep the
/// lowest feature index, then the lowest threshold.
std::optional<SplitChoice> best_split(const Matrix& x, std::span<const double> y, std::span<const double> weights,
                                      SplitCriterion criterion);

class RegressionTree {
  public:
    struct Node {
        std::size_t feature = 0;
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        double value = 0.0;
        int depth = 0;
        [[nodiscard]] bool is_leaf() const { return left < 0; }
    };

    /// Grows the tree on rows with positive weight.
    void fit(const Matrix& x, std::span<const double> y, std::span<const double> weights, SplitCriterion criterion,
             std::optional<int> max_depth, double min_samples_split = 2.0);
    [[nodiscard]] double predict(std::span<const double> x) const;
    [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
    [[nodiscard]] int depth() const;

  private:
    std::vector<Node> nodes_;
};

/// Bagged regression trees; per-tree seeds derive from the root seed, so the
/// fitted forest does not depend on the worker count.
class RandomForest final : public BatchRegressor {
  public:
    RandomForest(ForestSpec spec, std::uint64_t seed) : spec_(spec), seed_(seed) {}

    void fit(const Matrix& x, std::span<const double> y) override;
    [[nodiscard]] Prediction predict(std::span<const double> x) const override;

    [[nodiscard]] const std::vector<RegressionTree>& trees() const { return trees_; }
    /// Bootstrap draw counts of tree `t` for a training set of `n` rows.
    [[nodiscard]] std::vector<double> bootstrap_weights(std::size_t t, std::size_t n) const;

  private:
    ForestSpec spec_;
    std::uint64_t seed_;
    std::vector<RegressionTree> trees_;
};

/// SplitMix64 finalizer, used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace habcast
