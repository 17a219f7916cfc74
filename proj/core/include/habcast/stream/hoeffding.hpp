#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "habcast/regressor.hpp"
#include "habcast/stream/adwin.hpp"

namespace habcast {

/// sqrt(R^2 ln(1/delta) / (2n)).
double hoeffding_bound(double range, double delta, double n);

struct HoeffdingSpec {
    int grace_period = 200;
    double delta = 1e-7;
    double model_selector_decay = 0.95;
    double tau = 0.05;
    double learning_rate = 0.01;
    /// Adaptive variant only: ADWIN confidence for per-node error monitors.
    double adwin_delta = 0.002;
    /// Adaptive variant only: samples each error monitor needs before a swap decision.
    int min_switch_samples = 300;
};

/// Target statistics as (count, sum, sum of squared deviations).
struct TargetStats {
    double n = 0.0;
    double sum = 0.0;
    double m2 = 0.0;

    void add(double y);
    void merge(const TargetStats& other);
    [[nodiscard]] double mean() const { return n > 0.0 ? sum / n : 0.0; }
    /// Population variance.
    [[nodiscard]] double variance() const { return n > 0.0 ? m2 / n : 0.0; }
};

/// Equal-width histogram over the running range of one feature at one leaf.
class FeatureHistogram {
  public:
    static constexpr std::size_t kBins = 32;

    void add(double x, double y);
    [[nodiscard]] bool empty() const { return !initialized_; }
    [[nodiscard]] double lo() const { return lo_; }
    [[nodiscard]] double hi() const { return hi_; }
    [[nodiscard]] const std::array<TargetStats, kBins>& bins() const { return bins_; }
    /// Upper edge of bin b.
    [[nodiscard]] double boundary(std::size_t b) const;
    [[nodiscard]] std::size_t bin_of(double x) const;

  private:
    void expand(double x);

    bool initialized_ = false;
    double lo_ = 0.0;
    double hi_ = 0.0;
    std::array<TargetStats, kBins> bins_{};
};

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double merit = 0.0; ///< 1 - weighted child variance / parent variance
    TargetStats left;
    TargetStats right;
};

/// Best bin-boundary split of one feature, or nullopt when no boundary separates samples.
std::optional<SplitCandidate> best_histogram_split(const FeatureHistogram& h, std::size_t feature,
                                                   const TargetStats& parent);

struct HoeffdingEvent {
    std::size_t sample = 0;
    std::string kind; ///< "split", "drift", "alternate_started", "replaced", "alternate_pruned"
    std::size_t depth = 0;
};

/// Hoeffding tree regressor; with `adaptive` set every internal node monitors
/// its error with ADWIN and grows alternate subtrees after error increases.
class HoeffdingTreeRegressor final : public StreamRegressor {
  public:
    HoeffdingTreeRegressor(HoeffdingSpec spec, bool adaptive);
    ~HoeffdingTreeRegressor() override;
    HoeffdingTreeRegressor(HoeffdingTreeRegressor&&) noexcept;
    HoeffdingTreeRegressor& operator=(HoeffdingTreeRegressor&&) noexcept;

    [[nodiscard]] Prediction predict(std::span<const double> x) const override;
    void learn_one(std::span<const double> x, double y) override;
    [[nodiscard]] std::uint64_t state_hash() const override;

    [[nodiscard]] std::size_t node_count() const;
    [[nodiscard]] std::size_t leaf_count() const;
    [[nodiscard]] std::size_t depth() const;
    /// Split feature and threshold of the root, if it has split.
    [[nodiscard]] std::optional<std::pair<std::size_t, double>> root_split() const;
    [[nodiscard]] std::size_t samples_seen() const { return seen_; }
    [[nodiscard]] std::size_t replacements() const { return replacements_; }
    [[nodiscard]] std::size_t alternates_started() const { return alternates_started_; }
    [[nodiscard]] const std::vector<HoeffdingEvent>& events() const { return events_; }
    [[nodiscard]] const HoeffdingSpec& spec() const { return spec_; }
    [[nodiscard]] bool adaptive() const { return adaptive_; }

    struct Node;

  private:
    void learn_node(std::unique_ptr<Node>& node, std::span<const double> z, std::span<const double> x, double y,
                    std::size_t depth);
    void learn_leaf(std::unique_ptr<Node>& node, std::span<const double> z, std::span<const double> x, double y,
                    std::size_t depth);
    std::unique_ptr<Node> make_leaf(std::size_t dim) const;
    std::vector<double> standardize(std::span<const double> x) const;

    HoeffdingSpec spec_;
    bool adaptive_;
    std::unique_ptr<Node> root_;
    std::size_t dim_ = 0;
    std::size_t seen_ = 0;
    // Running feature moments (Welford) for the leaf linear models.
    std::vector<double> x_mean_;
    std::vector<double> x_m2_;
    std::size_t replacements_ = 0;
    std::size_t alternates_started_ = 0;
    std::vector<HoeffdingEvent> events_;
};

} // namespace habcast
