#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "habcast/experiment.hpp"
#include "habcast/learner.hpp"

namespace habcast {

enum class GridPreset {
    Full,    ///< every hyperparameter value of the published grid
    Reduced, ///< a small subset for desk-scale sweeps (see README)
};

GridPreset parse_preset(std::string_view name);
std::string_view preset_name(GridPreset preset);

/// Cartesian grid in a fixed enumeration order (first listed parameter varies slowest).
std::vector<LearnerSpec> enumerate_grid(ModelFamily family, GridPreset preset = GridPreset::Full);

struct GridEntry {
    LearnerSpec spec;
    std::optional<MetricsReport> metrics;
    std::string error; ///< set when the configuration failed
};

struct GridOutcome {
    std::vector<GridEntry> entries;
    std::optional<std::size_t> best; ///< index into entries
    std::optional<ExperimentResult> best_result;
};

/// True when candidate (r2, index) beats incumbent: higher test R^2, earlier index on ties.
bool better_selection(double r2, std::size_t index, double incumbent_r2, std::size_t incumbent_index);

/// Runs every configuration; failures are recorded, not thrown. Selection is on
/// test R^2, which makes this a model-comparison protocol rather than tuning.
GridOutcome grid_search(const SplitParts& parts, const FeatureTransform& transform, std::span<const LearnerSpec> grid,
                        int horizon, const ExperimentOptions& options);

} // namespace habcast
