#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "habcast/dataset.hpp"
#include "habcast/experiment.hpp"
#include "habcast/grid.hpp"
#include "habcast/learner.hpp"

namespace habcast {

enum class PcaMode { Off, On, Both };

/// Table labels for the two feature-extraction settings.
inline constexpr const char* kNoPcaLabel = "No PCA";
inline constexpr const char* kPcaLabel = "PCA";

/// One model column of the experiment: a display label and the candidate
/// configurations searched for it (a single candidate when no sweep is wanted).
struct ModelPlan {
    std::string label;
    ModelFamily family = ModelFamily::KnnBl;
    std::vector<LearnerSpec> candidates;
};

/// Split years given explicitly, or derived from the data: first year
/// pretrain, last year test, everything in between train.
struct SplitConfig {
    std::optional<std::vector<int>> pretrain;
    std::optional<std::vector<int>> train;
    std::optional<std::vector<int>> test;
};

struct RunConfig {
    std::vector<StationConfig> stations;
    std::vector<int> horizons{1};
    PcaMode pca = PcaMode::Both;
    double variance_threshold = 0.999;
    SplitConfig split;
    std::vector<ModelPlan> models;
    std::uint64_t seed = 0;
    bool test_update = false;
    unsigned parallel = 1;
    std::optional<GridPreset> preset; ///< set for sweeps built from family names
    char decimal_separator = '.';
};

/// `run` configs list concrete models ("models": spec objects or family names,
/// one candidate each). `grid` configs list "families" swept over a preset.
/// Relative CSV paths resolve against `base_dir`. Throws std::invalid_argument
/// on malformed input.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig grid_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                std::optional<GridPreset> preset_override = std::nullopt);
nlohmann::json to_json(const RunConfig& config);

/// Resolves the year split for the anchor years present in `rows`.
SplitPlan resolve_split(const SplitConfig& split, const SupervisedSet& rows);

struct CellKey {
    std::string station;
    int horizon = 1;
    std::string model;
    std::string extraction; ///< kNoPcaLabel or kPcaLabel

    /// Relative output directory, e.g. "A8/h3/DoME_nopca".
    [[nodiscard]] std::string path() const;
    [[nodiscard]] std::string id() const;
};

struct CellOutcome {
    CellKey key;
    ModelFamily family = ModelFamily::KnnBl;
    std::vector<GridEntry> entries;
    std::optional<std::size_t> best;
    std::optional<ExperimentResult> best_result;
    std::uint64_t cell_seed = 0;
    std::size_t input_features = 0; ///< before the transform
    std::size_t model_features = 0; ///< after the transform

    [[nodiscard]] bool succeeded() const { return best.has_value(); }
};

struct RunOutcome {
    RunConfig config;
    std::vector<CellOutcome> cells; ///< station, horizon, extraction, model order
    [[nodiscard]] std::size_t succeeded() const;
};

struct ExecutionOptions {
    /// Called after each finished job with (done, total); may run on any worker.
    std::function<void(std::size_t, std::size_t)> progress;
};

/// Loads every station, prepares one dataset per (station, horizon, extraction)
/// and runs all (cell, candidate) jobs on `config.parallel` workers. The
/// outcome does not depend on the worker count. Dataset errors throw; learner
/// errors are recorded per candidate.
RunOutcome execute(const RunConfig& config, const ExecutionOptions& options = {});

/// Seed of candidate `index` within a cell.
std::uint64_t candidate_seed(std::uint64_t cell_seed, std::size_t index);

} // namespace habcast
