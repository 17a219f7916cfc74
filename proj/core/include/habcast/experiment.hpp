#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "habcast/dataset.hpp"
#include "habcast/learner.hpp"
#include "habcast/metrics.hpp"
#include "habcast/preprocess.hpp"

namespace habcast {

enum class Phase { Pretrain, Train, Test };

/// One scheduler action of a stream experiment; `row` indexes the
/// concatenated pretrain + train + test rows.
struct StreamEvent {
    enum class Kind { Predict, Learn };
    Kind kind = Kind::Predict;
    std::size_t row = 0;
    Phase phase = Phase::Pretrain;
};

struct ExperimentOptions {
    std::string experiment_id;
    std::uint64_t seed = 0;
    /// Stream learners keep learning (test-then-train) during the test phase.
    bool test_update = false;
    bool record_trace = false;
};

struct ExperimentResult {
    PredictionLog log;
    MetricsReport metrics;
    /// Human-readable model, e.g. a fitted equation; empty when the model has none.
    std::string model_text;
    std::vector<StreamEvent> trace;
    std::optional<std::uint64_t> state_before_test;
    std::optional<std::uint64_t> state_after_test;
    std::size_t cold_starts = 0;
    std::size_t guarded_divisions = 0;
};

/// Names of the transformed feature columns: the original names without PCA, PC1..PCk with it.
std::vector<std::string> transformed_feature_names(const FeatureTransform& transform,
                                                   const std::vector<std::string>& original);

/// Fits on pretrain + train (transformed), predicts every test row.
ExperimentResult run_batch_experiment(const SplitParts& parts, const FeatureTransform& transform,
                                      const LearnerSpec& spec, int horizon, const ExperimentOptions& options);

/// Presents rows chronologically. Each row is predicted on arrival; the label
/// of an anchor dated d becomes learnable only after the row dated d + horizon
/// has been predicted. During the test phase the learner is frozen unless
/// options.test_update is set.
ExperimentResult run_stream_experiment(const SplitParts& parts, const FeatureTransform& transform,
                                       const LearnerSpec& spec, int horizon, const ExperimentOptions& options);

/// Dispatches on the learner's paradigm. Learner errors are rethrown with the experiment id prefixed.
ExperimentResult run_experiment(const SplitParts& parts, const FeatureTransform& transform, const LearnerSpec& spec,
                                int horizon, const ExperimentOptions& options);

} // namespace habcast
