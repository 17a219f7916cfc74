#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json_fwd.hpp>

#include "habcast/batch/forest.hpp"
#include "habcast/batch/knn.hpp"
#include "habcast/batch/mlp.hpp"
#include "habcast/batch/svr.hpp"
#include "habcast/dome.hpp"
#include "habcast/regressor.hpp"
#include "habcast/stream/hoeffding.hpp"
#include "habcast/stream/knn_stream.hpp"

namespace habcast {

enum class ModelFamily { KnnBl, KnnSl, Htr, Hatr, Svr, Mlp, Rf, Dome };
enum class Paradigm { Batch, Stream };

inline constexpr ModelFamily kAllFamilies[] = {ModelFamily::KnnBl, ModelFamily::KnnSl, ModelFamily::Htr,
                                               ModelFamily::Hatr,  ModelFamily::Svr,   ModelFamily::Mlp,
                                               ModelFamily::Rf,    ModelFamily::Dome};

/// Display names: kNN-BL, kNN-SL, HTR, HATR, SVR, MLP, RF, DoME.
std::string_view family_name(ModelFamily family);
/// Case-insensitive; throws std::invalid_argument on unknown names.
ModelFamily parse_family(std::string_view name);
Paradigm paradigm_of(ModelFamily family);

using LearnerParams = std::variant<KnnSpec, KnnStreamSpec, HoeffdingSpec, SvrSpec, MlpSpec, ForestSpec, DomeSpec>;

/// One hyperparameter point of one model family.
struct LearnerSpec {
    ModelFamily family = ModelFamily::KnnBl;
    LearnerParams params = KnnSpec{};

    static LearnerSpec defaults(ModelFamily family);
};

nlohmann::json to_json(const LearnerSpec& spec);
/// Keys missing from the object keep the family's defaults.
LearnerSpec learner_spec_from_json(const nlohmann::json& j);
/// Compact "key=value;..." rendering of the hyperparameters.
std::string describe(const LearnerSpec& spec);

std::unique_ptr<BatchRegressor> make_batch_learner(const LearnerSpec& spec, std::uint64_t seed);
std::unique_ptr<StreamRegressor> make_stream_learner(const LearnerSpec& spec);

std::string_view kernel_name(KernelType kernel);
std::string_view criterion_name(SplitCriterion criterion);

} // namespace habcast
