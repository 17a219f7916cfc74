#include "habcast/learner.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "habcast/format.hpp"

namespace habcast {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

KernelType parse_kernel(std::string_view name) {
    const auto n = lower(name);
    if (n == "linear") return KernelType::Linear;
    if (n == "gaussian" || n == "rbf") return KernelType::Gaussian;
    if (n == "polynomial" || n == "poly") return KernelType::Polynomial;
    throw std::invalid_argument("unknown SVR kernel '" + std::string(name) + "'");
}

SplitCriterion parse_criterion(std::string_view name) {
    const auto n = lower(name);
    if (n == "squared_error") return SplitCriterion::SquaredError;
    if (n == "friedman_mse") return SplitCriterion::FriedmanMse;
    if (n == "poisson") return SplitCriterion::Poisson;
    throw std::invalid_argument("unknown split criterion '" + std::string(name) + "'");
}

nlohmann::json params_json(const LearnerSpec& spec) {
    using nlohmann::json;
    switch (spec.family) {
        case ModelFamily::KnnBl: return json{{"k", std::get<KnnSpec>(spec.params).k}};
        case ModelFamily::KnnSl: {
            const auto& p = std::get<KnnStreamSpec>(spec.params);
            return json{{"k", p.k}, {"buffer_size", p.buffer_size}, {"max_neighbors_per_node", p.max_neighbors_per_node}};
        }
        case ModelFamily::Htr:
        case ModelFamily::Hatr: {
            const auto& p = std::get<HoeffdingSpec>(spec.params);
            return json{{"grace_period", p.grace_period},
                        {"delta", p.delta},
                        {"model_selector_decay", p.model_selector_decay},
                        {"tau", p.tau}};
        }
        case ModelFamily::Svr: {
            const auto& p = std::get<SvrSpec>(spec.params);
            json j{{"kernel", kernel_name(p.kernel)}, {"c", p.c}, {"epsilon", p.epsilon}};
            if (p.kernel == KernelType::Polynomial) j["degree"] = p.degree;
            return j;
        }
        case ModelFamily::Mlp: {
            const auto& p = std::get<MlpSpec>(spec.params);
            return json{{"hidden", p.hidden}, {"learning_rate", p.learning_rate}, {"epochs", p.epochs}, {"batch_size", p.batch_size}};
        }
        case ModelFamily::Rf: {
            const auto& p = std::get<ForestSpec>(spec.params);
            json j{{"criterion", criterion_name(p.criterion)}, {"n_trees", p.n_trees}};
            j["max_depth"] = p.max_depth ? json(*p.max_depth) : json(nullptr);
            return j;
        }
        case ModelFamily::Dome: {
            const auto& p = std::get<DomeSpec>(spec.params);
            return json{{"min_reduction_mse", p.min_reduction_mse}, {"max_num_nodes", p.max_num_nodes}};
        }
    }
    return {};
}

} // namespace

std::string_view family_name(ModelFamily family) {
    switch (family) {
        case ModelFamily::KnnBl: return "kNN-BL";
        case ModelFamily::KnnSl: return "kNN-SL";
        case ModelFamily::Htr: return "HTR";
        case ModelFamily::Hatr: return "HATR";
        case ModelFamily::Svr: return "SVR";
        case ModelFamily::Mlp: return "MLP";
        case ModelFamily::Rf: return "RF";
        case ModelFamily::Dome: return "DoME";
    }
    return "?";
}

ModelFamily parse_family(std::string_view name) {
    const auto n = lower(name);
    for (auto f : kAllFamilies) {
        if (lower(family_name(f)) == n) return f;
    }
    throw std::invalid_argument("unknown model family '" + std::string(name) + "'");
}

Paradigm paradigm_of(ModelFamily family) {
    switch (family) {
        case ModelFamily::KnnSl:
        case ModelFamily::Htr:
        case ModelFamily::Hatr: return Paradigm::Stream;
        default: return Paradigm::Batch;
    }
}

std::string_view kernel_name(KernelType kernel) {
    switch (kernel) {
        case KernelType::Linear: return "linear";
        case KernelType::Gaussian: return "gaussian";
        case KernelType::Polynomial: return "polynomial";
    }
    return "?";
}

std::string_view criterion_name(SplitCriterion criterion) {
    switch (criterion) {
        case SplitCriterion::SquaredError: return "squared_error";
        case SplitCriterion::FriedmanMse: return "friedman_mse";
        case SplitCriterion::Poisson: return "poisson";
    }
    return "?";
}

LearnerSpec LearnerSpec::defaults(ModelFamily family) {
    switch (family) {
        case ModelFamily::KnnBl: return {family, KnnSpec{}};
        case ModelFamily::KnnSl: return {family, KnnStreamSpec{}};
        case ModelFamily::Htr:
        case ModelFamily::Hatr: return {family, HoeffdingSpec{}};
        case ModelFamily::Svr: return {family, SvrSpec{}};
        case ModelFamily::Mlp: return {family, MlpSpec{}};
        case ModelFamily::Rf: return {family, ForestSpec{}};
        case ModelFamily::Dome: return {family, DomeSpec{}};
    }
    throw std::invalid_argument("unknown model family");
}

nlohmann::json to_json(const LearnerSpec& spec) {
    auto j = params_json(spec);
    j["model"] = family_name(spec.family);
    return j;
}

LearnerSpec learner_spec_from_json(const nlohmann::json& j) {
    auto spec = LearnerSpec::defaults(parse_family(j.at("model").get<std::string>()));
    std::visit(
        [&](auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, KnnSpec>) {
                read(j, "k", p.k);
            } else if constexpr (std::is_same_v<T, KnnStreamSpec>) {
                read(j, "k", p.k);
                read(j, "buffer_size", p.buffer_size);
                read(j, "max_neighbors_per_node", p.max_neighbors_per_node);
            } else if constexpr (std::is_same_v<T, HoeffdingSpec>) {
                read(j, "grace_period", p.grace_period);
                read(j, "delta", p.delta);
                read(j, "model_selector_decay", p.model_selector_decay);
                read(j, "tau", p.tau);
            } else if constexpr (std::is_same_v<T, SvrSpec>) {
                if (j.contains("kernel")) p.kernel = parse_kernel(j.at("kernel").get<std::string>());
                read(j, "c", p.c);
                read(j, "epsilon", p.epsilon);
                read(j, "degree", p.degree);
            } else if constexpr (std::is_same_v<T, MlpSpec>) {
                read(j, "hidden", p.hidden);
                read(j, "learning_rate", p.learning_rate);
                read(j, "epochs", p.epochs);
                read(j, "batch_size", p.batch_size);
            } else if constexpr (std::is_same_v<T, ForestSpec>) {
                if (j.contains("criterion")) p.criterion = parse_criterion(j.at("criterion").get<std::string>());
                read(j, "n_trees", p.n_trees);
                if (j.contains("max_depth")) {
                    const auto& d = j.at("max_depth");
                    p.max_depth = d.is_null() ? std::nullopt : std::optional<int>(d.get<int>());
                }
            } else if constexpr (std::is_same_v<T, DomeSpec>) {
                read(j, "min_reduction_mse", p.min_reduction_mse);
                read(j, "max_num_nodes", p.max_num_nodes);
            }
        },
        spec.params);
    return spec;
}

std::string describe(const LearnerSpec& spec) {
    const auto j = params_json(spec);
    std::string out;
    for (const auto& [key, value] : j.items()) {
        if (!out.empty()) out += ';';
        out += key + "=";
        if (value.is_string()) {
            out += value.get<std::string>();
        } else if (value.is_number_float()) {
            out += format_number(value.get<double>());
        } else if (value.is_array()) {
            std::string arr;
            for (const auto& v : value) arr += (arr.empty() ? "" : "x") + v.dump();
            out += arr;
        } else {
            out += value.dump();
        }
    }
    return out;
}

std::unique_ptr<BatchRegressor> make_batch_learner(const LearnerSpec& spec, std::uint64_t seed) {
    switch (spec.family) {
        case ModelFamily::KnnBl: return std::make_unique<KnnRegressor>(std::get<KnnSpec>(spec.params));
        case ModelFamily::Svr: return std::make_unique<Svr>(std::get<SvrSpec>(spec.params));
        case ModelFamily::Mlp: return std::make_unique<Mlp>(std::get<MlpSpec>(spec.params), seed);
        case ModelFamily::Rf: return std::make_unique<RandomForest>(std::get<ForestSpec>(spec.params), seed);
        case ModelFamily::Dome: return std::make_unique<DomeRegressor>(std::get<DomeSpec>(spec.params));
        default: break;
    }
    throw std::invalid_argument(std::string(family_name(spec.family)) + " is not a batch learner");
}

std::unique_ptr<StreamRegressor> make_stream_learner(const LearnerSpec& spec) {
    switch (spec.family) {
        case ModelFamily::KnnSl: return std::make_unique<KnnStreamRegressor>(std::get<KnnStreamSpec>(spec.params));
        case ModelFamily::Htr:
            return std::make_unique<HoeffdingTreeRegressor>(std::get<HoeffdingSpec>(spec.params), false);
        case ModelFamily::Hatr:
            return std::make_unique<HoeffdingTreeRegressor>(std::get<HoeffdingSpec>(spec.params), true);
        default: break;
    }
    throw std::invalid_argument(std::string(family_name(spec.family)) + " is not a stream learner");
}

} // namespace habcast
