#include "habcast/grid.hpp"

#include <stdexcept>
#include <string>

namespace habcast {

namespace {

const std::vector<int> kNeighbors{1, 3, 5, 7, 9, 11};
const std::vector<int> kGrace{7, 14, 30, 180, 365};
const std::vector<double> kDelta{1e-5, 1e-6, 1e-7, 1e-8};
const std::vector<double> kDecay{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
const std::vector<double> kTau{0.01, 0.05, 0.1};
const std::vector<KernelType> kKernels{KernelType::Linear, KernelType::Gaussian, KernelType::Polynomial};
const std::vector<double> kSvrC{0.001, 0.01, 0.05, 0.1, 1.0, 10.0};
const std::vector<double> kSvrEpsilon{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
const std::vector<int> kDegree{1, 2, 3};
const std::vector<std::vector<int>> kArchitectures{{2}, {4}, {8}, {10}, {2, 2}, {4, 2}, {10, 2}, {10, 10}, {16, 8}, {32, 8}, {32, 16}};
const std::vector<double> kMlpRate{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
const std::vector<SplitCriterion> kCriteria{SplitCriterion::SquaredError, SplitCriterion::FriedmanMse, SplitCriterion::Poisson};
const std::vector<std::optional<int>> kDepth{2, 4, 10, 20, 50, std::nullopt};
const std::vector<double> kMinReduction{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7};

std::vector<int> max_nodes_range() {
    std::vector<int> out;
    for (int n = 5; n <= 100; n += 5) out.push_back(n);
    return out;
}

struct Axes {
    std::vector<int> neighbors;
    std::vector<int> grace;
    std::vector<double> delta;
    std::vector<double> decay;
    std::vector<double> tau;
    std::vector<KernelType> kernels;
    std::vector<double> svr_c;
    std::vector<double> svr_epsilon;
    std::vector<int> degree;
    std::vector<std::vector<int>> architectures;
    std::vector<double> mlp_rate;
    std::vector<SplitCriterion> criteria;
    std::vector<std::optional<int>> depth;
    int n_trees = 1000;
    std::vector<double> min_reduction;
    std::vector<int> max_nodes;
};

Axes axes_for(GridPreset preset) {
    if (preset == GridPreset::Full) {
        return {kNeighbors, kGrace,          kDelta,   kDecay,   kTau,     kKernels, kSvrC,         kSvrEpsilon,
                kDegree,    kArchitectures, kMlpRate, kCriteria, kDepth,  1000,     kMinReduction, max_nodes_range()};
    }
    return {kNeighbors,
            {30, 180},
            {1e-7},
            {0.9},
            {0.05},
            {KernelType::Linear, KernelType::Gaussian},
            {1.0, 10.0},
            {0.1},
            {2},
            {{10, 10}},
            {1e-2, 1e-3},
            {SplitCriterion::SquaredError},
            {10, std::nullopt},
            100,
            {1e-4},
            {10, 20, 30}};
}

} // namespace

GridPreset parse_preset(std::string_view name) {
    if (name == "full" || name == "table3") return GridPreset::Full;
    if (name == "reduced") return GridPreset::Reduced;
    throw std::invalid_argument("unknown grid preset '" + std::string(name) + "' (expected full or reduced)");
}

std::string_view preset_name(GridPreset preset) { return preset == GridPreset::Full ? "full" : "reduced"; }

std::vector<LearnerSpec> enumerate_grid(ModelFamily family, GridPreset preset) {
    const auto a = axes_for(preset);
    std::vector<LearnerSpec> out;
    switch (family) {
        case ModelFamily::KnnBl:
            for (int k : a.neighbors) out.push_back({family, KnnSpec{k}});
            break;
        case ModelFamily::KnnSl:
            for (int k : a.neighbors) out.push_back({family, KnnStreamSpec{k, 1000, 20}});
            break;
        case ModelFamily::Htr:
        case ModelFamily::Hatr:
            for (int g : a.grace) {
                for (double d : a.delta) {
                    for (double m : a.decay) {
                        for (double t : a.tau) {
                            HoeffdingSpec s;
                            s.grace_period = g;
                            s.delta = d;
                            s.model_selector_decay = m;
                            s.tau = t;
                            out.push_back({family, s});
                        }
                    }
                }
            }
            break;
        case ModelFamily::Svr:
            for (auto kernel : a.kernels) {
                for (double c : a.svr_c) {
                    for (double eps : a.svr_epsilon) {
                        const std::vector<int> degrees = kernel == KernelType::Polynomial ? a.degree : std::vector<int>{3};
                        for (int deg : degrees) {
                            SvrSpec s;
                            s.kernel = kernel;
                            s.c = c;
                            s.epsilon = eps;
                            s.degree = deg;
                            out.push_back({family, s});
                        }
                    }
                }
            }
            break;
        case ModelFamily::Mlp:
            for (const auto& arch : a.architectures) {
                for (double lr : a.mlp_rate) {
                    MlpSpec s;
                    s.hidden = arch;
                    s.learning_rate = lr;
                    out.push_back({family, s});
                }
            }
            break;
        case ModelFamily::Rf:
            for (auto crit : a.criteria) {
                for (auto depth : a.depth) {
                    ForestSpec s;
                    s.criterion = crit;
                    s.max_depth = depth;
                    s.n_trees = a.n_trees;
                    out.push_back({family, s});
                }
            }
            break;
        case ModelFamily::Dome:
            for (double r : a.min_reduction) {
                for (int n : a.max_nodes) {
                    DomeSpec s;
                    s.min_reduction_mse = r;
                    s.max_num_nodes = n;
                    out.push_back({family, s});
                }
            }
            break;
    }
    return out;
}

bool better_selection(double r2, std::size_t index, double incumbent_r2, std::size_t incumbent_index) {
    if (r2 != incumbent_r2) return r2 > incumbent_r2;
    return index < incumbent_index;
}

GridOutcome grid_search(const SplitParts& parts, const FeatureTransform& transform, std::span<const LearnerSpec> grid,
                        int horizon, const ExperimentOptions& options) {
    GridOutcome outcome;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        GridEntry entry{grid[i], std::nullopt, {}};
        try {
            auto opts = options;
            opts.experiment_id = options.experiment_id + "#" + std::to_string(i);
            auto result = run_experiment(parts, transform, grid[i], horizon, opts);
            entry.metrics = result.metrics;
            if (!outcome.best ||
                better_selection(result.metrics.r2, i, outcome.entries[*outcome.best].metrics->r2, *outcome.best)) {
                outcome.best = i;
                outcome.best_result = std::move(result);
            }
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        outcome.entries.push_back(std::move(entry));
    }
    return outcome;
}

} // namespace habcast
