#include "habcast/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "habcast/hash.hpp"

namespace habcast {

namespace {

PcaMode parse_pca_mode(const nlohmann::json& j) {
    if (j.is_boolean()) return j.get<bool>() ? PcaMode::On : PcaMode::Off;
    const auto s = j.get<std::string>();
    if (s == "on") return PcaMode::On;
    if (s == "off") return PcaMode::Off;
    if (s == "both") return PcaMode::Both;
    throw std::invalid_argument("pca must be on, off or both (got '" + s + "')");
}

std::string pca_mode_name(PcaMode m) {
    switch (m) {
        case PcaMode::On: return "on";
        case PcaMode::Off: return "off";
        case PcaMode::Both: return "both";
    }
    return "both";
}

// Fields shared by run and grid configs.
RunConfig common_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    RunConfig c;
    if (!j.contains("stations") || !j.at("stations").is_array() || j.at("stations").empty()) {
        throw std::invalid_argument("config needs a non-empty \"stations\" array");
    }
    std::set<std::string> ids;
    for (const auto& s : j.at("stations")) {
        c.stations.push_back(station_config_from_json(s, base_dir));
        if (!ids.insert(c.stations.back().station_id).second) {
            throw std::invalid_argument("duplicate station id '" + c.stations.back().station_id + "'");
        }
    }
    if (j.contains("horizons")) c.horizons = j.at("horizons").get<std::vector<int>>();
    if (c.horizons.empty()) throw std::invalid_argument("config needs at least one horizon");
    for (int h : c.horizons) {
        if (h < 1) throw std::invalid_argument("horizons must be >= 1");
    }
    if (std::set<int>(c.horizons.begin(), c.horizons.end()).size() != c.horizons.size()) {
        throw std::invalid_argument("horizons must be distinct");
    }
    if (j.contains("pca")) c.pca = parse_pca_mode(j.at("pca"));
    if (j.contains("variance_threshold")) c.variance_threshold = j.at("variance_threshold").get<double>();
    if (!(c.variance_threshold > 0.0 && c.variance_threshold <= 1.0)) {
        throw std::invalid_argument("variance_threshold must be in (0, 1]");
    }
    if (j.contains("split")) {
        const auto& s = j.at("split");
        if (s.contains("pretrain")) c.split.pretrain = s.at("pretrain").get<std::vector<int>>();
        if (s.contains("train")) c.split.train = s.at("train").get<std::vector<int>>();
        if (s.contains("test")) c.split.test = s.at("test").get<std::vector<int>>();
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("test_update")) c.test_update = j.at("test_update").get<bool>();
    if (j.contains("parallel")) c.parallel = std::max(1u, j.at("parallel").get<unsigned>());
    if (j.contains("decimal_separator")) {
        const auto d = j.at("decimal_separator").get<std::string>();
        if (d != "." && d != ",") throw std::invalid_argument("decimal_separator must be \".\" or \",\"");
        c.decimal_separator = d[0];
    }
    return c;
}

void check_unique_labels(const std::vector<ModelPlan>& models) {
    std::set<std::string> labels;
    for (const auto& m : models) {
        if (!labels.insert(m.label).second) throw std::invalid_argument("duplicate model label '" + m.label + "'");
    }
}

std::vector<int> years_of(const SupervisedSet& rows) {
    std::set<int> years;
    for (const auto& r : rows.rows) years.insert(year_of(r.anchor_date));
    return {years.begin(), years.end()};
}

struct Prepared {
    SplitParts parts;
    FeatureTransform transform;
};

} // namespace

std::string CellKey::path() const {
    return station + "/h" + std::to_string(horizon) + "/" + model + (extraction == kPcaLabel ? "_pca" : "_nopca");
}

std::string CellKey::id() const { return path(); }

std::size_t RunOutcome::succeeded() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.succeeded(); }));
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    auto c = common_from_json(j, base_dir);
    if (!j.contains("models") || !j.at("models").is_array() || j.at("models").empty()) {
        throw std::invalid_argument("run config needs a non-empty \"models\" array");
    }
    for (const auto& m : j.at("models")) {
        LearnerSpec spec = m.is_string() ? LearnerSpec::defaults(parse_family(m.get<std::string>()))
                                         : learner_spec_from_json(m);
        std::string label = m.is_object() && m.contains("label") ? m.at("label").get<std::string>()
                                                                 : std::string(family_name(spec.family));
        c.models.push_back({std::move(label), spec.family, {spec}});
    }
    check_unique_labels(c.models);
    return c;
}

RunConfig grid_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                std::optional<GridPreset> preset_override) {
    auto c = common_from_json(j, base_dir);
    GridPreset preset = GridPreset::Full;
    if (j.contains("preset")) preset = parse_preset(j.at("preset").get<std::string>());
    if (preset_override) preset = *preset_override;
    c.preset = preset;
    std::vector<ModelFamily> families;
    if (j.contains("families")) {
        for (const auto& f : j.at("families")) families.push_back(parse_family(f.get<std::string>()));
    } else {
        families.assign(std::begin(kAllFamilies), std::end(kAllFamilies));
    }
    if (families.empty()) throw std::invalid_argument("grid config needs at least one family");
    for (auto f : families) c.models.push_back({std::string(family_name(f)), f, enumerate_grid(f, preset)});
    check_unique_labels(c.models);
    return c;
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["stations"] = nlohmann::json::array();
    for (const auto& s : c.stations) j["stations"].push_back(to_json(s));
    j["horizons"] = c.horizons;
    j["pca"] = pca_mode_name(c.pca);
    j["variance_threshold"] = c.variance_threshold;
    nlohmann::json split = nlohmann::json::object();
    if (c.split.pretrain) split["pretrain"] = *c.split.pretrain;
    if (c.split.train) split["train"] = *c.split.train;
    if (c.split.test) split["test"] = *c.split.test;
    j["split"] = split;
    j["seed"] = c.seed;
    j["test_update"] = c.test_update;
    if (c.preset) j["preset"] = std::string(preset_name(*c.preset));
    j["models"] = nlohmann::json::array();
    for (const auto& m : c.models) {
        j["models"].push_back({{"label", m.label},
                               {"family", std::string(family_name(m.family))},
                               {"candidates", m.candidates.size()}});
    }
    return j;
}

SplitPlan resolve_split(const SplitConfig& split, const SupervisedSet& rows) {
    const auto years = years_of(rows);
    SplitPlan plan;
    if (split.pretrain || split.train || split.test) {
        if (!split.pretrain || !split.train || !split.test) {
            throw std::invalid_argument("split must list pretrain, train and test years together");
        }
        plan.pretrain_years = {split.pretrain->begin(), split.pretrain->end()};
        plan.train_years = {split.train->begin(), split.train->end()};
        plan.test_years = {split.test->begin(), split.test->end()};
    } else {
        if (years.size() < 3) {
            throw std::invalid_argument("the default split needs at least three calendar years of rows");
        }
        plan.pretrain_years = {years.front()};
        plan.test_years = {years.back()};
        plan.train_years = {years.begin() + 1, years.end() - 1};
    }
    plan.validate();
    return plan;
}

std::uint64_t candidate_seed(std::uint64_t cell_seed, std::size_t index) { return mix_seed(cell_seed, index); }

RunOutcome execute(const RunConfig& config, const ExecutionOptions& options) {
    if (config.models.empty()) throw std::invalid_argument("no models configured");
    std::vector<bool> extractions;
    if (config.pca != PcaMode::On) extractions.push_back(false);
    if (config.pca != PcaMode::Off) extractions.push_back(true);

    // Datasets, indexed [station][horizon][extraction].
    std::vector<Prepared> prepared;
    RunOutcome outcome;
    outcome.config = config;
    for (const auto& station : config.stations) {
        if (!std::filesystem::exists(station.csv)) {
            throw std::invalid_argument("station " + station.station_id + ": missing file " + station.csv.string());
        }
        const auto raw = read_series_csv(station.csv, station.station_id, station.target);
        const auto daily = interpolate_daily(raw);
        for (int h : config.horizons) {
            const auto rows = build_supervised(daily, h, station.features);
            const auto plan = resolve_split(config.split, rows);
            auto parts = split_by_years(rows, plan);
            for (bool pca : extractions) {
                Prepared p{parts, fit_feature_transform(parts.pretrain.feature_matrix(), pca, config.variance_threshold)};
                for (const auto& m : config.models) {
                    CellOutcome cell;
                    cell.key = {station.station_id, h, m.label, pca ? kPcaLabel : kNoPcaLabel};
                    cell.family = m.family;
                    Fnv1a f;
                    f.add(cell.key.id());
                    cell.cell_seed = mix_seed(config.seed, f.value());
                    cell.input_features = p.transform.input_dimension();
                    cell.model_features = p.transform.output_dimension();
                    for (const auto& spec : m.candidates) cell.entries.push_back({spec, std::nullopt, {}});
                    outcome.cells.push_back(std::move(cell));
                }
                prepared.push_back(std::move(p));
            }
        }
    }

    struct Job {
        std::size_t cell;
        std::size_t candidate;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < outcome.cells.size(); ++c) {
        for (std::size_t i = 0; i < outcome.cells[c].entries.size(); ++i) jobs.push_back({c, i});
    }
    const std::size_t models = config.models.size();
    const unsigned workers = std::max(1u, std::min<unsigned>(config.parallel, static_cast<unsigned>(jobs.size())));

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex lock;
    auto work = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            auto& cell = outcome.cells[jobs[j].cell];
            const auto& data = prepared[jobs[j].cell / models];
            const std::size_t index = jobs[j].candidate;
            LearnerSpec spec = cell.entries[index].spec;
            // Tree bagging gets one thread when experiments already run in parallel.
            if (auto* forest = std::get_if<ForestSpec>(&spec.params); forest && config.parallel > 1) forest->threads = 1;

            ExperimentOptions opts;
            opts.experiment_id = cell.key.id() + "#" + std::to_string(index);
            opts.seed = candidate_seed(cell.cell_seed, index);
            opts.test_update = config.test_update;
            std::optional<ExperimentResult> result;
            std::string error;
            try {
                result = run_experiment(data.parts, data.transform, spec, cell.key.horizon, opts);
                if (!std::isfinite(result->metrics.r2) || !std::isfinite(result->metrics.rmse)) {
                    result.reset();
                    error = opts.experiment_id + ": non-finite predictions";
                }
            } catch (const std::exception& e) {
                error = e.what();
            }
            {
                std::lock_guard guard(lock);
                auto& entry = cell.entries[index];
                if (result) {
                    entry.metrics = result->metrics;
                    if (!cell.best || better_selection(result->metrics.r2, index,
                                                       cell.entries[*cell.best].metrics->r2, *cell.best)) {
                        cell.best = index;
                        cell.best_result = std::move(result);
                    }
                } else {
                    entry.error = error;
                }
            }
            const auto finished = ++done;
            if (options.progress) options.progress(finished, jobs.size());
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    return outcome;
}

} // namespace habcast
