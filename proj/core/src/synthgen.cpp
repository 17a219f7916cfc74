#include "habcast/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "habcast/batch/forest.hpp"
#include "habcast/format.hpp"

namespace habcast {

namespace {

struct Pulse {
    int start;
    double magnitude;
};

double seasonal_cos(int t, int peak, int shift) {
    return std::cos(2.0 * std::numbers::pi * static_cast<double>(t - peak - shift) / 365.0);
}

std::string drift_name(DriftKind k) {
    switch (k) {
        case DriftKind::None: return "none";
        case DriftKind::SeasonShift: return "season_shift";
        case DriftKind::RelationFlip: return "relation_flip";
    }
    return "none";
}

DriftKind parse_drift(const std::string& s) {
    if (s == "none") return DriftKind::None;
    if (s == "season_shift") return DriftKind::SeasonShift;
    if (s == "relation_flip") return DriftKind::RelationFlip;
    throw std::invalid_argument("unknown drift kind '" + s + "'");
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

SynthOutput generate(const SynthSpec& spec) {
    if (spec.years <= 0) throw std::invalid_argument("synth: the span must cover at least one year");
    if (spec.station_features < 0 || spec.section_features < 0) {
        throw std::invalid_argument("synth: feature counts must be non-negative");
    }
    const Date first{std::chrono::year{spec.start_year} / std::chrono::January / 1};
    const Date end{std::chrono::year{spec.start_year + spec.years} / std::chrono::January / 1};
    const int n = static_cast<int>((end - first).count());

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    auto shift_at = [&](int t) {
        if (spec.drift.kind != DriftKind::SeasonShift) return 0;
        return year_of(first + std::chrono::days{t}) >= spec.drift.start_year ? spec.drift.shift_days : 0;
    };
    auto coupling_at = [&](int t) {
        if (spec.drift.kind != DriftKind::RelationFlip || !spec.drift.flip_date) return 1.0;
        return first + std::chrono::days{t} >= *spec.drift.flip_date ? -1.0 : 1.0;
    };

    // Latent drivers: an upwelling-like AR(1) index and a temperature-like signal.
    const double phi = spec.upwelling_persistence;
    const double innovation = 0.6 * std::sqrt(std::max(0.0, 1.0 - phi * phi));
    std::vector<double> upw(n);
    std::vector<double> temp(n);
    double upw_dev = 0.0;
    double temp_dev = 0.0;
    for (int t = 0; t < n; ++t) {
        upw_dev = phi * upw_dev + innovation * gauss(rng);
        temp_dev = 0.9 * temp_dev + 0.2 * gauss(rng);
        upw[t] = 0.8 * seasonal_cos(t, spec.seasonal_peak_day, shift_at(t)) + upw_dev;
        temp[t] = 15.0 + 3.0 * seasonal_cos(t, spec.seasonal_peak_day + 30, shift_at(t)) + temp_dev;
    }

    std::vector<Pulse> pulses;
    if (spec.blooms) {
        int run = 0;
        for (int t = 0; t < n; ++t) {
            run = upw[t] > spec.upwelling_threshold ? run + 1 : 0;
            if (run == 3 && unif(rng) < spec.bloom_probability) {
                const double m = std::exp(spec.bloom_log_mean + spec.bloom_log_sd * gauss(rng));
                pulses.push_back({t + spec.bloom_delay, m});
            }
        }
    }

    SynthOutput out;
    out.truth.resize(n);
    for (int t = 0; t < n; ++t) {
        const double season = 0.5 + 0.5 * seasonal_cos(t, spec.seasonal_peak_day, shift_at(t));
        double level = spec.baseline + spec.seasonal_amplitude * season;
        for (const auto& p : pulses) {
            const int k = t - p.start;
            if (k < 0 || k > spec.bloom_duration) continue;
            // Raised cosine: zero at both ends of the support.
            level += p.magnitude * 0.5 *
                     (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / spec.bloom_duration));
        }
        out.truth[t] = std::max(0.0, level);
    }

    auto& s = out.series;
    s.station_id = spec.station_id;
    s.target_name = spec.target_name;
    for (int t = 0; t < n; ++t) s.dates.push_back(first + std::chrono::days{t});

    const double fn = spec.feature_noise;
    auto add_column = [&](std::string name, auto&& value) {
        std::vector<std::optional<double>> col(n);
        for (int t = 0; t < n; ++t) col[t] = value(t);
        s.column_names.push_back(std::move(name));
        s.columns.push_back(std::move(col));
    };
    auto lagged = [&](const std::vector<double>& v, int t, int lag) { return v[std::max(0, t - lag)]; };

    for (int j = 0; j < spec.station_features; ++j) {
        switch (j) {
            case 0:
                add_column("chl", [&](int t) {
                    return 0.5 + 0.02 * coupling_at(t) * out.truth[t] + fn * 2.0 * gauss(rng);
                });
                break;
            case 1: add_column("temp", [&](int t) { return temp[t] + fn * gauss(rng); }); break;
            case 2: add_column("upw", [&](int t) { return coupling_at(t) * upw[t] + fn * gauss(rng); }); break;
            default:
                add_column("st" + std::to_string(j), [&, j](int t) {
                    return coupling_at(t) * lagged(upw, t, j - 2) + 0.1 * (temp[t] - 15.0) + fn * gauss(rng);
                });
                break;
        }
    }
    for (int k = 0; k < spec.section_features; ++k) {
        add_column("sec" + std::to_string(k + 1) + "_v", [&, k](int t) {
            return 0.5 * coupling_at(t) * lagged(upw, t, k + 1) + fn * gauss(rng);
        });
    }
    add_column(spec.target_name, [&](int t) -> double {
        return std::max(0.0, out.truth[t] + spec.target_noise * gauss(rng));
    });
    if (spec.weekly_target) {
        auto& target = s.columns.back();
        for (int t = 0; t < n; ++t) {
            if (t % 7 != 0 && t != n - 1) target[t].reset();
        }
    }
    return out;
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
    SynthSpec s;
    read(j, "seed", s.seed);
    read(j, "station_id", s.station_id);
    read(j, "target_name", s.target_name);
    read(j, "start_year", s.start_year);
    read(j, "years", s.years);
    read(j, "station_features", s.station_features);
    read(j, "section_features", s.section_features);
    read(j, "baseline", s.baseline);
    read(j, "seasonal_amplitude", s.seasonal_amplitude);
    read(j, "seasonal_peak_day", s.seasonal_peak_day);
    read(j, "blooms", s.blooms);
    read(j, "bloom_probability", s.bloom_probability);
    read(j, "bloom_log_mean", s.bloom_log_mean);
    read(j, "bloom_log_sd", s.bloom_log_sd);
    read(j, "bloom_duration", s.bloom_duration);
    read(j, "bloom_delay", s.bloom_delay);
    read(j, "upwelling_threshold", s.upwelling_threshold);
    read(j, "upwelling_persistence", s.upwelling_persistence);
    read(j, "target_noise", s.target_noise);
    read(j, "feature_noise", s.feature_noise);
    read(j, "weekly_target", s.weekly_target);
    if (j.contains("drift")) {
        const auto& d = j.at("drift");
        s.drift.kind = parse_drift(d.value("kind", std::string("none")));
        read(d, "shift_days", s.drift.shift_days);
        read(d, "start_year", s.drift.start_year);
        if (d.contains("flip_date")) s.drift.flip_date = parse_date(d.at("flip_date").get<std::string>());
    }
    if (s.bloom_duration < 1) throw std::invalid_argument("synth: bloom duration must be positive");
    return s;
}

nlohmann::json to_json(const SynthSpec& s) {
    nlohmann::json drift{{"kind", drift_name(s.drift.kind)}, {"shift_days", s.drift.shift_days}, {"start_year", s.drift.start_year}};
    if (s.drift.flip_date) drift["flip_date"] = format_date(*s.drift.flip_date);
    return {{"seed", s.seed},
            {"station_id", s.station_id},
            {"target_name", s.target_name},
            {"start_year", s.start_year},
            {"years", s.years},
            {"station_features", s.station_features},
            {"section_features", s.section_features},
            {"baseline", s.baseline},
            {"seasonal_amplitude", s.seasonal_amplitude},
            {"seasonal_peak_day", s.seasonal_peak_day},
            {"blooms", s.blooms},
            {"bloom_probability", s.bloom_probability},
            {"bloom_log_mean", s.bloom_log_mean},
            {"bloom_log_sd", s.bloom_log_sd},
            {"bloom_duration", s.bloom_duration},
            {"bloom_delay", s.bloom_delay},
            {"upwelling_threshold", s.upwelling_threshold},
            {"upwelling_persistence", s.upwelling_persistence},
            {"target_noise", s.target_noise},
            {"feature_noise", s.feature_noise},
            {"weekly_target", s.weekly_target},
            {"drift", drift}};
}

std::vector<SynthSpec> synth_specs_from_json(const nlohmann::json& j, std::optional<std::uint64_t> seed) {
    if (!j.is_object()) throw std::invalid_argument("synth spec must be a JSON object");
    if (!j.contains("stations")) {
        auto s = synth_spec_from_json(j);
        if (seed) s.seed = *seed;
        return {s};
    }
    const auto& stations = j.at("stations");
    if (!stations.is_array() || stations.empty()) throw std::invalid_argument("\"stations\" must be a non-empty array");
    nlohmann::json shared = j;
    shared.erase("stations");
    const std::uint64_t root = seed ? *seed : shared.value("seed", std::uint64_t{1});
    std::vector<SynthSpec> out;
    for (std::size_t i = 0; i < stations.size(); ++i) {
        nlohmann::json merged = shared;
        merged["seed"] = mix_seed(root, i);
        if (stations[i].is_string()) {
            merged["station_id"] = stations[i];
        } else {
            merged.update(stations[i]);
        }
        out.push_back(synth_spec_from_json(merged));
        for (std::size_t k = 0; k + 1 < out.size(); ++k) {
            if (out[k].station_id == out.back().station_id) {
                throw std::invalid_argument("duplicate station id '" + out.back().station_id + "'");
            }
        }
    }
    return out;
}

void write_synth_output(const SynthSpec& spec, const SynthOutput& out, const std::filesystem::path& dir) {
    write_series_csv(out.series, dir / (spec.station_id + ".csv"));
    std::string truth = "date,truth\n";
    for (std::size_t t = 0; t < out.truth.size(); ++t) {
        truth += format_date(out.series.dates[t]) + "," + format_number(out.truth[t]) + "\n";
    }
    write_text_file(dir / (spec.station_id + "_truth.csv"), truth);
    write_text_file(dir / (spec.station_id + "_spec.json"), to_json(spec).dump(2) + "\n");
}

} // namespace habcast
