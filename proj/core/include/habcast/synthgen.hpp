#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "habcast/dataset.hpp"

namespace habcast {

enum class DriftKind { None, SeasonShift, RelationFlip };

struct DriftSpec {
    DriftKind kind = DriftKind::None;
    int shift_days = 0;             ///< season shift: phase offset applied from start_year on
    int start_year = 0;             ///< season shift
    std::optional<Date> flip_date;  ///< relation flip: feature/driver coupling changes sign from here
};

struct SynthSpec {
    std::uint64_t seed = 1;
    std::string station_id = "S1";
    std::string target_name = "cells";
    int start_year = 2013;
    int years = 7;
    int station_features = 3; ///< own-station physical columns
    int section_features = 2; ///< section-like columns
    // Target: baseline + seasonal sinusoid + bloom pulses, clipped at zero.
    double baseline = 50.0;
    double seasonal_amplitude = 150.0;
    int seasonal_peak_day = 200; ///< day of the 365-day cycle with maximum seasonal level
    bool blooms = true;
    double bloom_probability = 0.6; ///< chance that an upwelling run triggers a pulse
    double bloom_log_mean = 6.0;    ///< log-normal magnitude parameters
    double bloom_log_sd = 0.5;
    int bloom_duration = 24; ///< days of finite pulse support
    int bloom_delay = 3;     ///< days from trigger to pulse onset
    double upwelling_threshold = 1.0;
    double upwelling_persistence = 0.85; ///< AR(1) coefficient of the latent driver
    double target_noise = 10.0;
    double feature_noise = 0.1;
    DriftSpec drift;
    bool weekly_target = false; ///< keep only every 7th target value (plus the last day)
};

struct SynthOutput {
    RawSeries series;
    std::vector<double> truth; ///< pre-noise target for each date
};

SynthOutput generate(const SynthSpec& spec);

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& spec);

/// Accepts one spec object, or shared fields plus a "stations" array whose
/// entries are ids or objects overriding the shared fields. Stations without
/// their own seed get mix_seed(root seed, position). `seed` replaces the root seed.
std::vector<SynthSpec> synth_specs_from_json(const nlohmann::json& j, std::optional<std::uint64_t> seed = std::nullopt);

/// Writes <dir>/<station>.csv, <dir>/<station>_truth.csv and <dir>/<station>_spec.json.
void write_synth_output(const SynthSpec& spec, const SynthOutput& out, const std::filesystem::path& dir);

} // namespace habcast
