#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include <nlohmann/json.hpp>

#include "habcast/experiment.hpp"
#include "habcast/format.hpp"
#include "habcast/pipeline.hpp"
#include "habcast/synthgen.hpp"

using namespace habcast;

namespace {

SynthSpec quiet_spec() {
    SynthSpec s;
    s.blooms = false;
    s.target_noise = 0.0;
    s.feature_noise = 0.0;
    return s;
}

std::vector<double> column(const RawSeries& s, const std::string& name) {
    std::vector<double> out;
    for (const auto& v : s.columns[s.column_index(name)]) out.push_back(v.value_or(std::nan("")));
    return out;
}

} // namespace

TEST_CASE("noise-free target is the clipped seasonal sinusoid") {
    auto spec = quiet_spec();
    spec.baseline = -40.0;
    spec.seasonal_amplitude = 120.0;
    const auto out = generate(spec);
    const auto y = column(out.series, "cells");
    REQUIRE(y.size() == out.truth.size());
    bool clipped = false;
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double wave = std::cos(2.0 * std::numbers::pi * (static_cast<double>(t) - spec.seasonal_peak_day) / 365.0);
        const double expect = std::max(0.0, -40.0 + 120.0 * (0.5 + 0.5 * wave));
        CHECK(y[t] == doctest::Approx(expect).epsilon(1e-12));
        CHECK(out.truth[t] == y[t]);
        clipped = clipped || expect == 0.0;
    }
    CHECK(clipped);
}

TEST_CASE("noise-free seasonal target is learnable one day ahead") {
    const auto raw = generate(quiet_spec()).series;
    // The drivers stay stochastic without noise, so the model sees the target's own lags.
    FeatureSpec f;
    f.columns = {"cells"};
    const auto rows = build_supervised(raw, 1, f);
    const auto parts = split_by_years(rows, resolve_split(SplitConfig{}, rows));
    const auto t = fit_feature_transform(parts.pretrain.feature_matrix(), false);
    const auto res = run_batch_experiment(parts, t, {ModelFamily::KnnBl, KnnSpec{2}}, 1, {"learnable", 1});
    CHECK(res.metrics.r2 >= 0.99);
}

TEST_CASE("seasonal period is exactly 365 days") {
    const auto out = generate(quiet_spec());
    for (std::size_t t = 0; t + 365 < out.truth.size(); ++t) {
        CHECK(std::abs(out.truth[t] - out.truth[t + 365]) <= 1e-9);
    }
}

TEST_CASE("generation is deterministic and seed dependent") {
    SynthSpec spec;
    spec.seed = 42;
    const auto a = generate(spec);
    const auto b = generate(spec);
    CHECK(a.series.columns == b.series.columns);
    CHECK(a.truth == b.truth);
    spec.seed = 43;
    CHECK(generate(spec).series.columns != a.series.columns);

    const auto dir = std::filesystem::temp_directory_path() / "habcast_synth_det";
    std::filesystem::remove_all(dir);
    spec.seed = 42;
    write_synth_output(spec, a, dir / "one");
    write_synth_output(spec, generate(spec), dir / "two");
    for (const char* f : {"S1.csv", "S1_truth.csv", "S1_spec.json"}) {
        CHECK(read_text_file(dir / "one" / f) == read_text_file(dir / "two" / f));
    }
    CHECK(read_text_file(dir / "one" / "S1.csv").rfind("date,", 0) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("targets are non-negative and features finite") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthSpec spec;
        spec.seed = seed;
        spec.target_noise = 80.0;
        spec.baseline = 0.0;
        const auto out = generate(spec);
        for (const auto& col : out.series.columns) {
            for (const auto& v : col) CHECK(std::isfinite(*v));
        }
        for (double v : column(out.series, "cells")) CHECK(v >= 0.0);
        for (double v : out.truth) CHECK(v >= 0.0);
    }
}

TEST_CASE("bloom pulses have finite support") {
    SynthSpec spec;
    spec.baseline = 0.0;
    spec.seasonal_amplitude = 0.0;
    spec.target_noise = 0.0;
    spec.bloom_probability = 1.0;
    const auto out = generate(spec);
    std::size_t run = 0;
    std::size_t longest = 0;
    std::size_t positive = 0;
    for (double v : out.truth) {
        run = v > 0.0 ? run + 1 : 0;
        positive += v > 0.0;
        longest = std::max(longest, run);
    }
    CHECK(positive > 0);
    CHECK(positive < out.truth.size());
    // A lone pulse is positive on duration - 1 days; overlaps chain a few together at most.
    CHECK(longest >= static_cast<std::size_t>(spec.bloom_duration - 1));
    CHECK(longest < 10 * static_cast<std::size_t>(spec.bloom_duration));
}

TEST_CASE("weekly target interpolates back to a daily series") {
    auto spec = quiet_spec();
    spec.weekly_target = true;
    const auto weekly = generate(spec).series;
    CHECK(!weekly.is_complete_daily());
    const auto daily = interpolate_daily(weekly);
    CHECK(daily.is_complete_daily());
    const auto y = column(daily, "cells");
    const auto truth = generate(quiet_spec()).truth;
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (t % 7 == 0 || t + 1 == y.size()) {
            CHECK(y[t] == doctest::Approx(truth[t]).epsilon(1e-12));
        } else {
            const std::size_t lo = t - t % 7;
            const std::size_t hi = std::min(lo + 7, y.size() - 1);
            const double w = static_cast<double>(t - lo) / static_cast<double>(hi - lo);
            CHECK(y[t] == doctest::Approx(truth[lo] + w * (truth[hi] - truth[lo])).epsilon(1e-12));
        }
    }
}

TEST_CASE("relation flip negates the coupled driver from the flip date") {
    auto base = quiet_spec();
    auto flipped = base;
    flipped.drift.kind = DriftKind::RelationFlip;
    flipped.drift.flip_date = parse_date("2016-07-01");
    const auto a = generate(base).series;
    const auto b = generate(flipped).series;
    const auto ua = column(a, "upw");
    const auto ub = column(b, "upw");
    for (std::size_t t = 0; t < a.size(); ++t) {
        if (a.dates[t] < *flipped.drift.flip_date) {
            CHECK(ub[t] == ua[t]);
        } else {
            CHECK(ub[t] == -ua[t]);
        }
    }
}

TEST_CASE("season shift moves the cycle from its start year") {
    auto base = quiet_spec();
    auto shifted = base;
    shifted.drift.kind = DriftKind::SeasonShift;
    shifted.drift.shift_days = 20;
    shifted.drift.start_year = 2016;
    const auto a = generate(base);
    const auto b = generate(shifted);
    for (std::size_t t = 0; t < a.truth.size(); ++t) {
        if (year_of(a.series.dates[t]) < 2016) {
            CHECK(b.truth[t] == a.truth[t]);
        } else {
            CHECK(b.truth[t] == doctest::Approx(a.truth[t - 20]).epsilon(1e-12));
        }
    }
}

TEST_CASE("spec validation and JSON") {
    SynthSpec bad;
    bad.years = 0;
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);

    SynthSpec s;
    s.seed = 99;
    s.drift.kind = DriftKind::RelationFlip;
    s.drift.flip_date = parse_date("2017-03-04");
    CHECK(to_json(synth_spec_from_json(to_json(s))) == to_json(s));

    const auto many = synth_specs_from_json(nlohmann::json::parse(
        R"({"seed": 7, "years": 3, "stations": ["A", {"id": "B", "baseline": 5}]})"));
    REQUIRE(many.size() == 2);
    CHECK(many[0].station_id == "A");
    CHECK(many[1].baseline == 5.0);
    CHECK(many[0].years == 3);
    CHECK(many[0].seed != many[1].seed);
    const auto reseeded = synth_specs_from_json(nlohmann::json::parse(R"({"seed": 7, "stations": ["A"]})"), 8);
    CHECK(reseeded[0].seed != many[0].seed);
    CHECK_THROWS(synth_specs_from_json(nlohmann::json::parse(R"({"stations": ["A", "A"]})")));
}
