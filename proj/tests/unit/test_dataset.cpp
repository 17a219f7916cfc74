#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "habcast/dataset.hpp"
#include "habcast/format.hpp"

using namespace habcast;

namespace {

Date day(int offset) { return parse_date("2013-01-01") + std::chrono::days{offset}; }

RawSeries one_column(std::vector<std::optional<double>> values, std::vector<int> offsets = {}) {
    RawSeries s;
    s.station_id = "S";
    s.target_name = "y";
    s.column_names = {"y"};
    if (offsets.empty()) {
        for (std::size_t i = 0; i < values.size(); ++i) offsets.push_back(static_cast<int>(i));
    }
    for (int o : offsets) s.dates.push_back(day(o));
    s.columns = {std::move(values)};
    return s;
}

// Two columns holding the day index, so any feature value names the day it came from.
RawSeries indexed_series(int n) {
    RawSeries s;
    s.station_id = "S";
    s.target_name = "y";
    s.column_names = {"a", "y"};
    s.columns.resize(2);
    for (int i = 0; i < n; ++i) {
        s.dates.push_back(day(i));
        s.columns[0].push_back(static_cast<double>(i));
        s.columns[1].push_back(static_cast<double>(i) + 1000.0);
    }
    return s;
}

} // namespace

TEST_CASE("dates parse and format as ISO-8601") {
    CHECK(format_date(parse_date("2019-12-31")) == "2019-12-31");
    CHECK(year_of(parse_date("2016-02-29")) == 2016);
    CHECK(month_of(parse_date("2016-02-29")) == 2u);
    CHECK_THROWS(parse_date("2019-13-01"));
    CHECK_THROWS(parse_date("not a date"));
}

TEST_CASE("interpolate_daily fills gaps on the straight line between observations") {
    // Observations on day 0 and day 7 only.
    const auto s = one_column({10.0, 24.0}, {0, 7});
    const auto d = interpolate_daily(s);
    REQUIRE(d.size() == 8);
    CHECK(*d.columns[0][3] == doctest::Approx(10.0 + 3.0 * (24.0 - 10.0) / 7.0).epsilon(1e-15));
    CHECK(*d.columns[0][3] == doctest::Approx(16.0));
    CHECK(*d.columns[0][0] == 10.0);
    CHECK(*d.columns[0][7] == 24.0);
    CHECK(d.is_complete_daily());
}

TEST_CASE("interpolate_daily leaves complete data untouched and is idempotent") {
    const auto s = one_column({1.0, 2.5, 3.0, 0.0});
    const auto d = interpolate_daily(s);
    CHECK(d.columns == s.columns);
    CHECK(d.dates == s.dates);

    const auto gappy = one_column({5.0, std::nullopt, 5.0, std::nullopt, std::nullopt, 11.0});
    const auto once = interpolate_daily(gappy);
    CHECK(*once.columns[0][1] == 5.0);
    CHECK(*once.columns[0][3] == doctest::Approx(7.0));
    const auto twice = interpolate_daily(once);
    CHECK(twice.columns == once.columns);
}

TEST_CASE("interpolate_daily refuses to extrapolate or use starved columns") {
    CHECK_THROWS_WITH_AS(interpolate_daily(one_column({std::nullopt, 1.0, 2.0})), doctest::Contains("leading"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(interpolate_daily(one_column({1.0, 2.0, std::nullopt})), doctest::Contains("trailing"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(interpolate_daily(one_column({1.0, std::nullopt, std::nullopt})),
                         doctest::Contains("unusable"), std::invalid_argument);
    CHECK_THROWS(interpolate_daily(one_column({1.0, -2.0, 3.0})));
}

TEST_CASE("month encoding is sin(2 pi m / 12)") {
    CHECK(std::abs(month_feature(parse_date("2015-06-10"))) < 1e-12);
    CHECK(std::abs(month_feature(parse_date("2015-12-10"))) < 1e-12);
    CHECK(month_feature(parse_date("2015-03-01")) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(month_feature(parse_date("2015-09-01")) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("build_supervised row counts") {
    const auto s = indexed_series(10);
    FeatureSpec f;
    f.columns = {"a"};
    f.month = false;
    f.lags = {0};
    CHECK(build_supervised(s, 3, f).size() == 7);

    f.lags = {0, 4};
    const auto rows = build_supervised(s, 3, f);
    REQUIRE(rows.size() == 3);
    // Valid anchors are days 4, 5 and 6.
    CHECK(rows.rows.front().anchor_date == day(4));
    CHECK(rows.rows.back().anchor_date == day(6));

    for (int n : {12, 30, 61}) {
        for (int h : {1, 3, 7}) {
            f.lags = {0, 1, 2, 5};
            CHECK(build_supervised(indexed_series(n), h, f).size() == static_cast<std::size_t>(n - h - 5));
        }
    }
}

TEST_CASE("build_supervised target is the feature shifted by the horizon") {
    auto s = indexed_series(20);
    s.target_name = "a";
    FeatureSpec f;
    f.columns = {"a"};
    f.lags = {0};
    f.month = false;
    const auto rows = build_supervised(s, 1, f);
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) CHECK(rows.rows[k].target == rows.rows[k + 1].features[0]);
}

TEST_CASE("build_supervised feature layout: columns by ascending lag, month last") {
    const auto s = indexed_series(15);
    FeatureSpec f;
    f.lags = {2, 0};
    const auto rows = build_supervised(s, 2, f);
    REQUIRE(rows.feature_names.size() == 5);
    CHECK(rows.feature_names[0] == "a[i]");
    CHECK(rows.feature_names[1] == "a[i-2]");
    CHECK(rows.feature_names[2] == "y[i]");
    CHECK(rows.feature_names[3] == "y[i-2]");
    CHECK(rows.feature_names[4] == "month");
    for (const auto& r : rows.rows) CHECK(r.features.size() == 5);
}

TEST_CASE("no feature reads a value dated after its anchor") {
    const auto s = indexed_series(40);
    FeatureSpec f;
    f.columns = {"a"};
    f.lags = {0, 1, 3, 6};
    f.month = false;
    for (int h : {1, 4, 7}) {
        const auto rows = build_supervised(s, h, f);
        for (const auto& r : rows.rows) {
            const double anchor = static_cast<double>((r.anchor_date - day(0)).count());
            for (double v : r.features) CHECK(v <= anchor);
            // The target is the only future value.
            CHECK(r.target == doctest::Approx(1000.0 + anchor + h));
        }
    }
}

TEST_CASE("build_supervised errors") {
    FeatureSpec f;
    CHECK_THROWS_AS(build_supervised(indexed_series(10), 0, f), std::invalid_argument);
    CHECK_THROWS_AS(build_supervised(indexed_series(10), -2, f), std::invalid_argument);
    RawSeries empty;
    empty.target_name = "y";
    empty.column_names = {"y"};
    empty.columns.resize(1);
    CHECK_THROWS_AS(build_supervised(empty, 1, f), std::invalid_argument);
    CHECK_THROWS(build_supervised(one_column({1.0, std::nullopt, 3.0}), 1, f));
}

TEST_CASE("split_by_years assigns rows by anchor year") {
    RawSeries s;
    s.target_name = "y";
    s.column_names = {"y"};
    s.columns.resize(1);
    const Date start = parse_date("2013-01-01");
    const Date stop = parse_date("2020-01-01");
    for (Date d = start; d < stop; d += std::chrono::days{1}) {
        s.dates.push_back(d);
        s.columns[0].push_back(1.0 + static_cast<double>((d - start).count() % 17));
    }
    FeatureSpec f;
    f.lags = {0, 1};
    const auto rows = build_supervised(s, 3, f);
    SplitPlan plan{{2013}, {2014, 2015, 2016, 2017, 2018}, {2019}};
    const auto parts = split_by_years(rows, plan);
    for (const auto& r : parts.test.rows) CHECK(year_of(r.anchor_date) == 2019);
    for (const auto& r : parts.pretrain.rows) CHECK(year_of(r.anchor_date) == 2013);
    CHECK(parts.pretrain.size() + parts.train.size() + parts.test.size() == rows.size());
    for (std::size_t i = 1; i < parts.train.size(); ++i) {
        CHECK(parts.train.rows[i - 1].anchor_date < parts.train.rows[i].anchor_date);
    }

    CHECK_THROWS(split_by_years(rows, SplitPlan{{2013}, {2013, 2014}, {2019}}));
    CHECK_THROWS(split_by_years(rows, SplitPlan{{2015}, {2014}, {2019}}));
    CHECK_THROWS(split_by_years(rows, SplitPlan{{2013, 2014, 2015, 2016, 2017, 2018, 2019}, {}, {}}));
    CHECK_THROWS(split_by_years(rows, SplitPlan{{2013}, {2014}, {2021}}));
}

TEST_CASE("series CSV round trip keeps exact values and missing cells") {
    auto s = one_column({1.0 / 3.0, std::nullopt, 1e-300, 12345.678});
    s.column_names = {"cells"};
    s.target_name = "cells";
    const auto path = std::filesystem::temp_directory_path() / "habcast_dataset_roundtrip.csv";
    write_series_csv(s, path);
    CHECK(read_text_file(path).rfind("date,cells\n", 0) == 0);
    const auto back = read_series_csv(path, "S", "cells");
    CHECK(back.dates == s.dates);
    CHECK(back.columns == s.columns);
    std::filesystem::remove(path);
}
