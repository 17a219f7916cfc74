#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "habcast/matrix.hpp"

namespace habcast {

using Date = std::chrono::sys_days;

/// Parses an ISO-8601 calendar date (YYYY-MM-DD).
Date parse_date(std::string_view text);
std::string format_date(Date date);
int year_of(Date date);
unsigned month_of(Date date);

/// Raw daily (or sub-daily-sampled) station data. Missing values are empty optionals.
struct RawSeries {
    std::string station_id;
    std::vector<Date> dates;
    std::vector<std::string> column_names;
    std::vector<std::vector<std::optional<double>>> columns;
    std::string target_name;

    [[nodiscard]] std::size_t size() const { return dates.size(); }
    [[nodiscard]] std::size_t column_index(std::string_view name) const;
    [[nodiscard]] bool has_column(std::string_view name) const;

    /// Checks date ordering, column shapes and presence of the target column.
    void validate() const;
    /// True when dates are consecutive days and no value is missing.
    [[nodiscard]] bool is_complete_daily() const;
};

/// One supervised example: lagged features observed up to the anchor date and
/// the target observed `horizon` days later.
struct SupervisedRow {
    Date anchor_date;
    std::vector<double> features;
    double target = 0.0;
};

struct SupervisedSet {
    std::vector<std::string> feature_names;
    std::string target_name;
    std::vector<SupervisedRow> rows;

    [[nodiscard]] std::size_t size() const { return rows.size(); }
    [[nodiscard]] std::size_t dimension() const { return feature_names.size(); }
    [[nodiscard]] Matrix feature_matrix() const;
    [[nodiscard]] std::vector<double> targets() const;
};

/// Which columns feed the model and at which lags.
struct FeatureSpec {
    std::vector<std::string> columns; ///< empty means every column, in file order
    std::vector<int> lags{0, 1, 2, 3, 4, 5, 6};
    bool month = true;
};

struct SplitPlan {
    std::set<int> pretrain_years;
    std::set<int> train_years;
    std::set<int> test_years;

    /// Throws std::invalid_argument unless the sets are disjoint and ordered pretrain < train < test.
    void validate() const;
};

struct SplitParts {
    SupervisedSet pretrain;
    SupervisedSet train;
    SupervisedSet test;
};

/// Fills every calendar day between the first and last date and linearly
/// interpolates missing values. Observed values are kept untouched.
RawSeries interpolate_daily(const RawSeries& series);

/// sin(2*pi*m/12) for month number m in 1..12.
double month_feature(Date date);

/// Lagged feature rows with the target shifted `horizon` days ahead. Feature
/// order is column-major over ascending lags with the month encoding last.
SupervisedSet build_supervised(const RawSeries& series, int horizon, const FeatureSpec& spec);

/// Partitions rows by anchor year. Rows whose year is in no set are dropped.
SplitParts split_by_years(const SupervisedSet& rows, const SplitPlan& plan);

/// Feature label for a column at a lag, e.g. "Dacum[i-4]".
std::string lagged_name(std::string_view column, int lag);

// CSV: first column `date`, remaining numeric columns; empty cells are missing.
RawSeries read_series_csv(const std::filesystem::path& path, std::string station_id,
                          std::string target_name);
void write_series_csv(const RawSeries& series, const std::filesystem::path& path);

/// Declarative wiring of one station: where its data lives and how it is featurized.
struct StationConfig {
    std::string station_id;
    std::filesystem::path csv;
    std::string target;
    FeatureSpec features;
};

StationConfig station_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json to_json(const StationConfig& config);

} // namespace habcast
