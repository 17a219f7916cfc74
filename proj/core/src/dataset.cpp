#include "habcast/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "habcast/format.hpp"

namespace habcast {

namespace {

int parse_int(std::string_view text, std::string_view what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw std::invalid_argument("invalid " + std::string(what) + " '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string_view> split_line(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace

Date parse_date(std::string_view text) {
    text = trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw std::invalid_argument("invalid ISO-8601 date '" + std::string(text) + "'");
    }
    const int y = parse_int(text.substr(0, 4), "year");
    const int m = parse_int(text.substr(5, 2), "month");
    const int d = parse_int(text.substr(8, 2), "day");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        throw std::invalid_argument("invalid calendar date '" + std::string(text) + "'");
    }
    return Date{ymd};
}

std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

int year_of(Date date) { return static_cast<int>(std::chrono::year_month_day{date}.year()); }

unsigned month_of(Date date) { return static_cast<unsigned>(std::chrono::year_month_day{date}.month()); }

std::size_t RawSeries::column_index(std::string_view name) const {
    const auto it = std::find(column_names.begin(), column_names.end(), name);
    if (it == column_names.end()) {
        throw std::invalid_argument("station '" + station_id + "' has no column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - column_names.begin());
}

bool RawSeries::has_column(std::string_view name) const {
    return std::find(column_names.begin(), column_names.end(), name) != column_names.end();
}

void RawSeries::validate() const {
    if (column_names.size() != columns.size()) {
        throw std::invalid_argument("column name/value count mismatch");
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c].size() != dates.size()) {
            throw std::invalid_argument("column '" + column_names[c] + "' has " +
                                        std::to_string(columns[c].size()) + " values for " +
                                        std::to_string(dates.size()) + " dates");
        }
    }
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (dates[i] <= dates[i - 1]) {
            throw std::invalid_argument("dates must be strictly increasing (at " + format_date(dates[i]) + ")");
        }
    }
    if (!target_name.empty()) {
        (void)column_index(target_name);
    }
}

bool RawSeries::is_complete_daily() const {
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if ((dates[i] - dates[i - 1]).count() != 1) return false;
    }
    return std::all_of(columns.begin(), columns.end(), [](const auto& col) {
        return std::all_of(col.begin(), col.end(), [](const auto& v) { return v.has_value(); });
    });
}

RawSeries interpolate_daily(const RawSeries& series) {
    series.validate();
    if (series.dates.empty()) {
        throw std::invalid_argument("interpolate_daily: empty series");
    }
    const Date first = series.dates.front();
    const auto span_days = static_cast<std::size_t>((series.dates.back() - first).count()) + 1;

    RawSeries out;
    out.station_id = series.station_id;
    out.column_names = series.column_names;
    out.target_name = series.target_name;
    out.dates.reserve(span_days);
    for (std::size_t d = 0; d < span_days; ++d) {
        out.dates.push_back(first + std::chrono::days{static_cast<int>(d)});
    }

    const std::optional<std::size_t> target_col =
        series.target_name.empty() ? std::nullopt : std::optional{series.column_index(series.target_name)};

    out.columns.resize(series.columns.size());
    for (std::size_t c = 0; c < series.columns.size(); ++c) {
        std::vector<std::pair<std::size_t, double>> observed;
        for (std::size_t i = 0; i < series.dates.size(); ++i) {
            if (const auto& v = series.columns[c][i]; v.has_value()) {
                if (!std::isfinite(*v)) {
                    throw std::invalid_argument("column '" + series.column_names[c] + "' has a non-finite value at " +
                                                format_date(series.dates[i]));
                }
                if (target_col == c && *v < 0.0) {
                    throw std::invalid_argument("target column '" + series.target_name +
                                                "' has a negative value at " + format_date(series.dates[i]));
                }
                observed.emplace_back(static_cast<std::size_t>((series.dates[i] - first).count()), *v);
            }
        }
        const auto& name = series.column_names[c];
        if (observed.size() < 2) {
            throw std::invalid_argument("unusable column '" + name + "': fewer than two observations");
        }
        if (observed.front().first != 0) {
            throw std::invalid_argument("column '" + name + "' has a leading missing span; refusing to extrapolate");
        }
        if (observed.back().first != span_days - 1) {
            throw std::invalid_argument("column '" + name + "' has a trailing missing span; refusing to extrapolate");
        }

        auto& dst = out.columns[c];
        dst.resize(span_days);
        for (std::size_t k = 0; k + 1 < observed.size(); ++k) {
            const auto [d0, v0] = observed[k];
            const auto [d1, v1] = observed[k + 1];
            dst[d0] = v0;
            const double width = static_cast<double>(d1 - d0);
            for (std::size_t d = d0 + 1; d < d1; ++d) {
                const double t = static_cast<double>(d - d0) / width;
                dst[d] = v0 + t * (v1 - v0);
            }
        }
        dst[observed.back().first] = observed.back().second;
    }
    return out;
}

double month_feature(Date date) {
    return std::sin(2.0 * std::numbers::pi * static_cast<double>(month_of(date)) / 12.0);
}

std::string lagged_name(std::string_view column, int lag) {
    if (lag == 0) return std::string(column) + "[i]";
    return std::string(column) + "[i-" + std::to_string(lag) + "]";
}

SupervisedSet build_supervised(const RawSeries& series, int horizon, const FeatureSpec& spec) {
    if (horizon <= 0) {
        throw std::invalid_argument("build_supervised: horizon must be positive, got " + std::to_string(horizon));
    }
    if (series.dates.empty()) {
        throw std::invalid_argument("build_supervised: empty series");
    }
    series.validate();
    if (!series.is_complete_daily()) {
        throw std::invalid_argument("build_supervised: series must be gap-free daily data (run interpolate_daily)");
    }
    if (spec.lags.empty()) {
        throw std::invalid_argument("build_supervised: lag set is empty");
    }
    std::vector<int> lags = spec.lags;
    std::sort(lags.begin(), lags.end());
    lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
    if (lags.front() < 0) {
        throw std::invalid_argument("build_supervised: lags must be non-negative");
    }

    std::vector<std::size_t> cols;
    if (spec.columns.empty()) {
        for (std::size_t c = 0; c < series.column_names.size(); ++c) cols.push_back(c);
    } else {
        for (const auto& name : spec.columns) cols.push_back(series.column_index(name));
    }
    const std::size_t target_col = series.column_index(series.target_name);

    SupervisedSet out;
    out.target_name = series.target_name + "[i+" + std::to_string(horizon) + "]";
    for (auto c : cols) {
        for (int lag : lags) out.feature_names.push_back(lagged_name(series.column_names[c], lag));
    }
    if (spec.month) out.feature_names.emplace_back("month");

    const auto n = series.size();
    const auto max_lag = static_cast<std::size_t>(lags.back());
    const auto h = static_cast<std::size_t>(horizon);
    if (n <= max_lag + h) return out;

    out.rows.reserve(n - max_lag - h);
    for (std::size_t i = max_lag; i + h < n; ++i) {
        SupervisedRow row;
        row.anchor_date = series.dates[i];
        row.features.reserve(out.feature_names.size());
        for (auto c : cols) {
            for (int lag : lags) row.features.push_back(*series.columns[c][i - static_cast<std::size_t>(lag)]);
        }
        if (spec.month) row.features.push_back(month_feature(series.dates[i]));
        row.target = *series.columns[target_col][i + h];
        out.rows.push_back(std::move(row));
    }
    return out;
}

Matrix SupervisedSet::feature_matrix() const {
    Matrix m(rows.size(), feature_names.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].features.begin(), rows[i].features.end(), m.row(i).begin());
    }
    return m;
}

std::vector<double> SupervisedSet::targets() const {
    std::vector<double> y;
    y.reserve(rows.size());
    for (const auto& r : rows) y.push_back(r.target);
    return y;
}

void SplitPlan::validate() const {
    auto disjoint = [](const std::set<int>& a, const std::set<int>& b) {
        return std::none_of(a.begin(), a.end(), [&](int y) { return b.count(y) != 0; });
    };
    if (!disjoint(pretrain_years, train_years) || !disjoint(pretrain_years, test_years) ||
        !disjoint(train_years, test_years)) {
        throw std::invalid_argument("split plan: year sets overlap");
    }
    if (test_years.empty()) {
        throw std::invalid_argument("split plan: no test years");
    }
    auto precedes = [](const std::set<int>& a, const std::set<int>& b) {
        return a.empty() || b.empty() || *a.rbegin() < *b.begin();
    };
    if (!precedes(pretrain_years, train_years) || !precedes(train_years, test_years) ||
        !precedes(pretrain_years, test_years)) {
        throw std::invalid_argument("split plan: pretrain years must precede train years, which must precede test years");
    }
}

SplitParts split_by_years(const SupervisedSet& rows, const SplitPlan& plan) {
    plan.validate();
    SplitParts parts;
    for (auto* part : {&parts.pretrain, &parts.train, &parts.test}) {
        part->feature_names = rows.feature_names;
        part->target_name = rows.target_name;
    }
    for (const auto& row : rows.rows) {
        const int y = year_of(row.anchor_date);
        if (plan.pretrain_years.count(y)) {
            parts.pretrain.rows.push_back(row);
        } else if (plan.train_years.count(y)) {
            parts.train.rows.push_back(row);
        } else if (plan.test_years.count(y)) {
            parts.test.rows.push_back(row);
        }
    }
    if (parts.test.rows.empty()) {
        throw std::invalid_argument("split_by_years: test partition is empty");
    }
    return parts;
}

RawSeries read_series_csv(const std::filesystem::path& path, std::string station_id, std::string target_name) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "'");
    }
    RawSeries series;
    series.station_id = std::move(station_id);
    series.target_name = std::move(target_name);

    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("'" + path.string() + "' is empty");
    }
    auto header = split_line(trim(line), ',');
    if (header.empty() || trim(header[0]) != "date") {
        throw std::runtime_error("'" + path.string() + "': first column must be 'date'");
    }
    for (std::size_t c = 1; c < header.size(); ++c) series.column_names.emplace_back(trim(header[c]));
    series.columns.resize(series.column_names.size());

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto stripped = trim(line);
        if (stripped.empty()) continue;
        auto cells = split_line(stripped, ',');
        if (cells.size() != header.size()) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
        }
        series.dates.push_back(parse_date(cells[0]));
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const auto cell = trim(cells[c]);
            if (cell.empty()) {
                series.columns[c - 1].emplace_back();
                continue;
            }
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": invalid number '" +
                                         std::string(cell) + "'");
            }
            series.columns[c - 1].emplace_back(v);
        }
    }
    series.validate();
    return series;
}

void write_series_csv(const RawSeries& series, const std::filesystem::path& path) {
    series.validate();
    std::ostringstream out;
    out << "date";
    for (const auto& name : series.column_names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < series.dates.size(); ++i) {
        out << format_date(series.dates[i]);
        for (const auto& col : series.columns) {
            out << ',';
            if (col[i].has_value()) out << format_number(*col[i]);
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

StationConfig station_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    StationConfig cfg;
    cfg.station_id = j.at("id").get<std::string>();
    const std::filesystem::path csv = j.at("csv").get<std::string>();
    cfg.csv = csv.is_absolute() ? csv : base_dir / csv;
    cfg.target = j.at("target").get<std::string>();
    if (j.contains("features")) cfg.features.columns = j.at("features").get<std::vector<std::string>>();
    if (j.contains("lags")) cfg.features.lags = j.at("lags").get<std::vector<int>>();
    if (j.contains("month")) cfg.features.month = j.at("month").get<bool>();
    return cfg;
}

nlohmann::json to_json(const StationConfig& config) {
    return {{"id", config.station_id},
            {"csv", config.csv.string()},
            {"target", config.target},
            {"features", config.features.columns},
            {"lags", config.features.lags},
            {"month", config.features.month}};
}

} // namespace habcast
