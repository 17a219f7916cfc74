#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "habcast/metrics.hpp"
#include "habcast/pipeline.hpp"
#include "habcast/ranking.hpp"

namespace habcast {

/// Best configuration of one (station, horizon, model, extraction) cell.
struct ResultRow {
    std::string station;
    int horizon = 1;
    std::string model;
    std::string extraction;
    double r2 = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
};

/// Raised by rank_results when the grid has holes; what() lists every missing cell.
class IncompleteGrid : public std::invalid_argument {
  public:
    IncompleteGrid(const std::string& message, std::vector<std::string> missing)
        : std::invalid_argument(message), missing_(std::move(missing)) {}
    [[nodiscard]] const std::vector<std::string>& missing() const { return missing_; }

  private:
    std::vector<std::string> missing_;
};

std::vector<ResultRow> result_rows(const RunOutcome& outcome);

std::string results_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_results_csv(const std::string& text);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

/// Averages R^2 over stations for every (model, extraction, horizon) and ranks
/// the combinations. Every combo needs a value for every (station, horizon)
/// seen anywhere in `rows`.
RankingTable rank_results(const std::vector<ResultRow>& rows);

std::string predictions_csv(const PredictionLog& log);
nlohmann::json cell_metrics_json(const CellOutcome& cell, std::uint64_t root_seed);
std::string grid_csv(const RunOutcome& outcome);
std::string failures_csv(const RunOutcome& outcome);
/// Station x horizon best R^2 with the winning combination.
std::string heatmap_csv(const std::vector<ResultRow>& rows);
/// One line per (model, extraction, horizon, station): the per-station metric samples.
std::string boxplot_csv(const std::vector<ResultRow>& rows);
std::string summary_markdown(const RunOutcome& outcome, const std::vector<ResultRow>& rows,
                             const std::optional<RankingTable>& ranking, const std::string& ranking_note);

/// Writes every output file under `out`. Returns the ranking when the grid was complete.
std::optional<RankingTable> write_run_outputs(const RunOutcome& outcome, const std::filesystem::path& out);

/// Quotes a CSV field when it contains a delimiter, quote or newline.
std::string csv_field(const std::string& text);

} // namespace habcast
