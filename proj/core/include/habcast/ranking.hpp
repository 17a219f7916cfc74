#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace habcast {

/// A (model, feature extraction) combination, e.g. ("DoME", "No PCA").
struct Combo {
    std::string model;
    std::string extraction;

    friend bool operator==(const Combo&, const Combo&) = default;
    friend auto operator<=>(const Combo&, const Combo&) = default;
};

/// Station-averaged score of one combo at each horizon (nullopt = missing cell).
struct ComboScores {
    Combo combo;
    std::vector<std::optional<double>> by_horizon;
};

struct RankingRow {
    Combo combo;
    std::vector<double> scores;
    std::vector<int> ranks;
    double average_rank = 0.0;
    int overall_rank = 0;
};

struct RankingTable {
    std::vector<int> horizons;
    std::vector<RankingRow> rows; ///< sorted by overall rank
};

/// Competition ranking: 1 + number of strictly better values. Higher is better
/// unless `ascending`.
std::vector<int> competition_ranks(std::span<const double> values, bool ascending = false);

/// Throws std::invalid_argument naming the first missing (combo, horizon) cell.
RankingTable build_ranking(const std::vector<int>& horizons, const std::vector<ComboScores>& combos);

/// CSV columns: rank, model, feature extraction, one column per horizon, average (2 decimals).
std::string ranking_csv(const RankingTable& table, char decimal_separator = '.');

} // namespace habcast
