#include "habcast/ranking.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "habcast/format.hpp"

namespace habcast {

std::vector<int> competition_ranks(std::span<const double> values, bool ascending) {
    std::vector<int> ranks(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        int better = 0;
        for (double v : values) better += ascending ? (v < values[i]) : (v > values[i]);
        ranks[i] = 1 + better;
    }
    return ranks;
}

RankingTable build_ranking(const std::vector<int>& horizons, const std::vector<ComboScores>& combos) {
    if (horizons.empty()) throw std::invalid_argument("ranking: no horizons");
    if (combos.empty()) throw std::invalid_argument("ranking: no combinations");
    for (const auto& c : combos) {
        if (c.by_horizon.size() != horizons.size()) {
            throw std::invalid_argument("ranking: " + c.combo.model + "/" + c.combo.extraction +
                                        " has the wrong number of horizons");
        }
        for (std::size_t h = 0; h < horizons.size(); ++h) {
            if (!c.by_horizon[h]) {
                throw std::invalid_argument("ranking: missing cell " + c.combo.model + "/" + c.combo.extraction +
                                            " at horizon " + std::to_string(horizons[h]));
            }
        }
    }

    RankingTable table;
    table.horizons = horizons;
    table.rows.resize(combos.size());
    for (std::size_t i = 0; i < combos.size(); ++i) {
        table.rows[i].combo = combos[i].combo;
        for (const auto& s : combos[i].by_horizon) table.rows[i].scores.push_back(*s);
    }
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        std::vector<double> column;
        for (const auto& row : table.rows) column.push_back(row.scores[h]);
        const auto ranks = competition_ranks(column);
        for (std::size_t i = 0; i < table.rows.size(); ++i) table.rows[i].ranks.push_back(ranks[i]);
    }
    // Rank sums compare exactly; averages share the same denominator.
    std::vector<double> sums;
    for (auto& row : table.rows) {
        const int sum = std::accumulate(row.ranks.begin(), row.ranks.end(), 0);
        sums.push_back(static_cast<double>(sum));
        row.average_rank = static_cast<double>(sum) / static_cast<double>(horizons.size());
    }
    const auto overall = competition_ranks(sums, true);
    for (std::size_t i = 0; i < table.rows.size(); ++i) table.rows[i].overall_rank = overall[i];

    std::sort(table.rows.begin(), table.rows.end(), [](const RankingRow& a, const RankingRow& b) {
        if (a.overall_rank != b.overall_rank) return a.overall_rank < b.overall_rank;
        if (a.ranks != b.ranks) return a.ranks < b.ranks;
        return a.combo < b.combo;
    });
    return table;
}

std::string ranking_csv(const RankingTable& table, char decimal_separator) {
    // A comma decimal separator needs a different field delimiter.
    const char sep = decimal_separator == ',' ? ';' : ',';
    std::string out = "rank";
    out += sep;
    out += "model";
    out += sep;
    out += "feature_extraction";
    for (int h : table.horizons) out += sep + ("h" + std::to_string(h));
    out += sep;
    out += "average\n";
    for (const auto& row : table.rows) {
        out += std::to_string(row.overall_rank) + sep + row.combo.model + sep + row.combo.extraction;
        for (int r : row.ranks) out += sep + std::to_string(r);
        out += sep + format_fixed(row.average_rank, 2, decimal_separator) + "\n";
    }
    return out;
}

} // namespace habcast
