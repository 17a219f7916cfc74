// Hand-built datasets and the published ranking table, shared by the test suites.
#pragma once

#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "habcast/dataset.hpp"
#include "habcast/format.hpp"
#include "habcast/ranking.hpp"

namespace habcast::testing {

/// Rows on consecutive days from 2000-01-01 with x uniform on [0, 1]^dim and
/// y = f(x) + N(0, noise); the first n_pre rows are pretrain, the next n_train train.
inline SplitParts make_parts(std::size_t n_pre, std::size_t n_train, std::size_t n_test, std::size_t dim,
                             const std::function<double(const std::vector<double>&)>& f, double noise,
                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, noise);
    SplitParts parts;
    for (auto* s : {&parts.pretrain, &parts.train, &parts.test}) {
        s->target_name = "y";
        for (std::size_t j = 0; j < dim; ++j) s->feature_names.push_back("x" + std::to_string(j));
    }
    const Date start = parse_date("2000-01-01");
    const std::size_t total = n_pre + n_train + n_test;
    for (std::size_t i = 0; i < total; ++i) {
        SupervisedRow r;
        r.anchor_date = start + std::chrono::days{static_cast<int>(i)};
        for (std::size_t j = 0; j < dim; ++j) r.features.push_back(u(rng));
        r.target = f(r.features) + (noise > 0.0 ? g(rng) : 0.0);
        auto& dest = i < n_pre ? parts.pretrain : i < n_pre + n_train ? parts.train : parts.test;
        dest.rows.push_back(std::move(r));
    }
    return parts;
}

struct PublishedRank {
    int overall = 0;
    Combo combo;
    std::vector<int> ranks;
    std::string average;
};

/// Rows of the published per-horizon ranking table (overall, model, extraction, h1..h7, average).
inline std::vector<PublishedRank> load_published_ranks(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    std::getline(in, line);
    std::vector<PublishedRank> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        PublishedRank r;
        r.overall = std::stoi(f[0]);
        r.combo = {f[1], f[2]};
        for (std::size_t i = 3; i + 1 < f.size(); ++i) r.ranks.push_back(std::stoi(f[i]));
        r.average = f.back();
        out.push_back(std::move(r));
    }
    return out;
}

/// Station-averaged scores that reproduce the given ranks: lower rank, higher score.
inline std::vector<ComboScores> scores_from_ranks(const std::vector<PublishedRank>& table) {
    std::vector<ComboScores> out;
    for (const auto& r : table) {
        ComboScores c{r.combo, {}};
        for (int rank : r.ranks) c.by_horizon.push_back(1.0 - rank / 100.0);
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace habcast::testing
