#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "habcast/grid.hpp"
#include "habcast/metrics.hpp"
#include "habcast/ranking.hpp"
#include "support/fixtures.hpp"

using namespace habcast;

namespace {

const std::string kTable4 = std::string(HABCAST_TEST_DATA_DIR) + "/table4_ranks.csv";

double smooth(const std::vector<double>& x) { return std::sin(6.0 * x[0]) + x[1]; }

FeatureTransform identity_transform(const SplitParts& parts) {
    return fit_feature_transform(parts.pretrain.feature_matrix(), false);
}

LearnerSpec knn_bl(int k) { return {ModelFamily::KnnBl, KnnSpec{k}}; }
LearnerSpec knn_sl(int k) { return {ModelFamily::KnnSl, KnnStreamSpec{k}}; }

} // namespace

TEST_CASE("metric examples") {
    using V = std::vector<double>;
    CHECK(r2_score(V{0, 1, 2}, V{0, 1, 2}) == 1.0);
    CHECK(r2_score(V{0, 1, 2}, V{1, 1, 1}) == 0.0);
    CHECK(r2_score(V{0, 1, 2}, V{0, 0, 2}) == 0.5);
    CHECK(mae(V{0, 2}, V{1, 1}) == 1.0);
    CHECK(rmse(V{0, 2}, V{1, 1}) == 1.0);
    CHECK(mae(V{0, 4}, V{0, 0}) == 2.0);
    CHECK(rmse(V{0, 4}, V{0, 0}) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
    CHECK(mae(V{5, 7}, V{5, 7}) == 0.0);
    CHECK(rmse(V{5, 7}, V{5, 7}) == 0.0);
    CHECK(mae(V{0, 0, 0}, V{3, -6, 9}) == 3.0 * mae(V{0, 0, 0}, V{1, -2, 3}));

    CHECK_THROWS_AS(r2_score(V{3, 3, 3}, V{1, 2, 3}), UndefinedR2);
    CHECK_THROWS(r2_score(V{1}, V{1}));
    CHECK_THROWS(mae(V{}, V{}));
    CHECK_THROWS(rmse(V{}, V{}));
    CHECK_THROWS(mae(V{1, 2}, V{1}));
}

TEST_CASE("metric identities on random logs") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> len(2, 400);
    std::lognormal_distribution<double> cells(4.0, 1.5);
    std::normal_distribution<double> err(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = len(rng);
        std::vector<double> y;
        std::vector<double> p;
        for (int i = 0; i < n; ++i) {
            y.push_back(cells(rng));
            p.push_back(y.back() * (1.0 + 0.5 * err(rng)) + 10.0 * err(rng));
        }
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= n;
        double ssr = 0.0;
        double ssm = 0.0;
        double abs_sum = 0.0;
        for (int i = 0; i < n; ++i) {
            ssr += (y[i] - p[i]) * (y[i] - p[i]);
            ssm += (y[i] - mean) * (y[i] - mean);
            abs_sum += std::abs(y[i] - p[i]);
        }
        const double r2 = r2_score(y, p);
        const double a = mae(y, p);
        const double r = rmse(y, p);
        CHECK(r2 <= 1.0);
        CHECK(a >= 0.0);
        CHECK(r >= a);
        CHECK(std::abs(r2 - (1.0 - ssr / ssm)) <= 1e-10 * std::max(1.0, std::abs(r2)));
        CHECK(std::abs(a - abs_sum / n) <= 1e-10 * std::max(1.0, a));
        CHECK(std::abs(r - std::sqrt(ssr / n)) <= 1e-10 * std::max(1.0, r));
    }
}

TEST_CASE("prediction logs must be chronological") {
    PredictionLog log;
    log.records.push_back({parse_date("2019-01-02"), 1.0, 1.0, {}});
    log.records.push_back({parse_date("2019-01-01"), 2.0, 2.0, {}});
    CHECK_THROWS(log.validate());
    CHECK_THROWS(compute_metrics(log));
}

TEST_CASE("batch experiment with a mean predictor") {
    const auto parts = testing::make_parts(50, 150, 60, 2, smooth, 0.2, 3);
    const int n_fit = static_cast<int>(parts.pretrain.size() + parts.train.size());
    const auto res = run_batch_experiment(parts, identity_transform(parts), knn_bl(n_fit), 1, {"mean", 1});
    double mean = 0.0;
    for (const auto* s : {&parts.pretrain, &parts.train}) {
        for (const auto& r : s->rows) mean += r.target / n_fit;
    }
    double expect = 0.0;
    for (const auto& r : parts.test.rows) expect += std::abs(r.target - mean) / static_cast<double>(parts.test.size());
    CHECK(res.metrics.mae == doctest::Approx(expect).epsilon(1e-12));
    CHECK(res.log.records.size() == parts.test.size());
    CHECK(res.metrics.n == parts.test.size());
}

TEST_CASE("batch kNN is insensitive to training row order and reproducible") {
    auto parts = testing::make_parts(60, 300, 80, 3, smooth, 0.1, 4);
    const auto t = identity_transform(parts);
    const auto a = run_batch_experiment(parts, t, knn_bl(5), 2, {"a", 9});
    const auto b = run_batch_experiment(parts, t, knn_bl(5), 2, {"a", 9});
    std::mt19937_64 rng(5);
    std::shuffle(parts.train.rows.begin(), parts.train.rows.end(), rng);
    const auto c = run_batch_experiment(parts, t, knn_bl(5), 2, {"a", 9});
    for (std::size_t i = 0; i < a.log.records.size(); ++i) {
        CHECK(a.log.records[i].predicted == b.log.records[i].predicted);
        CHECK(a.log.records[i].predicted == c.log.records[i].predicted);
    }
}

TEST_CASE("stream labels arrive only after the horizon has elapsed") {
    const auto parts = testing::make_parts(40, 100, 30, 2, smooth, 0.1, 6);
    for (int h : {1, 3, 7}) {
        ExperimentOptions opts{"trace", 1, true, true};
        const auto res = run_stream_experiment(parts, identity_transform(parts), knn_sl(3), h, opts);
        std::map<std::size_t, std::size_t> predicted_at;
        for (std::size_t pos = 0; pos < res.trace.size(); ++pos) {
            const auto& e = res.trace[pos];
            if (e.kind == StreamEvent::Kind::Predict) {
                CHECK(predicted_at.count(e.row) == 0);
                predicted_at[e.row] = pos;
            } else {
                // Rows are consecutive days, so the label of row r needs row r + h predicted first.
                REQUIRE(predicted_at.count(e.row + h) == 1);
                CHECK(predicted_at[e.row + h] < pos);
                CHECK(predicted_at[e.row] < pos);
            }
        }
        CHECK(predicted_at.size() == 170);
    }
}

TEST_CASE("frozen stream learners keep their state through the test phase") {
    const auto parts = testing::make_parts(40, 200, 50, 2, smooth, 0.1, 7);
    const auto t = identity_transform(parts);
    for (const auto& spec : {knn_sl(5), LearnerSpec::defaults(ModelFamily::Htr), LearnerSpec::defaults(ModelFamily::Hatr)}) {
        const auto frozen = run_stream_experiment(parts, t, spec, 2, {"f", 1, false});
        REQUIRE(frozen.state_before_test);
        CHECK(*frozen.state_before_test == *frozen.state_after_test);
        const auto updating = run_stream_experiment(parts, t, spec, 2, {"u", 1, true});
        CHECK(*updating.state_before_test != *updating.state_after_test);
    }
}

TEST_CASE("windowed kNN approaches batch kNN on a stationary stream") {
    const auto parts = testing::make_parts(500, 3500, 1000, 2, smooth, 0.3, 8);
    const auto t = identity_transform(parts);
    const auto bl = run_batch_experiment(parts, t, knn_bl(5), 1, {"bl", 1});
    const auto sl = run_stream_experiment(parts, t, knn_sl(5), 1, {"sl", 1});
    CHECK(std::abs(sl.metrics.mae - bl.metrics.mae) <= 0.1 * bl.metrics.mae);
}

TEST_CASE("published grid sizes") {
    const std::map<ModelFamily, std::size_t> expect{
        {ModelFamily::KnnBl, 6}, {ModelFamily::KnnSl, 6}, {ModelFamily::Htr, 600}, {ModelFamily::Hatr, 600},
        {ModelFamily::Svr, 300}, {ModelFamily::Mlp, 55},  {ModelFamily::Rf, 18},   {ModelFamily::Dome, 140}};
    for (const auto& [family, n] : expect) {
        CHECK(enumerate_grid(family, GridPreset::Full).size() == n);
        const auto reduced = enumerate_grid(family, GridPreset::Reduced);
        CHECK(!reduced.empty());
        CHECK(reduced.size() <= n);
    }
}

TEST_CASE("grid search selection") {
    const auto parts = testing::make_parts(40, 160, 40, 2, smooth, 0.1, 10);
    const auto t = identity_transform(parts);

    const std::vector<LearnerSpec> one{knn_bl(3)};
    const auto single = grid_search(parts, t, one, 1, {"g", 1});
    REQUIRE(single.best);
    CHECK(*single.best == 0);

    // Identical specs tie on R^2; the first enumerated wins.
    const std::vector<LearnerSpec> twins{knn_bl(3), knn_bl(3)};
    const auto tied = grid_search(parts, t, twins, 1, {"g", 1});
    CHECK(*tied.best == 0);
    CHECK(better_selection(0.6, 1, 0.5, 0));
    CHECK(!better_selection(0.5, 1, 0.5, 0));
    CHECK(better_selection(0.5, 0, 0.5, 1));

    // A failing configuration is recorded without aborting the sweep.
    const std::vector<LearnerSpec> mixed{knn_bl(0), knn_bl(2)};
    const auto res = grid_search(parts, t, mixed, 1, {"g", 1});
    CHECK(!res.entries[0].error.empty());
    CHECK(*res.best == 1);
}

TEST_CASE("competition ranking") {
    CHECK(competition_ranks(std::vector<double>{0.9, 0.8, 0.8, 0.7}) == std::vector<int>{1, 2, 2, 4});
    CHECK(competition_ranks(std::vector<double>{2.0, 1.0, 3.0}, true) == std::vector<int>{2, 1, 3});
}

TEST_CASE("average ranks of the published table") {
    const auto published = testing::load_published_ranks(kTable4);
    REQUIRE(published.size() == 16);
    const auto table = build_ranking({1, 2, 3, 4, 5, 6, 7}, testing::scores_from_ranks(published));
    REQUIRE(table.rows.size() == 16);
    for (std::size_t i = 0; i < 16; ++i) {
        const auto& row = table.rows[i];
        const auto it = std::find_if(published.begin(), published.end(),
                                     [&](const auto& p) { return p.combo == row.combo; });
        REQUIRE(it != published.end());
        CHECK(row.ranks == it->ranks);
        CHECK(format_fixed(row.average_rank, 2) == it->average);
        CHECK(row.overall_rank == it->overall);
    }
    CHECK(table.rows[0].combo == Combo{"DoME", "No PCA"});
    CHECK(format_fixed(table.rows[0].average_rank, 2, ',') == "2,57");
    CHECK(format_fixed(table.rows[1].average_rank, 2) == "3.29");
}

TEST_CASE("ranking is independent of input order") {
    const auto published = testing::load_published_ranks(kTable4);
    auto scores = testing::scores_from_ranks(published);
    const auto base = ranking_csv(build_ranking({1, 2, 3, 4, 5, 6, 7}, scores));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10; ++i) {
        std::shuffle(scores.begin(), scores.end(), rng);
        CHECK(ranking_csv(build_ranking({1, 2, 3, 4, 5, 6, 7}, scores)) == base);
    }
}

TEST_CASE("ties share a rank and the next rank skips") {
    std::vector<ComboScores> c{{{"A", "PCA"}, {0.9}}, {{"B", "PCA"}, {0.8}}, {{"C", "PCA"}, {0.8}}, {{"D", "PCA"}, {0.1}}};
    const auto t = build_ranking({1}, c);
    std::map<std::string, int> r;
    for (const auto& row : t.rows) r[row.combo.model] = row.ranks[0];
    CHECK(r["B"] == 2);
    CHECK(r["C"] == 2);
    CHECK(r["D"] == 4);
}

TEST_CASE("a missing cell names the combination and horizon") {
    auto scores = testing::scores_from_ranks(testing::load_published_ranks(kTable4));
    scores[4].by_horizon[2] = std::nullopt;
    CHECK_THROWS_WITH_AS(build_ranking({1, 2, 3, 4, 5, 6, 7}, scores), doctest::Contains("RF/No PCA at horizon 3"),
                         std::invalid_argument);
}
