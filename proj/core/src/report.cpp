#include "habcast/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "habcast/format.hpp"

namespace habcast {

namespace {

constexpr const char* kResultsHeader = "station,horizon,model,feature_extraction,r2,mae,rmse,n";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                out.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.emplace_back();
        } else if (ch != '\r') {
            out.back() += ch;
        }
    }
    return out;
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("results line " + std::to_string(line) + ": invalid number '" + s + "'");
    }
    return v;
}

std::string extraction_slug(const std::string& extraction) { return extraction == kPcaLabel ? "pca" : "nopca"; }

struct Stats {
    double mean = 0.0;
    double sd = 0.0;
};

// Sample standard deviation across stations; zero with a single station.
Stats stats_of(const std::vector<double>& v) {
    Stats s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

std::string fixed(double v, int d = 3) { return format_fixed(v, d); }

} // namespace

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
    std::string out = "\"";
    for (char ch : text) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::vector<ResultRow> result_rows(const RunOutcome& outcome) {
    std::vector<ResultRow> rows;
    for (const auto& cell : outcome.cells) {
        if (!cell.succeeded()) continue;
        const auto& m = cell.best_result->metrics;
        rows.push_back({cell.key.station, cell.key.horizon, cell.key.model, cell.key.extraction, m.r2, m.mae, m.rmse, m.n});
    }
    return rows;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
    std::string out = std::string(kResultsHeader) + "\n";
    for (const auto& r : rows) {
        out += csv_field(r.station) + "," + std::to_string(r.horizon) + "," + csv_field(r.model) + "," +
               csv_field(r.extraction) + "," + format_number(r.r2) + "," + format_number(r.mae) + "," +
               format_number(r.rmse) + "," + std::to_string(r.n) + "\n";
    }
    return out;
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("results file is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kResultsHeader) throw std::invalid_argument("unexpected results header '" + line + "'");
    std::vector<ResultRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8) {
            throw std::invalid_argument("results line " + std::to_string(line_no) + ": expected 8 fields");
        }
        ResultRow r;
        r.station = f[0];
        r.horizon = static_cast<int>(parse_double(f[1], line_no));
        r.model = f[2];
        r.extraction = f[3];
        r.r2 = parse_double(f[4], line_no);
        r.mae = parse_double(f[5], line_no);
        r.rmse = parse_double(f[6], line_no);
        r.n = static_cast<std::size_t>(parse_double(f[7], line_no));
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
    return parse_results_csv(read_text_file(path));
}

RankingTable rank_results(const std::vector<ResultRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("ranking: no results");
    std::set<std::string> stations;
    std::set<int> horizon_set;
    std::set<Combo> combos;
    std::map<std::tuple<std::string, std::string, std::string, int>, double> r2;
    for (const auto& r : rows) {
        stations.insert(r.station);
        horizon_set.insert(r.horizon);
        combos.insert({r.model, r.extraction});
        if (!r2.emplace(std::tuple{r.model, r.extraction, r.station, r.horizon}, r.r2).second) {
            throw std::invalid_argument("ranking: duplicate result for " + r.model + "/" + r.extraction + " at " +
                                        r.station + " h" + std::to_string(r.horizon));
        }
    }
    const std::vector<int> horizons(horizon_set.begin(), horizon_set.end());
    std::vector<std::string> missing;
    std::vector<ComboScores> scores;
    for (const auto& c : combos) {
        ComboScores s{c, {}};
        for (int h : horizons) {
            double sum = 0.0;
            bool complete = true;
            for (const auto& st : stations) {
                auto it = r2.find({c.model, c.extraction, st, h});
                if (it == r2.end()) {
                    complete = false;
                    missing.push_back(c.model + "/" + c.extraction + " at " + st + " h" + std::to_string(h));
                } else {
                    sum += it->second;
                }
            }
            if (complete) {
                s.by_horizon.push_back(sum / static_cast<double>(stations.size()));
            } else {
                s.by_horizon.push_back(std::nullopt);
            }
        }
        scores.push_back(std::move(s));
    }
    if (!missing.empty()) {
        std::string msg = "ranking: incomplete results grid, missing " + std::to_string(missing.size()) + " cell(s):";
        for (const auto& m : missing) msg += "\n  " + m;
        throw IncompleteGrid(msg, missing);
    }
    return build_ranking(horizons, scores);
}

std::string predictions_csv(const PredictionLog& log) {
    std::string out = "date,observed,predicted,cold_start,guarded_division\n";
    for (const auto& r : log.records) {
        out += format_date(r.date) + "," + format_number(r.observed) + "," + format_number(r.predicted) + "," +
               (r.flags.cold_start ? "1" : "0") + "," + (r.flags.guarded_division ? "1" : "0") + "\n";
    }
    return out;
}

nlohmann::json cell_metrics_json(const CellOutcome& cell, std::uint64_t root_seed) {
    nlohmann::json j;
    j["experiment_id"] = cell.key.id();
    j["station"] = cell.key.station;
    j["horizon"] = cell.key.horizon;
    j["model"] = cell.key.model;
    j["feature_extraction"] = cell.key.extraction;
    j["family"] = std::string(family_name(cell.family));
    j["paradigm"] = paradigm_of(cell.family) == Paradigm::Batch ? "batch" : "stream";
    j["root_seed"] = root_seed;
    j["cell_seed"] = cell.cell_seed;
    j["candidates"] = cell.entries.size();
    j["input_features"] = cell.input_features;
    j["model_features"] = cell.model_features;
    j["selection"] = "max test R2, earliest candidate on ties";
    if (!cell.succeeded()) {
        j["status"] = "failed";
        return j;
    }
    const auto& res = *cell.best_result;
    j["status"] = "ok";
    j["selected_index"] = *cell.best;
    j["candidate_seed"] = candidate_seed(cell.cell_seed, *cell.best);
    j["params"] = to_json(cell.entries[*cell.best].spec);
    j["metrics"] = {{"r2", res.metrics.r2}, {"mae", res.metrics.mae}, {"rmse", res.metrics.rmse}, {"n", res.metrics.n}};
    j["cold_starts"] = res.cold_starts;
    j["guarded_divisions"] = res.guarded_divisions;
    if (!res.model_text.empty()) j["model_text"] = res.model_text;
    if (res.state_before_test && res.state_after_test) {
        j["state_unchanged_during_test"] = *res.state_before_test == *res.state_after_test;
    }
    std::size_t failed = 0;
    for (const auto& e : cell.entries) failed += e.metrics ? 0 : 1;
    j["failed_candidates"] = failed;
    return j;
}

std::string grid_csv(const RunOutcome& outcome) {
    std::string out = "station,horizon,model,feature_extraction,config_index,params,r2,mae,rmse,n,selected,error\n";
    for (const auto& cell : outcome.cells) {
        for (std::size_t i = 0; i < cell.entries.size(); ++i) {
            const auto& e = cell.entries[i];
            out += csv_field(cell.key.station) + "," + std::to_string(cell.key.horizon) + "," +
                   csv_field(cell.key.model) + "," + csv_field(cell.key.extraction) + "," + std::to_string(i) + "," +
                   csv_field(describe(e.spec)) + ",";
            if (e.metrics) {
                out += format_number(e.metrics->r2) + "," + format_number(e.metrics->mae) + "," +
                       format_number(e.metrics->rmse) + "," + std::to_string(e.metrics->n);
            } else {
                out += ",,,";
            }
            out += std::string(",") + (cell.best == i ? "1" : "0") + "," + csv_field(e.error) + "\n";
        }
    }
    return out;
}

std::string failures_csv(const RunOutcome& outcome) {
    std::string out = "station,horizon,model,feature_extraction,config_index,error\n";
    for (const auto& cell : outcome.cells) {
        for (std::size_t i = 0; i < cell.entries.size(); ++i) {
            const auto& e = cell.entries[i];
            if (e.metrics) continue;
            out += csv_field(cell.key.station) + "," + std::to_string(cell.key.horizon) + "," +
                   csv_field(cell.key.model) + "," + csv_field(cell.key.extraction) + "," + std::to_string(i) + "," +
                   csv_field(e.error) + "\n";
        }
    }
    return out;
}

std::string heatmap_csv(const std::vector<ResultRow>& rows) {
    std::map<std::pair<std::string, int>, const ResultRow*> best;
    for (const auto& r : rows) {
        auto& slot = best[{r.station, r.horizon}];
        const auto key = [](const ResultRow* x) { return std::tie(x->model, x->extraction); };
        if (!slot || r.r2 > slot->r2 || (r.r2 == slot->r2 && key(&r) < key(slot))) slot = &r;
    }
    std::string out = "station,horizon,best_r2,model,feature_extraction\n";
    for (const auto& [k, r] : best) {
        out += csv_field(k.first) + "," + std::to_string(k.second) + "," + format_number(r->r2) + "," +
               csv_field(r->model) + "," + csv_field(r->extraction) + "\n";
    }
    return out;
}

std::string boxplot_csv(const std::vector<ResultRow>& rows) {
    auto sorted = rows;
    std::sort(sorted.begin(), sorted.end(), [](const ResultRow& a, const ResultRow& b) {
        return std::tie(a.model, a.extraction, a.horizon, a.station) <
               std::tie(b.model, b.extraction, b.horizon, b.station);
    });
    std::string out = "model,feature_extraction,horizon,station,r2,mae,rmse\n";
    for (const auto& r : sorted) {
        out += csv_field(r.model) + "," + csv_field(r.extraction) + "," + std::to_string(r.horizon) + "," +
               csv_field(r.station) + "," + format_number(r.r2) + "," + format_number(r.mae) + "," +
               format_number(r.rmse) + "\n";
    }
    return out;
}

std::string summary_markdown(const RunOutcome& outcome, const std::vector<ResultRow>& rows,
                             const std::optional<RankingTable>& ranking, const std::string& ranking_note) {
    const auto& cfg = outcome.config;
    std::ostringstream md;
    md << "# habcast run summary\n\n";
    md << "> Model selection: each cell reports the configuration with the highest R^2 on the test year. "
          "This compares model families under one protocol; it is not an unbiased estimate of deployment "
          "accuracy.\n\n";
    md << "- root seed: " << cfg.seed << "\n";
    md << "- stations: " << cfg.stations.size() << "\n";
    md << "- horizons:";
    for (int h : cfg.horizons) md << " " << h;
    md << "\n- grid preset: " << (cfg.preset ? std::string(preset_name(*cfg.preset)) : std::string("none (fixed models)"))
       << "\n";
    md << "- stream learners update during test: " << (cfg.test_update ? "yes" : "no") << "\n";
    std::size_t failed = 0;
    std::size_t jobs = 0;
    for (const auto& c : outcome.cells) {
        jobs += c.entries.size();
        for (const auto& e : c.entries) failed += e.metrics ? 0 : 1;
    }
    md << "- cells: " << outcome.cells.size() << " (" << outcome.succeeded() << " succeeded)\n";
    md << "- configurations run: " << jobs << " (" << failed << " failed, see failures.csv)\n\n";

    // Mean and across-station sample sd per combo and horizon.
    std::map<std::tuple<std::string, std::string, int>, std::vector<const ResultRow*>> groups;
    for (const auto& r : rows) groups[{r.model, r.extraction, r.horizon}].push_back(&r);
    md << "## Test metrics\n\nMean over stations, with the across-station sample standard deviation after +-.\n\n";
    md << "| model | feature extraction | h | R^2 | MAE | RMSE | stations |\n|---|---|---|---|---|---|---|\n";
    for (const auto& [k, group] : groups) {
        std::vector<double> r2, mae, rmse;
        for (const auto* r : group) {
            r2.push_back(r->r2);
            mae.push_back(r->mae);
            rmse.push_back(r->rmse);
        }
        const auto a = stats_of(r2), b = stats_of(mae), c = stats_of(rmse);
        md << "| " << std::get<0>(k) << " | " << std::get<1>(k) << " | " << std::get<2>(k) << " | " << fixed(a.mean)
           << " +- " << fixed(a.sd) << " | " << fixed(b.mean, 2) << " +- " << fixed(b.sd, 2) << " | "
           << fixed(c.mean, 2) << " +- " << fixed(c.sd, 2) << " | " << group.size() << " |\n";
    }

    md << "\n## Ranking\n\n";
    if (ranking) {
        md << "| rank | model | feature extraction |";
        for (int h : ranking->horizons) md << " h" << h << " |";
        md << " average |\n|---|---|---|";
        for (std::size_t i = 0; i < ranking->horizons.size(); ++i) md << "---|";
        md << "---|\n";
        for (const auto& row : ranking->rows) {
            md << "| " << row.overall_rank << " | " << row.combo.model << " | " << row.combo.extraction << " |";
            for (int r : row.ranks) md << " " << r << " |";
            md << " " << format_fixed(row.average_rank, 2, cfg.decimal_separator) << " |\n";
        }
    } else {
        md << ranking_note << "\n";
    }

    bool any_equation = false;
    for (const auto& c : outcome.cells) {
        if (!c.succeeded() || c.best_result->model_text.empty()) continue;
        if (!any_equation) md << "\n## Fitted equations\n\n";
        any_equation = true;
        md << "- " << c.key.station << ", h=" << c.key.horizon << ", " << c.key.model << " / " << c.key.extraction
           << " (R^2 " << fixed(c.best_result->metrics.r2) << "):\n\n  `" << c.best_result->model_text << "`\n";
    }
    return md.str();
}

std::optional<RankingTable> write_run_outputs(const RunOutcome& outcome, const std::filesystem::path& out) {
    for (const auto& cell : outcome.cells) {
        const auto dir = out / "cells" / cell.key.station / ("h" + std::to_string(cell.key.horizon)) /
                         (cell.key.model + "_" + extraction_slug(cell.key.extraction));
        if (cell.succeeded()) write_text_file(dir / "predictions.csv", predictions_csv(cell.best_result->log));
        write_text_file(dir / "metrics.json", cell_metrics_json(cell, outcome.config.seed).dump(2) + "\n");
    }
    const auto rows = result_rows(outcome);
    write_text_file(out / "config.json", to_json(outcome.config).dump(2) + "\n");
    write_text_file(out / "grid.csv", grid_csv(outcome));
    write_text_file(out / "results.csv", results_csv(rows));
    write_text_file(out / "failures.csv", failures_csv(outcome));
    write_text_file(out / "heatmap.csv", heatmap_csv(rows));
    write_text_file(out / "boxplot.csv", boxplot_csv(rows));

    std::optional<RankingTable> ranking;
    std::string note;
    try {
        ranking = rank_results(rows);
        write_text_file(out / "ranking.csv", ranking_csv(*ranking, outcome.config.decimal_separator));
    } catch (const std::invalid_argument& e) {
        note = std::string("No ranking: ") + e.what();
        std::filesystem::remove(out / "ranking.csv");
    }
    write_text_file(out / "summary.md", summary_markdown(outcome, rows, ranking, note));
    return ranking;
}

} // namespace habcast
