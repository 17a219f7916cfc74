// habcast command-line tool: synth, run, grid and rank subcommands.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "habcast/format.hpp"
#include "habcast/pipeline.hpp"
#include "habcast/report.hpp"
#include "habcast/synthgen.hpp"

namespace fs = std::filesystem;
using namespace habcast;

namespace {

constexpr int kOk = 0;
constexpr int kAllFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json load_json(const fs::path& path) {
    if (!fs::exists(path)) throw UsageError("config file not found: " + path.string());
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
}

struct Common {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> parallel;
    bool test_update = false;
    bool progress = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "experiment config (JSON)")->required();
    cmd->add_option("--out", c.out, "output directory")->required();
    cmd->add_option("--seed", c.seed, "root seed (overrides the config)");
    cmd->add_option("--parallel", c.parallel, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_flag("--test-update", c.test_update, "stream learners keep learning during the test year");
    cmd->add_flag("--progress", c.progress, "report progress on stderr");
}

int execute_and_write(RunConfig config, const Common& c) {
    if (c.seed) config.seed = *c.seed;
    if (c.parallel) config.parallel = *c.parallel;
    if (c.test_update) config.test_update = true;

    ExecutionOptions opts;
    if (c.progress) {
        opts.progress = [](std::size_t done, std::size_t total) {
            if (done == total || done % std::max<std::size_t>(1, total / 20) == 0) {
                std::fprintf(stderr, "\r%zu/%zu configurations", done, total);
                if (done == total) std::fputc('\n', stderr);
            }
        };
    }
    RunOutcome outcome;
    try {
        outcome = execute(config, opts);
    } catch (const std::exception& e) {
        // Dataset problems are configuration problems: nothing has run yet.
        throw UsageError(e.what());
    }
    const auto ranking = write_run_outputs(outcome, c.out);
    const auto ok = outcome.succeeded();
    std::cerr << ok << "/" << outcome.cells.size() << " cells succeeded; outputs in " << c.out << "\n";
    if (!ranking && ok > 0) std::cerr << "ranking skipped (incomplete grid), see summary.md\n";
    return ok > 0 ? kOk : kAllFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forecasting experiments for harmful algal bloom cell counts"};
    app.require_subcommand(1);

    std::string synth_config;
    std::string synth_out;
    std::optional<std::uint64_t> synth_seed;
    auto* synth = app.add_subcommand("synth", "generate synthetic station data");
    synth->add_option("--config", synth_config, "generator spec (JSON)")->required();
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", synth_seed, "root seed (overrides the spec)");

    Common run_opts;
    auto* run = app.add_subcommand("run", "run the configured models on every cell");
    add_common(run, run_opts);

    Common grid_opts;
    std::string preset;
    auto* grid = app.add_subcommand("grid", "sweep hyperparameter grids and keep the best configuration per cell");
    add_common(grid, grid_opts);
    grid->add_option("--preset", preset, "grid preset: full or reduced (overrides the config)");

    std::string rank_dir;
    std::string rank_out;
    std::string decimal = ".";
    auto* rank = app.add_subcommand("rank", "rank (model, feature extraction) combinations from results.csv");
    rank->add_option("dir", rank_dir, "directory holding results.csv")->required();
    rank->add_option("--out", rank_out, "ranking CSV path (default <dir>/ranking.csv)");
    rank->add_option("--decimal", decimal, "decimal separator")->check(CLI::IsMember({".", ","}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*synth) {
            const auto specs = synth_specs_from_json(load_json(synth_config), synth_seed);
            std::vector<SynthOutput> outputs;
            for (const auto& s : specs) outputs.push_back(generate(s));
            for (std::size_t i = 0; i < specs.size(); ++i) write_synth_output(specs[i], outputs[i], synth_out);
            std::cerr << "wrote " << specs.size() << " station(s) to " << synth_out << "\n";
            return kOk;
        }
        if (*run) {
            const fs::path path = run_opts.config;
            RunConfig config;
            try {
                config = run_config_from_json(load_json(path), path.parent_path());
            } catch (const std::exception& e) {
                throw UsageError(e.what());
            }
            return execute_and_write(std::move(config), run_opts);
        }
        if (*grid) {
            const fs::path path = grid_opts.config;
            RunConfig config;
            try {
                std::optional<GridPreset> p;
                if (!preset.empty()) p = parse_preset(preset);
                config = grid_config_from_json(load_json(path), path.parent_path(), p);
            } catch (const std::exception& e) {
                throw UsageError(e.what());
            }
            return execute_and_write(std::move(config), grid_opts);
        }
        if (*rank) {
            const fs::path results = fs::path(rank_dir) / "results.csv";
            if (!fs::exists(results)) throw UsageError("no results.csv in " + rank_dir);
            RankingTable table;
            try {
                table = rank_results(read_results_csv(results));
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            const fs::path out = rank_out.empty() ? fs::path(rank_dir) / "ranking.csv" : fs::path(rank_out);
            write_text_file(out, ranking_csv(table, decimal[0]));
            std::cerr << "ranked " << table.rows.size() << " combinations into " << out.string() << "\n";
            return kOk;
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kAllFailed;
    }
    return kUsage;
}
