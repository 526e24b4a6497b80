// ============================================================================
// FILE: topomap_main.cpp
//
// BRIEF: Command-line front end. Subcommands: map, mutate, select-k,
// export-graph, eval-pair. Exit codes: 0 success, 2 validation error,
// 3 every candidate failed, 4 some mutants failed.
// ============================================================================

#include <topomap/pipeline.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<long> jobs;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "run configuration JSON")->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--jobs", args.jobs, "worker thread cap");
    cmd->add_option("--out", args.out, "override the output directory");
}

topomap::RunConfig load(const CommonArgs& args) {
    topomap::ConfigOverrides ov;
    ov.seed = args.seed;
    if (args.jobs) {
        if (*args.jobs < 1) throw topomap::ValidationError("jobs must be >= 1");
        ov.jobs = args.jobs;
    }
    if (args.out) ov.out = *args.out;
    return topomap::parse_run_config(args.config, ov);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"input-space map construction and mutation analysis"};
    app.require_subcommand(1);

    CommonArgs map_args, mutate_args, selectk_args, graph_args;
    long selectk_candidate = 0;
    std::string graph_format = "both";
    std::string truth_csv, pred_csv;

    CLI::App* cmd_map = app.add_subcommand("map", "evaluate candidates and persist the winner");
    add_common(cmd_map, map_args);

    CLI::App* cmd_mutate =
        app.add_subcommand("mutate", "run mutation analysis against the persisted map");
    add_common(cmd_mutate, mutate_args);

    CLI::App* cmd_selectk = app.add_subcommand("select-k", "run cluster-count selection alone");
    add_common(cmd_selectk, selectk_args);
    cmd_selectk->add_option("--candidate", selectk_candidate, "candidate index (default 0)");

    CLI::App* cmd_graph = app.add_subcommand("export-graph", "rebuild GEXF/DOT from artifacts");
    add_common(cmd_graph, graph_args);
    cmd_graph->add_option("--format", graph_format, "gexf, dot, or both");

    CLI::App* cmd_eval =
        app.add_subcommand("eval-pair", "weighted pairwise accuracies of two label files");
    cmd_eval->add_option("truth", truth_csv, "ground-truth label CSV")->required();
    cmd_eval->add_option("pred", pred_csv, "prediction label CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (cmd_map->parsed()) {
            topomap::RunConfig cfg = load(map_args);
            topomap::MapResult res = topomap::cmd_map(cfg);
            if (res.all_failed) {
                std::cerr << "error: every candidate failed; see "
                          << (cfg.out / "map" / "candidates").string() << "\n";
                return 3;
            }
            const auto& win = res.selection.outcomes[res.selection.best_index];
            std::cout << "winner " << res.selection.best_index << " " << win.config_id << "\n";
            std::cout << "min_pair " << win.report.min_pair.a << " " << win.report.min_pair.b
                      << " " << topomap::format_double(win.report.min_pair.value) << "\n";
            std::cout << "artifacts " << cfg.out.string() << "\n";
            return 0;
        }
        if (cmd_mutate->parsed()) {
            topomap::RunConfig cfg = load(mutate_args);
            topomap::MutateResult res = topomap::cmd_mutate(cfg);
            long killable = 0;
            for (const auto& m : res.mutants)
                if (!m.failed && m.aggregation.killable) ++killable;
            std::cout << "mutants " << res.mutants.size() << " killable " << killable << "\n";
            std::cout << "artifacts " << cfg.out.string() << "\n";
            if (res.any_failed) {
                std::cerr << "error: some mutants failed; see "
                          << (cfg.out / "mutation" / "errors.csv").string() << "\n";
                return 4;
            }
            return 0;
        }
        if (cmd_selectk->parsed()) {
            topomap::RunConfig cfg = load(selectk_args);
            if (selectk_candidate < 0)
                throw topomap::ValidationError("candidate index must be >= 0");
            topomap::KSelectionTrace trace =
                topomap::cmd_select_k(cfg, static_cast<std::size_t>(selectk_candidate));
            std::cout << "k_star " << trace.k_star << "\n";
            return 0;
        }
        if (cmd_graph->parsed()) {
            topomap::RunConfig cfg = load(graph_args);
            auto written = topomap::cmd_export_graph(cfg, graph_format);
            for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
            return 0;
        }
        if (cmd_eval->parsed()) {
            topomap::EvalPairResult res = topomap::cmd_eval_pair(truth_csv, pred_csv);
            std::cout << topomap::eval_pair_text(res);
            return 0;
        }
    } catch (const topomap::ValidationError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return 2;
}
