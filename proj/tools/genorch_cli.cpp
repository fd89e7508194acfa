// genorch: run generation/editing jobs against the simulated world or
// remote adapters, replay traces, run the ablation bench, export trees.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "genorch/json_io.hpp"
#include "genorch/orchestrate.hpp"

using namespace genorch;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
}

EngineConfig load_config(const std::string& path) {
    if (path.empty()) return config_from_json(json::object());
    return config_from_json(json::parse(read_file(path)));
}

struct CommonFlags {
    std::string config_path;
    int64_t seed = -1;
    int budget_nodes = -1;
    int budget_branching = -1;
    std::string mode;      // sim | endpoints
    std::string planning;  // selection | chain | tree
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "engine config file (JSON)");
    cmd->add_option("--seed", f.seed, "override config seed");
    cmd->add_option("--budget-nodes", f.budget_nodes, "max executed nodes");
    cmd->add_option("--budget-branching", f.budget_branching, "max sibling alternates");
    cmd->add_option("--mode", f.mode, "backend mode: sim or endpoints");
    cmd->add_option("--planning", f.planning, "planning mode: selection, chain, tree");
}

EngineConfig resolve_config(const CommonFlags& f) {
    EngineConfig cfg = load_config(f.config_path);
    if (f.seed >= 0) {
        cfg.seed = uint64_t(f.seed);
        cfg.world.seed = cfg.seed;
        cfg.detector.seed = cfg.seed;
    }
    if (f.budget_nodes > 0) cfg.budget.max_nodes = f.budget_nodes;
    if (f.budget_branching > 0) cfg.budget.max_branching = f.budget_branching;
    if (!f.mode.empty()) cfg.backend = f.mode;
    if (!f.planning.empty()) cfg.planning_mode = f.planning;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unified generation/editing orchestration engine"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run one job");
    CommonFlags run_flags;
    add_common(run, run_flags);
    std::string prompt, edit_text, scene_path, job_path, trace_out, outcome_out;
    run->add_option("--prompt", prompt, "generation instruction");
    run->add_option("--edit", edit_text, "editing instruction");
    run->add_option("--scene", scene_path, "source scene JSON for editing jobs");
    run->add_option("job", job_path, "job file: {instruction, initial_state?}");
    run->add_option("--trace", trace_out, "write the JSONL trace here");
    run->add_option("--out", outcome_out, "write the outcome JSON here");

    // replay
    auto* replay = app.add_subcommand("replay", "re-run a trace and byte-compare");
    std::string replay_path;
    replay->add_option("trace", replay_path, "trace file")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "ablation corpus: selection vs chain vs tree");
    CommonFlags bench_flags;
    add_common(bench, bench_flags);
    int bench_jobs = 500;
    std::string bench_out;
    bench->add_option("--jobs", bench_jobs, "number of synthetic jobs");
    bench->add_option("--out", bench_out, "write the summary JSON here");

    // export-tree
    auto* export_tree = app.add_subcommand("export-tree", "emit the realized tree as DOT");
    std::string export_trace, dot_out;
    export_tree->add_option("trace", export_trace, "trace file")->required();
    export_tree->add_option("--dot", dot_out, "output path (stdout when omitted)");

    // validate-config
    auto* validate = app.add_subcommand("validate-config", "check a config file");
    std::string validate_path;
    validate->add_option("config", validate_path, "config file")->required();

    // serve
    auto* serve = app.add_subcommand("serve", "host the simulated world on the adapter protocol");
    CommonFlags serve_flags;
    add_common(serve, serve_flags);
    std::string serve_host = "127.0.0.1";
    int serve_port = 8791;
    serve->add_option("--host", serve_host, "bind host");
    serve->add_option("--port", serve_port, "bind port");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            EngineConfig cfg = resolve_config(run_flags);
            JobRequest req;
            req.config = cfg;
            if (!job_path.empty()) {
                json j = json::parse(read_file(job_path));
                req.instruction.text = j.at("instruction").get<std::string>();
                if (j.contains("hint"))
                    req.instruction.kind_hint =
                        j["hint"] == "editing" ? TaskKind::editing : TaskKind::generation;
                if (j.contains("initial_state")) {
                    SceneGraph g;
                    from_json(j["initial_state"], g);
                    req.initial_state = g;
                    req.instruction.attachments.source_scene = job_path;
                }
            } else if (!prompt.empty()) {
                req.instruction.text = prompt;
            } else if (!edit_text.empty()) {
                req.instruction.text = edit_text;
                if (scene_path.empty())
                    throw ConfigError("--edit requires --scene with the source state");
                SceneGraph g;
                from_json(json::parse(read_file(scene_path)), g);
                req.initial_state = g;
                req.instruction.attachments.source_scene = scene_path;
            } else {
                throw ConfigError("provide a job file, --prompt, or --edit");
            }

            JobResult result = run_job(req);
            if (!trace_out.empty()) write_file(trace_out, result.trace);
            json summary{{"success", result.outcome.success},
                         {"best_score", result.outcome.best_score},
                         {"nodes_executed", result.outcome.nodes_executed},
                         {"final_state", result.outcome.final_state}};
            if (!outcome_out.empty()) write_file(outcome_out, summary.dump(2) + "\n");
            std::cout << summary.dump(2) << "\n";
            return result.outcome.success ? 0 : 2;
        }

        if (*replay) {
            ReplayResult r = replay_trace(read_file(replay_path));
            std::cout << (r.matched ? "replay matched byte-for-byte" : "replay DIVERGED") << "\n";
            std::cout << json{{"success", r.fresh.outcome.success},
                              {"best_score", r.fresh.outcome.best_score},
                              {"nodes_executed", r.fresh.outcome.nodes_executed}}
                             .dump(2)
                      << "\n";
            return r.matched ? 0 : 1;
        }

        if (*bench) {
            BenchParams params;
            params.base = resolve_config(bench_flags);
            params.jobs = bench_jobs;
            params.seed = params.base.seed;
            BenchResult r = run_bench(params);
            std::string text = r.to_json().dump(2) + "\n";
            if (!bench_out.empty()) write_file(bench_out, text);
            std::cout << text;
            return 0;
        }

        if (*export_tree) {
            std::string dot = trace_to_dot(read_file(export_trace));
            if (dot_out.empty())
                std::cout << dot;
            else
                write_file(dot_out, dot);
            return 0;
        }

        if (*validate) {
            try {
                config_from_json(json::parse(read_file(validate_path)));
            } catch (const std::exception& e) {
                std::cerr << "invalid: " << e.what() << "\n";
                return 1;
            }
            std::cout << "ok\n";
            return 0;
        }

        if (*serve) {
            EngineConfig cfg = resolve_config(serve_flags);
            std::cout << "serving simulated tools on " << serve_host << ":" << serve_port << "\n";
            if (!serve_adapters(cfg.world, cfg.thresholds, cfg.detector, serve_host, serve_port)) {
                std::cerr << "failed to bind " << serve_host << ":" << serve_port << "\n";
                return 1;
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
