#pragma once

#include <optional>
#include <string>
#include <vector>

#include "genorch/adapter.hpp"
#include "genorch/plan.hpp"
#include "genorch/sim.hpp"

namespace genorch {

// Everything a job run depends on lives in the config; environment
// variables are reserved for endpoint credentials only.
struct EngineConfig {
    int schema_version = 1;
    uint64_t seed = 0;
    Budget budget;
    std::string planning_mode = "tree";  // selection | chain | tree
    bool composite_fallback = false;
    bool reseed_alternates = false;
    Vocab vocab;
    Thresholds thresholds;
    WorldConfig world;
    DetectorConfig detector;
    std::vector<ToolDescriptor> tools;  // empty = standard roster
    std::string backend = "sim";        // sim | endpoints
    std::string tools_endpoint;
    std::string verify_endpoint;
    std::string aux_endpoint;        // detector / layout / condition services
    std::string decomposer_endpoint;  // real-LLM decomposition, same schema
    int workers = 1;
};

EngineConfig config_from_json(const json& j);  // throws ConfigError
json config_to_json(const EngineConfig& c);
std::string config_hash(const EngineConfig& c);
Registry make_registry(const EngineConfig& c);

// Per-job effective options after applying the planning mode.
BuildOptions build_options(const EngineConfig& c);

struct JobRequest {
    TaskInstruction instruction;
    std::optional<SceneGraph> initial_state;  // editing jobs
    EngineConfig config;
};

struct JobResult {
    Outcome outcome;
    std::string trace;  // JSONL, header line first
    json header;
};

JobResult run_job(const JobRequest& req);

// Injectable variant for differential tests across the adapter boundary.
JobResult run_job(const JobRequest& req, ToolBackend& backend, IVerifier& verifier);

struct ReplayResult {
    bool matched = false;
    JobResult fresh;
};

// Re-run the job recorded in a trace (the header carries the full config)
// and byte-compare the result.
ReplayResult replay_trace(const std::string& trace_text);

// Realized tree reconstruction from a trace, in DOT form. Node ids are
// structural paths, so the trace alone is enough.
std::string trace_to_dot(const std::string& trace_text);

struct BenchParams {
    int jobs = 500;
    uint64_t seed = 17;
    int min_objects = 3, max_objects = 5;
    int min_relations = 1, max_relations = 2;
    EngineConfig base;
};

struct BenchResult {
    double selection_mean = 0, chain_mean = 0, tree_mean = 0;
    int jobs = 0;
    json to_json() const;
};

// The ablation corpus: seeded synthetic generation jobs run under
// selection-only, chain, and tree planning with a shared world seed per
// job, so the margins isolate the planning mechanism.
SceneSpec random_bench_spec(uint64_t seed, int index, const BenchParams& p, const Vocab& vocab);
BenchResult run_bench(const BenchParams& params);

}  // namespace genorch
