#include "genorch/orchestrate.hpp"

#include <atomic>
#include <sstream>
#include <thread>

#include "genorch/json_io.hpp"
#include "genorch/rng.hpp"

namespace genorch {

EngineConfig config_from_json(const json& j) {
    EngineConfig c;
    c.schema_version = j.value("schema_version", 1);
    if (c.schema_version != 1) throw ConfigError("unsupported schema_version");
    c.seed = j.value("seed", uint64_t(0));
    if (j.contains("budget")) {
        c.budget.max_nodes = j["budget"].value("max_nodes", 32);
        c.budget.max_branching = j["budget"].value("max_branching", 2);
        if (c.budget.max_nodes < 1) throw ConfigError("budget.max_nodes must be >= 1");
        if (c.budget.max_branching < 1) throw ConfigError("budget.max_branching must be >= 1");
    }
    c.planning_mode = j.value("planning_mode", "tree");
    if (c.planning_mode != "selection" && c.planning_mode != "chain" && c.planning_mode != "tree")
        throw ConfigError("planning_mode must be selection, chain, or tree");
    c.composite_fallback = j.value("composite_fallback", false);
    c.reseed_alternates = j.value("reseed_alternates", false);
    if (j.contains("vocab")) from_json(j["vocab"], c.vocab);
    if (j.contains("thresholds")) from_json(j["thresholds"], c.thresholds);
    if (j.contains("world")) from_json(j["world"], c.world);
    if (j.contains("detector")) c.detector.sigma = j["detector"].value("sigma", 0.0);
    if (j.contains("tools"))
        for (auto& t : j["tools"]) c.tools.push_back(t.get<ToolDescriptor>());
    c.backend = j.value("backend", "sim");
    if (c.backend != "sim" && c.backend != "endpoints")
        throw ConfigError("backend must be sim or endpoints");
    c.tools_endpoint = j.value("tools_endpoint", "");
    c.verify_endpoint = j.value("verify_endpoint", "");
    c.aux_endpoint = j.value("aux_endpoint", "");
    c.decomposer_endpoint = j.value("decomposer_endpoint", "");
    if (c.backend == "endpoints" && c.tools_endpoint.empty())
        throw ConfigError("endpoints backend requires tools_endpoint");
    c.workers = j.value("workers", 1);
    if (c.workers < 1) throw ConfigError("workers must be >= 1");

    // One coherent world: the job seed, vocab and thresholds flow into it.
    c.world.seed = c.seed;
    c.world.vocab = c.vocab;
    c.world.thresholds = c.thresholds;
    c.detector.seed = c.seed;
    return c;
}

json config_to_json(const EngineConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["seed"] = c.seed;
    j["budget"] = json{{"max_nodes", c.budget.max_nodes},
                       {"max_branching", c.budget.max_branching}};
    j["planning_mode"] = c.planning_mode;
    j["composite_fallback"] = c.composite_fallback;
    j["reseed_alternates"] = c.reseed_alternates;
    j["vocab"] = c.vocab;
    j["thresholds"] = c.thresholds;
    j["world"] = c.world;
    j["detector"] = json{{"sigma", c.detector.sigma}};
    if (!c.tools.empty()) j["tools"] = c.tools;
    j["backend"] = c.backend;
    if (!c.tools_endpoint.empty()) j["tools_endpoint"] = c.tools_endpoint;
    if (!c.verify_endpoint.empty()) j["verify_endpoint"] = c.verify_endpoint;
    if (!c.aux_endpoint.empty()) j["aux_endpoint"] = c.aux_endpoint;
    if (!c.decomposer_endpoint.empty()) j["decomposer_endpoint"] = c.decomposer_endpoint;
    j["workers"] = c.workers;
    return j;
}

std::string config_hash(const EngineConfig& c) {
    char buf[20];
    snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a64(config_to_json(c).dump()));
    return buf;
}

Registry make_registry(const EngineConfig& c) {
    if (c.tools.empty()) return Registry::standard();
    Registry r;
    for (auto& t : c.tools) r.register_tool(t);
    return r;
}

BuildOptions build_options(const EngineConfig& c) {
    BuildOptions opts;
    opts.budget = c.budget;
    opts.composite_fallback = c.composite_fallback;
    opts.reseed_alternates = c.reseed_alternates;
    if (c.planning_mode == "selection") {
        opts.budget.max_branching = 1;
        opts.corrections_enabled = false;
    } else if (c.planning_mode == "chain") {
        opts.budget.max_branching = 1;
    }
    return opts;
}

namespace {

// Real-LLM decomposition behind the wire protocol, same output schema as
// the grammar.
SceneSpec remote_decompose_generation(const std::string& endpoint, const std::string& text) {
    json inputs{{"kind", "generation"}, {"text", text}};
    json body;
    try {
        body = call_adapter(endpoint,
                            make_adapter_request("aux.decompose", "decomposer", "", inputs, {}));
    } catch (const AdapterError& e) {
        throw EndpointError(e.what());
    }
    if (!body.contains("spec")) throw EndpointError("decomposer response lacks a spec");
    SceneSpec spec;
    from_json(body["spec"], spec);
    return spec;
}

std::vector<AtomicEdit> remote_decompose_editing(const std::string& endpoint,
                                                 const std::string& text) {
    json inputs{{"kind", "editing"}, {"text", text}};
    json body;
    try {
        body = call_adapter(endpoint,
                            make_adapter_request("aux.decompose", "decomposer", "", inputs, {}));
    } catch (const AdapterError& e) {
        throw EndpointError(e.what());
    }
    if (!body.contains("edits") || !body["edits"].is_array())
        throw EndpointError("decomposer response lacks edits");
    std::vector<AtomicEdit> edits;
    for (auto& e : body["edits"]) edits.push_back(e.get<AtomicEdit>());
    return edits;
}

json job_header(const JobRequest& req, TaskKind kind) {
    json h;
    h["event"] = "header";
    h["schema_version"] = req.config.schema_version;
    h["config_hash"] = config_hash(req.config);
    h["config"] = config_to_json(req.config);
    h["kind"] = kind == TaskKind::generation ? "generation" : "editing";
    json instr;
    instr["text"] = req.instruction.text;
    if (req.instruction.kind_hint)
        instr["hint"] = *req.instruction.kind_hint == TaskKind::editing ? "editing" : "generation";
    json att = json::object();
    if (req.instruction.attachments.source_scene)
        att["source_scene"] = *req.instruction.attachments.source_scene;
    if (!req.instruction.attachments.subject_refs.empty())
        att["subject_refs"] = req.instruction.attachments.subject_refs;
    if (req.instruction.attachments.condition_source)
        att["condition_source"] = *req.instruction.attachments.condition_source;
    instr["attachments"] = att;
    h["instruction"] = instr;
    if (req.initial_state) h["initial_state"] = *req.initial_state;
    return h;
}

}  // namespace

JobResult run_job(const JobRequest& req, ToolBackend& backend, IVerifier& verifier) {
    const EngineConfig& cfg = req.config;
    Registry registry = make_registry(cfg);
    Decomposer decomposer(cfg.vocab);
    PositionPipeline pipeline(cfg.thresholds, cfg.detector, cfg.aux_endpoint);
    BuildOptions opts = build_options(cfg);

    TaskKind kind = decomposer.classify_task(req.instruction);
    SceneGraph initial;
    if (kind == TaskKind::editing) {
        if (!req.initial_state)
            throw ConfigError("editing job requires an initial scene state");
        initial = *req.initial_state;
    }

    GenerationRequest request;
    std::vector<AtomicEdit> edits;
    SelectionContext ctx;
    ctx.instruction = req.instruction.text;
    ctx.attachments = req.instruction.attachments;
    ctx.tools = registry.all();
    if (kind == TaskKind::generation) {
        request.prompt = req.instruction.text;
        request.spec = cfg.decomposer_endpoint.empty()
                           ? decomposer.decompose_generation(req.instruction.text)
                           : remote_decompose_generation(cfg.decomposer_endpoint,
                                                         req.instruction.text);
        request.attachments = req.instruction.attachments;
        ctx.spec = request.spec;
    } else {
        edits = cfg.decomposer_endpoint.empty()
                    ? decomposer.decompose_editing(req.instruction)
                    : remote_decompose_editing(cfg.decomposer_endpoint, req.instruction.text);
        ctx.detections = pipeline.detect(initial);
    }

    PlanTree tree = build_tree(kind, request, edits, registry, ctx, opts);
    Outcome outcome =
        traverse(tree, initial, backend, verifier, pipeline, registry, decomposer, opts);

    JobResult result;
    result.header = job_header(req, kind);
    result.trace = result.header.dump() + "\n" + outcome.trace.to_jsonl();
    result.outcome = std::move(outcome);
    return result;
}

JobResult run_job(const JobRequest& req) {
    const EngineConfig& cfg = req.config;
    std::unique_ptr<ToolBackend> backend;
    std::unique_ptr<IVerifier> verifier;
    if (cfg.backend == "endpoints") {
        backend = std::make_unique<HttpBackend>(cfg.tools_endpoint);
    } else {
        backend = std::make_unique<SimBackend>(cfg.world);
    }
    if (!cfg.verify_endpoint.empty()) {
        verifier = std::make_unique<EndpointVerifier>(cfg.verify_endpoint);
    } else {
        verifier = std::make_unique<OracleVerifier>(cfg.thresholds);
    }
    return run_job(req, *backend, *verifier);
}

ReplayResult replay_trace(const std::string& trace_text) {
    std::istringstream in(trace_text);
    std::string first;
    if (!std::getline(in, first)) throw ConfigError("empty trace");
    json header;
    try {
        header = json::parse(first);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("trace header is not JSON: ") + e.what());
    }
    if (header.value("event", "") != "header") throw ConfigError("first trace line is not a header");

    JobRequest req;
    req.config = config_from_json(header.at("config"));
    const json& instr = header.at("instruction");
    req.instruction.text = instr.at("text").get<std::string>();
    if (instr.contains("hint"))
        req.instruction.kind_hint =
            instr["hint"] == "editing" ? TaskKind::editing : TaskKind::generation;
    const json& att = instr.value("attachments", json::object());
    if (att.contains("source_scene"))
        req.instruction.attachments.source_scene = att["source_scene"].get<std::string>();
    if (att.contains("subject_refs"))
        for (auto& s : att["subject_refs"])
            req.instruction.attachments.subject_refs.push_back(s.get<std::string>());
    if (att.contains("condition_source"))
        req.instruction.attachments.condition_source = att["condition_source"].get<std::string>();
    if (header.contains("initial_state")) {
        SceneGraph g;
        from_json(header["initial_state"], g);
        req.initial_state = g;
    }

    ReplayResult result;
    result.fresh = run_job(req);
    result.matched = result.fresh.trace == trace_text;
    return result;
}

std::string trace_to_dot(const std::string& trace_text) {
    std::istringstream in(trace_text);
    std::string line;
    std::map<std::string, std::string> labels;
    std::vector<std::string> order;
    auto note = [&](const std::string& id, const std::string& label) {
        if (!labels.count(id)) order.push_back(id);
        labels[id] = label;
    };
    note("root", "root\\ninitial");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json e = json::parse(line);
        std::string ev = e.value("event", "");
        if (ev == "exec") {
            std::string id = e["node"];
            std::string label = id + "\\n" + e.value("kind", "") + "\\n" + e.value("tool", "") +
                                (e.value("pass", false) ? "\\n[pass]" : "\\n[fail]");
            note(id, label);
        } else if (ev == "prune") {
            std::string id = e["node"];
            note(id, id + "\\n[pruned]");
        }
    }
    std::string out = "digraph plan {\n  node [shape=box, fontname=\"monospace\"];\n";
    for (auto& id : order) out += "  \"" + id + "\" [label=\"" + labels[id] + "\"];\n";
    for (auto& id : order) {
        if (id == "root") continue;
        size_t dot = id.rfind('.');
        std::string parent = dot == std::string::npos ? "root" : id.substr(0, dot);
        out += "  \"" + parent + "\" -> \"" + id + "\";\n";
    }
    out += "}\n";
    return out;
}

json BenchResult::to_json() const {
    return json{{"jobs", jobs},
                {"mean_score", json{{"selection", selection_mean},
                                    {"chain", chain_mean},
                                    {"tree", tree_mean}}}};
}

SceneSpec random_bench_spec(uint64_t seed, int index, const BenchParams& p, const Vocab& vocab) {
    Rng rng(seed, "bench." + std::to_string(index));
    static const std::vector<std::string> nouns = {"cat",  "dog",   "sheep", "goat",  "bird",
                                                   "car",  "tree",  "house", "chair", "table",
                                                   "bicycle", "scooter"};
    static const std::vector<std::string> scenes = {"grassland", "beach", "forest", "city",
                                                    "mountain"};
    std::vector<std::string> colors(vocab.colors.begin(), vocab.colors.end());

    int target = p.min_objects + int(rng.next_below(p.max_objects - p.min_objects + 1));
    SceneSpec spec;
    std::vector<size_t> pool(nouns.size());
    for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    int placed = 0;
    while (placed < target && !pool.empty()) {
        size_t pick = rng.next_below(pool.size());
        std::string cat = nouns[pool[pick]];
        pool.erase(pool.begin() + pick);
        // the first two entries stay single so relation endpoints exist
        int count = (spec.required.size() >= 2 && target - placed >= 2 && rng.next_u01() < 0.3)
                        ? 2
                        : 1;
        RequiredEntry entry{cat, {}, count};
        if (rng.next_u01() < 0.8) entry.attrs.color = colors[rng.next_below(colors.size())];
        spec.required.push_back(entry);
        placed += count;
    }

    // Relations between single-count entries; object entry always earlier
    // than subject entry, which keeps the set acyclic.
    std::vector<int> singles;
    for (int i = 0; i < int(spec.required.size()); ++i)
        if (spec.required[i].count == 1) singles.push_back(i);
    int want = p.min_relations + int(rng.next_below(p.max_relations - p.min_relations + 1));
    static const RelationKind kinds[] = {RelationKind::left_of, RelationKind::right_of,
                                         RelationKind::above, RelationKind::below,
                                         RelationKind::next_to};
    std::set<std::pair<int, int>> used;
    int made = 0;
    for (int attempt = 0; made < want && attempt < 20 && singles.size() >= 2; ++attempt) {
        int oi = int(rng.next_below(singles.size() - 1));
        int si = oi + 1 + int(rng.next_below(singles.size() - oi - 1));
        int obj = singles[oi], sub = singles[si];
        if (!used.insert({sub, obj}).second) continue;
        const RequiredEntry& se = spec.required[sub];
        const RequiredEntry& oe = spec.required[obj];
        spec.relations.push_back({kinds[rng.next_below(5)],
                                  {se.category, se.attrs, std::nullopt},
                                  {oe.category, oe.attrs, std::nullopt}});
        ++made;
    }
    if (rng.next_u01() < 0.5) spec.background.insert(scenes[rng.next_below(scenes.size())]);
    return spec;
}

BenchResult run_bench(const BenchParams& params) {
    Decomposer decomposer(params.base.vocab);
    struct Row {
        double selection = 0, chain = 0, tree = 0;
    };
    std::vector<Row> rows(params.jobs);

    auto run_one = [&](int i) {
        SceneSpec spec = random_bench_spec(params.seed, i, params, params.base.vocab);
        std::string prompt = decomposer.render_spec(spec);
        Row row;
        for (auto mode : {"selection", "chain", "tree"}) {
            JobRequest req;
            req.instruction.text = prompt;
            req.config = params.base;
            req.config.planning_mode = mode;
            req.config.seed = params.seed + uint64_t(i) * 1000003ull;
            req.config.world.seed = req.config.seed;
            req.config.detector.seed = req.config.seed;
            double score = run_job(req).outcome.best_score;
            if (std::string(mode) == "selection")
                row.selection = score;
            else if (std::string(mode) == "chain")
                row.chain = score;
            else
                row.tree = score;
        }
        rows[i] = row;
    };

    int workers = std::max(1, params.base.workers);
    if (workers == 1) {
        for (int i = 0; i < params.jobs; ++i) run_one(i);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (int i = next.fetch_add(1); i < params.jobs; i = next.fetch_add(1)) run_one(i);
            });
        for (auto& t : pool) t.join();
    }

    BenchResult result;
    result.jobs = params.jobs;
    for (auto& r : rows) {
        result.selection_mean += r.selection;
        result.chain_mean += r.chain;
        result.tree_mean += r.tree;
    }
    result.selection_mean /= params.jobs;
    result.chain_mean /= params.jobs;
    result.tree_mean /= params.jobs;
    return result;
}

}  // namespace genorch
