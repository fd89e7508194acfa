#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>

#include "genorch/json_io.hpp"
#include "genorch/orchestrate.hpp"
#include "support/fixtures.hpp"
#include "support/golden_scenarios.hpp"

using namespace genorch;
using namespace genorch::testing;

namespace {

EngineConfig perfect_config(uint64_t seed = 5) {
    json j;
    j["seed"] = seed;
    j["world"] = {{"default_p_success", 1.0}, {"p_obj", 1.0}, {"p_attr", 1.0}};
    return config_from_json(j);
}

int free_port(int base) { return base + int(getpid() % 500); }

}  // namespace

TEST_CASE("config validation") {
    CHECK_NOTHROW(config_from_json(json::object()));
    CHECK_THROWS_AS(config_from_json(json{{"planning_mode", "psychic"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"budget", {{"max_nodes", 0}}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"backend", "endpoints"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"world", {{"default_p_success", 1.5}}}}), ConfigError);
    CHECK_THROWS_AS(
        config_from_json(json{{"world", {{"failure_weights", {{"noop", 0.5}, {"shrink", 0.2}}}}}}),
        ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"world", {{"mode", "dreamy"}}}}), ConfigError);

    // hash is stable and sensitive
    EngineConfig a = perfect_config(5);
    EngineConfig b = perfect_config(5);
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 6;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("run_job: a bird in a perfect world succeeds within two nodes") {
    JobRequest req;
    req.instruction.text = "a bird";
    req.config = perfect_config();
    JobResult result = run_job(req);
    CHECK(result.outcome.success);
    CHECK(result.outcome.nodes_executed <= 2);
    CHECK(result.outcome.best_score == doctest::Approx(1.0));
    REQUIRE(result.outcome.final_state.objects.size() == 1);
    CHECK(result.outcome.final_state.objects[0].category == "bird");

    // the trace starts with a header that carries the full config
    std::istringstream lines(result.trace);
    std::string first;
    std::getline(lines, first);
    json header = json::parse(first);
    CHECK(header["event"] == "header");
    CHECK(header["kind"] == "generation");
    CHECK(header.contains("config"));
    CHECK(header["config_hash"] == config_hash(req.config));
}

TEST_CASE("run_job: editing a provided scene") {
    JobRequest req;
    req.instruction.text = "remove the cat; add a blue bird";
    req.instruction.attachments.source_scene = "inline";
    SceneGraph scene;
    scene.objects.push_back({"obj0", "cat", {}, {0.2, 0.2, 0.2, 0.2}});
    scene.objects.push_back({"obj1", "dog", {}, {0.6, 0.6, 0.2, 0.2}});
    req.initial_state = scene;
    req.config = perfect_config();

    JobResult result = run_job(req);
    CHECK(result.outcome.success);
    CHECK(result.outcome.nodes_executed == 2);
    CHECK(result.outcome.final_state.find("obj0") == nullptr);
    bool has_bird = false;
    for (auto& o : result.outcome.final_state.objects)
        has_bird |= o.category == "bird" && o.attrs.color == "blue";
    CHECK(has_bird);

    // editing without a state is a config error
    JobRequest missing = req;
    missing.initial_state = std::nullopt;
    CHECK_THROWS_AS(run_job(missing), ConfigError);
}

TEST_CASE("determinism: identical config and seed give byte-identical traces") {
    for (uint64_t seed : {1ull, 42ull, 977ull}) {
        JobRequest req;
        req.instruction.text = "a red car and a green tree; the car is next_to the tree";
        req.config = perfect_config(seed);
        req.config.world.default_p_success = 0.7;
        JobResult a = run_job(req);
        JobResult b = run_job(req);
        CHECK(a.trace == b.trace);
        CHECK(a.outcome.best_score == b.outcome.best_score);
    }
}

TEST_CASE("replay: traces re-run to the identical outcome") {
    JobRequest req;
    req.instruction.text = "two white sheep and a goat; the goat is right_of the sheep";
    req.config = perfect_config(21);
    req.config.world.default_p_success = 0.8;
    JobResult first = run_job(req);

    ReplayResult replay = replay_trace(first.trace);
    CHECK(replay.matched);
    CHECK(replay.fresh.outcome.success == first.outcome.success);
    CHECK(replay.fresh.outcome.best_score == first.outcome.best_score);

    // editing jobs round-trip the initial state through the header
    JobRequest edit;
    edit.instruction.text = "add a bird";
    edit.instruction.attachments.source_scene = "inline";
    SceneGraph scene;
    scene.objects.push_back({"obj0", "cat", {}, {0.2, 0.2, 0.2, 0.2}});
    edit.initial_state = scene;
    edit.config = perfect_config(3);
    JobResult edit_run = run_job(edit);
    CHECK(replay_trace(edit_run.trace).matched);

    CHECK_THROWS_AS(replay_trace("not json\n"), ConfigError);
    CHECK_THROWS_AS(replay_trace("{\"event\":\"exec\"}\n"), ConfigError);
}

TEST_CASE("trace reconstruction: DOT export from the trace alone") {
    JobRequest req = correction_scenario_request();
    JobResult result = run_job(req);
    std::string dot = trace_to_dot(result.trace);
    CHECK(dot.find("digraph plan") != std::string::npos);
    CHECK(dot.find("\"root\" -> \"root.0\"") != std::string::npos);
    CHECK(dot.find("\"root.0\" -> \"root.0.0\"") != std::string::npos);
    CHECK(dot.find("[pass]") != std::string::npos);
}

TEST_CASE("golden trace: the three-correction scenario") {
    JobRequest req = correction_scenario_request();
    JobResult result = run_job(req);
    CHECK(result.outcome.success);

    // the corrections are exactly the three known edits, in order
    std::vector<std::string> corrections;
    for (auto& line : result.outcome.trace.events)
        if (line.value("event", "") == "corrections")
            for (auto& e : line["edits"]) corrections.push_back(e.get<std::string>());
    REQUIRE(corrections.size() == 3);
    CHECK(corrections[0] == "edit the color of the scooter to blue");
    CHECK(corrections[1] == "add a black bicycle");
    CHECK(corrections[2] == "add a bird");

    if (std::getenv("GENORCH_REGEN_GOLDEN"))
        write_text("golden/correction_trace.jsonl", result.trace);
    CHECK(result.trace == read_text("golden/correction_trace.jsonl"));
}

TEST_CASE("golden trace: the sheep fallback scenario") {
    JobRequest req = sheep_fallback_scenario_request();
    JobResult result = run_job(req);
    CHECK(result.outcome.success);

    // attribute edit fails, replacement fails the size check, remove+add
    // succeeds, then the goat lands on the right
    std::vector<std::pair<std::string, bool>> execs;
    for (auto& e : result.outcome.trace.events)
        if (e.value("event", "") == "exec")
            execs.push_back({e["node"].get<std::string>(), e["pass"].get<bool>()});
    REQUIRE(execs.size() == 6);
    CHECK(execs[0] == std::pair<std::string, bool>{"root.0", false});
    CHECK(execs[1] == std::pair<std::string, bool>{"root.0.0", false});
    CHECK(execs[2] == std::pair<std::string, bool>{"root.0.1", false});
    CHECK(execs[3] == std::pair<std::string, bool>{"root.0.2", true});
    CHECK(execs[4] == std::pair<std::string, bool>{"root.0.2.0", true});
    CHECK(execs[5] == std::pair<std::string, bool>{"root.0.2.0.0", true});

    if (std::getenv("GENORCH_REGEN_GOLDEN"))
        write_text("golden/sheep_fallback_trace.jsonl", result.trace);
    CHECK(result.trace == read_text("golden/sheep_fallback_trace.jsonl"));
}

TEST_CASE("adapter: loopback server echoes simulated tools") {
    EngineConfig cfg = perfect_config(9);
    AdapterServer server(cfg.world, cfg.thresholds, cfg.detector);
    int port = free_port(18200);
    REQUIRE(server.start("127.0.0.1", port));
    std::string endpoint = "http://127.0.0.1:" + std::to_string(port);

    SUBCASE("ok round trip") {
        HttpBackend backend(endpoint);
        Registry reg = Registry::standard();
        SceneGraph state;
        json inputs;
        inputs["object_name"] = "bird";
        inputs["object_bbox"] = json::array({0.4, 0.4, 0.1, 0.1});
        SceneGraph out = backend.apply(*reg.lookup("AnyDoor-Add"), inputs, state, "n1");
        REQUIRE(out.objects.size() == 1);
        CHECK(out.objects[0].category == "bird");
    }

    SUBCASE("adapter error carries diagnostics") {
        HttpBackend backend(endpoint);
        Registry reg = Registry::standard();
        json inputs;  // object_name missing entirely
        inputs["object_bbox"] = kMissingMarker;
        CHECK_THROWS_AS(backend.apply(*reg.lookup("LaMa"), inputs, SceneGraph{}, "n2"),
                        AdapterError);
    }

    SUBCASE("verifier endpoint returns oracle verdicts") {
        EndpointVerifier verifier(endpoint);
        SceneSpec spec;
        spec.required = {{"cat", {}, 1}};
        SceneGraph g;
        g.objects.push_back({"obj0", "cat", {}, {0.3, 0.3, 0.2, 0.2}});
        Verdict v = verifier.verify_spec(g, spec);
        CHECK(v.pass);
        CHECK(v.score == doctest::Approx(1.0));

        SceneGraph empty;
        Verdict bad = verifier.verify_spec(empty, spec);
        CHECK_FALSE(bad.pass);
        REQUIRE(bad.report.missing.size() == 1);
        CHECK(bad.report.missing[0].category == "cat");
    }

    server.stop();
}

TEST_CASE("adapter: transport failures and malformed bodies") {
    HttpBackend unreachable("http://127.0.0.1:1");
    Registry reg = Registry::standard();
    CHECK_THROWS_AS(unreachable.apply(*reg.lookup("LaMa"), json::object(), SceneGraph{}, "n"),
                    AdapterError);

    // a server that answers nonsense
    httplib::Server bad;
    bad.Post("/v1/execute", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("this is not json", "text/plain");
    });
    int port = free_port(18800);
    REQUIRE(bad.bind_to_port("127.0.0.1", port));
    std::thread worker([&]() { bad.listen_after_bind(); });
    bad.wait_until_ready();
    HttpBackend backend("http://127.0.0.1:" + std::to_string(port));
    CHECK_THROWS_AS(backend.apply(*reg.lookup("LaMa"), json::object(), SceneGraph{}, "n"),
                    AdapterError);
    EndpointVerifier verifier("http://127.0.0.1:" + std::to_string(port));
    SceneSpec spec;
    CHECK_THROWS_AS(verifier.verify_spec(SceneGraph{}, spec), EndpointError);
    bad.stop();
    worker.join();
}

TEST_CASE("adapter boundary transparency: wire equals in-process") {
    EngineConfig cfg = perfect_config(33);
    cfg.world.default_p_success = 0.7;  // failures included

    AdapterServer server(cfg.world, cfg.thresholds, cfg.detector);
    int port = free_port(18500);
    REQUIRE(server.start("127.0.0.1", port));

    for (int i = 0; i < 5; ++i) {
        JobRequest req;
        req.instruction.text = "a black cat and a white dog; the cat is left_of the dog";
        req.config = cfg;
        req.config.seed = 100 + i;
        req.config.world.seed = req.config.seed;
        req.config.detector.seed = req.config.seed;

        SimBackend local(req.config.world);
        OracleVerifier local_verifier(req.config.thresholds);
        JobResult in_process = run_job(req, local, local_verifier);

        HttpBackend wire("http://127.0.0.1:" + std::to_string(port));
        // the server was built with seed 33: point it at the same stream
        AdapterServer per_seed(req.config.world, req.config.thresholds, req.config.detector);
        int p2 = free_port(18600) + i;
        REQUIRE(per_seed.start("127.0.0.1", p2));
        HttpBackend wire2("http://127.0.0.1:" + std::to_string(p2));
        OracleVerifier wire_verifier(req.config.thresholds);
        JobResult over_wire = run_job(req, wire2, wire_verifier);
        per_seed.stop();

        CHECK(in_process.outcome.success == over_wire.outcome.success);
        CHECK(in_process.outcome.best_score == doctest::Approx(over_wire.outcome.best_score));
        CHECK(in_process.outcome.nodes_executed == over_wire.outcome.nodes_executed);
        CHECK(json(in_process.outcome.final_state) == json(over_wire.outcome.final_state));
        CHECK(in_process.outcome.trace.to_jsonl() == over_wire.outcome.trace.to_jsonl());
    }
    server.stop();
}

TEST_CASE("aux and decomposer endpoints match the in-process path") {
    EngineConfig cfg = perfect_config(44);
    AdapterServer server(cfg.world, cfg.thresholds, cfg.detector);
    int port = free_port(19000);
    REQUIRE(server.start("127.0.0.1", port));
    std::string endpoint = "http://127.0.0.1:" + std::to_string(port);

    SUBCASE("detector / layout / condition delegate with the same schema") {
        SceneGraph g;
        g.objects.push_back({"obj0", "cat", {}, {0.2, 0.2, 0.2, 0.2}});
        PositionPipeline local(cfg.thresholds, cfg.detector);
        PositionPipeline remote(cfg.thresholds, cfg.detector, endpoint);

        auto a = local.detect(g);
        auto b = remote.detect(g);
        REQUIRE(a.size() == b.size());
        CHECK(a[0].bbox == b[0].bbox);
        CHECK(a[0].name == b[0].name);

        Decomposer d;
        SceneSpec spec = d.decompose_generation("a cat and a dog; the cat is left_of the dog");
        auto la = local.layout(spec);
        auto lb = remote.layout(spec);
        REQUIRE(la.size() == lb.size());
        for (size_t i = 0; i < la.size(); ++i) CHECK(la[i].bbox == lb[i].bbox);

        CHECK(local.condition("canny", "x") == remote.condition("canny", "x"));

        PositionPipeline dead(cfg.thresholds, cfg.detector, "http://127.0.0.1:1");
        CHECK_THROWS_AS(dead.detect(g), EndpointError);
    }

    SUBCASE("remote decomposition equals the grammar") {
        JobRequest req;
        req.instruction.text = "two white sheep and a goat; the goat is right_of the sheep";
        req.config = cfg;
        JobResult local = run_job(req);
        req.config.decomposer_endpoint = endpoint;
        JobResult remote = run_job(req);
        CHECK(local.outcome.success == remote.outcome.success);
        CHECK(json(local.outcome.final_state) == json(remote.outcome.final_state));
        // traces differ only in the header (config carries the endpoint)
        auto events = [](const std::string& trace) {
            return trace.substr(trace.find('\n') + 1);
        };
        CHECK(events(local.trace) == events(remote.trace));
    }

    server.stop();
}

TEST_CASE("bench: small corpus runs and reports means in range") {
    BenchParams params;
    params.jobs = 12;
    params.seed = 5;
    params.base = perfect_config(5);
    params.base.world.default_p_success = 0.7;
    BenchResult r = run_bench(params);
    CHECK(r.jobs == 12);
    for (double m : {r.selection_mean, r.chain_mean, r.tree_mean}) {
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
    }
    // same params, same result (workers = 1)
    BenchResult again = run_bench(params);
    CHECK(r.selection_mean == doctest::Approx(again.selection_mean));
    CHECK(r.chain_mean == doctest::Approx(again.chain_mean));
    CHECK(r.tree_mean == doctest::Approx(again.tree_mean));
    // concurrent workers aggregate identically
    params.base.workers = 3;
    BenchResult parallel = run_bench(params);
    CHECK(parallel.tree_mean == doctest::Approx(r.tree_mean));
}

TEST_CASE("bench: the full 500-job corpus reproduces exactly across runs") {
    BenchParams params;
    params.jobs = 500;
    params.base = config_from_json(read_json("../configs/bench_ablation.json"));
    params.seed = params.base.seed;
    BenchResult a = run_bench(params);
    BenchResult b = run_bench(params);
    CHECK(a.to_json().dump() == b.to_json().dump());
}
