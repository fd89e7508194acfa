#pragma once

// Scripted editing-chain harness shared by the planning-tree tests and the
// acceptance suite. Sibling-group width per level comes from the number of
// capable tools, so each chain level uses a distinct skill with exactly as
// many registered tools as the shape asks for: add, then style, then move.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "genorch/adapter.hpp"
#include "genorch/plan.hpp"
#include "support/policy_oracle.hpp"

namespace genorch::testing {

struct ChainRun {
    Outcome outcome;
    std::vector<std::string> executed;
};

inline ChainRun run_scripted_chain(const std::vector<int>& alternates_per_level,
                                   const std::map<std::string, bool>& script, int max_nodes) {
    Registry reg;
    for (int i = 0; i < alternates_per_level[0]; ++i)
        reg.register_tool({Skill::add,
                           "Add-" + std::to_string(i),
                           {{"object_name", SlotKind::object_name}, {"object_bbox", SlotKind::bbox}},
                           "",
                           0.1 * i,
                           ""});
    if (alternates_per_level.size() > 1)
        for (int i = 0; i < alternates_per_level[1]; ++i)
            reg.register_tool({Skill::style_transfer,
                               "Style-" + std::to_string(i),
                               {{"style", SlotKind::text}},
                               "",
                               0.1 * i,
                               ""});
    if (alternates_per_level.size() > 2)
        for (int i = 0; i < alternates_per_level[2]; ++i)
            reg.register_tool({Skill::drag_object,
                               "Move-" + std::to_string(i),
                               {{"object_name", SlotKind::object_name},
                                {"object_bbox", SlotKind::bbox},
                                {"target_bbox", SlotKind::bbox}},
                               "",
                               0.1 * i,
                               ""});

    std::vector<AtomicEdit> edits;
    AtomicEdit add;
    add.action = EditAction::add;
    add.category = "gadget";
    add.dest_bbox = BBox{0.1, 0.1, 0.1, 0.1};
    edits.push_back(add);
    if (alternates_per_level.size() > 1) {
        AtomicEdit style;
        style.action = EditAction::style;
        style.style = "vivid";
        edits.push_back(style);
    }
    if (alternates_per_level.size() > 2) {
        AtomicEdit move;
        move.action = EditAction::move;
        move.target = ObjectSelector{"gadget", {}, std::nullopt};
        move.dest_bbox = BBox{0.7, 0.7, 0.1, 0.1};
        edits.push_back(move);
    }

    WorldConfig world;
    world.default_p_success = 1.0;
    world.p_obj = 1.0;
    world.p_attr = 1.0;
    world.mode = WorldConfig::Mode::scripted;
    for (auto& [node, pass] : script)
        world.script[node] = pass ? ScriptOutcome{ScriptOutcome::Kind::success, FailureMode::noop, {}}
                                  : ScriptOutcome{ScriptOutcome::Kind::failure, FailureMode::noop, {}};

    BuildOptions opts;
    opts.budget.max_nodes = max_nodes;
    opts.budget.max_branching = 2;

    PlanTree tree = build_tree(TaskKind::editing, {}, edits, reg, {}, opts);
    SimBackend backend(world);
    OracleVerifier verifier;
    PositionPipeline pipeline;
    Decomposer dec;
    ChainRun r;
    r.outcome = traverse(tree, SceneGraph{}, backend, verifier, pipeline, reg, dec, opts);
    for (auto& e : r.outcome.trace.events)
        if (e.value("event", "") == "exec") r.executed.push_back(e["node"]);
    return r;
}

inline std::vector<std::vector<int>> chain_shapes_depth3_branch2() {
    std::vector<std::vector<int>> shapes;
    for (int l1 = 1; l1 <= 2; ++l1) {
        shapes.push_back({l1});
        for (int l2 = 1; l2 <= 2; ++l2) {
            shapes.push_back({l1, l2});
            for (int l3 = 1; l3 <= 2; ++l3) shapes.push_back({l1, l2, l3});
        }
    }
    return shapes;
}

inline std::vector<std::string> potential_node_ids(const std::vector<int>& shape) {
    std::vector<std::string> ids;
    std::function<void(int, const std::string&)> walk = [&](int level, const std::string& p) {
        if (level == int(shape.size())) return;
        for (int a = 0; a < shape[level]; ++a) {
            ids.push_back(p + "." + std::to_string(a));
            walk(level + 1, p + "." + std::to_string(a));
        }
    };
    walk(0, "root");
    return ids;
}

struct SweepResult {
    long long checked = 0;
    long long mismatches = 0;
};

// Exhaustive pass/fail scripts for every tree of depth <= 3, branching <= 2,
// compared against the brute-force policy executor.
inline SweepResult oracle_equivalence_sweep(const std::vector<int>& budgets) {
    SweepResult result;
    for (auto& shape : chain_shapes_depth3_branch2()) {
        auto ids = potential_node_ids(shape);
        for (uint64_t mask = 0; mask < (uint64_t(1) << ids.size()); ++mask) {
            std::map<std::string, bool> script;
            for (size_t b = 0; b < ids.size(); ++b) script[ids[b]] = (mask >> b) & 1;
            for (int budget : budgets) {
                PolicyResult expect = PolicyOracle(shape, script, budget).run();
                ChainRun got = run_scripted_chain(shape, script, budget);
                bool ok = got.outcome.success == expect.success &&
                          got.outcome.nodes_executed == expect.nodes_executed &&
                          got.executed == expect.executed &&
                          std::abs(got.outcome.best_score - expect.best_score) < 1e-9;
                result.checked++;
                if (!ok) result.mismatches++;
            }
        }
    }
    return result;
}

}  // namespace genorch::testing
