#pragma once

// Correction-closure harness: build a random (graph, spec) pair, map the
// discrepancy report to edits, apply them under failure-free simulated
// tools, and check the result satisfies the spec exactly.

#include <set>
#include <string>
#include <vector>

#include "genorch/decompose.hpp"
#include "genorch/json_io.hpp"
#include "genorch/rng.hpp"
#include "genorch/scene.hpp"
#include "genorch/sim.hpp"

namespace genorch::testing {

struct ClosureCase {
    SceneSpec spec;
    SceneGraph graph;
};

// Specs with distinct-category entries, acyclic relations (object entry
// always earlier), metric relations only against single-count entries, and
// roomy object placement so relational destinations stay solvable.
inline ClosureCase random_closure_case(uint64_t seed, int max_objects = 5) {
    Rng rng(seed, "closure-pair");
    static const std::vector<std::string> nouns = {"cat",  "dog",  "sheep", "goat",
                                                   "bird", "tree", "car"};
    static const std::vector<std::string> colors = {"white", "black", "blue", "red", "green"};
    static const std::vector<std::string> scenes = {"grassland", "beach", "forest"};

    ClosureCase out;
    int target = 1 + int(rng.next_below(max_objects));
    std::vector<size_t> pool(nouns.size());
    for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    int placed = 0;
    while (placed < target && !pool.empty()) {
        size_t pick = rng.next_below(pool.size());
        std::string cat = nouns[pool[pick]];
        pool.erase(pool.begin() + pick);
        int count = (target - placed >= 2 && rng.next_u01() < 0.35) ? 2 : 1;
        RequiredEntry entry{cat, {}, count};
        if (rng.next_u01() < 0.6) entry.attrs.color = colors[rng.next_below(colors.size())];
        out.spec.required.push_back(entry);
        placed += count;
    }
    int n = int(out.spec.required.size());
    if (n >= 2) {
        static const RelationKind kinds[] = {RelationKind::left_of, RelationKind::right_of,
                                             RelationKind::above, RelationKind::below,
                                             RelationKind::next_to};
        int rels = int(rng.next_below(3));
        std::set<std::pair<int, int>> used;
        for (int r = 0; r < rels; ++r) {
            int obj = int(rng.next_below(n - 1));
            int sub = obj + 1 + int(rng.next_below(n - obj - 1));
            if (!used.insert({sub, obj}).second) continue;
            RelationKind kind = kinds[rng.next_below(5)];
            if (kind == RelationKind::next_to && (out.spec.required[obj].count != 1 ||
                                                  out.spec.required[sub].count != 1))
                kind = RelationKind::left_of;
            out.spec.relations.push_back(
                {kind,
                 {out.spec.required[sub].category, out.spec.required[sub].attrs, std::nullopt},
                 {out.spec.required[obj].category, out.spec.required[obj].attrs, std::nullopt}});
        }
    }
    if (rng.next_u01() < 0.4) out.spec.background.insert(scenes[rng.next_below(scenes.size())]);
    out.spec.forbid_extraneous = rng.next_u01() < 0.5;

    // A messy starting graph: some required objects (possibly wrong color,
    // wrong place), plus the occasional stray.
    int id_counter = 0;
    auto roomy_bbox = [&]() {
        double w = 0.06 + 0.12 * rng.next_u01();
        double h = 0.06 + 0.12 * rng.next_u01();
        double cx = 0.15 + 0.7 * rng.next_u01();
        double cy = 0.18 + 0.64 * rng.next_u01();
        return clamp_bbox({cx - w / 2, cy - h / 2, w, h});
    };
    for (auto& entry : out.spec.required) {
        for (int u = 0; u < entry.count; ++u) {
            double dice = rng.next_u01();
            if (dice < 0.3) continue;  // missing
            SceneObject obj;
            obj.id = "obj" + std::to_string(id_counter++);
            obj.category = entry.category;
            obj.bbox = roomy_bbox();
            if (entry.attrs.color) {
                if (dice < 0.6)
                    obj.attrs.color = entry.attrs.color;  // correct
                else if (dice < 0.85)
                    obj.attrs.color = colors[rng.next_below(colors.size())];
                // else unspecified
            }
            out.graph.objects.push_back(obj);
        }
    }
    if (rng.next_u01() < 0.4) {
        SceneObject stray;
        stray.id = "obj" + std::to_string(id_counter++);
        stray.category = "lamp";
        stray.bbox = roomy_bbox();
        out.graph.objects.push_back(stray);
    }
    if (rng.next_u01() < 0.5)
        for (auto& t : out.spec.background)
            if (rng.next_u01() < 0.5) out.graph.background.insert(t);
    return out;
}

// Apply corrections with failure-free tools. Returns the final score.
inline double apply_corrections_perfectly(const ClosureCase& c, uint64_t seed) {
    Decomposer dec;
    WorldConfig world;
    world.seed = seed;
    world.default_p_success = 1.0;
    world.p_obj = 1.0;
    world.p_attr = 1.0;

    SceneGraph state = c.graph;
    auto edits = dec.discrepancies_to_edits(diff(state, c.spec), c.spec, state);
    int node = 0;
    for (auto& e : edits) {
        json inputs;
        std::string id = "closure." + std::to_string(node++);
        auto bind_target = [&]() {
            auto idx = resolve_selector(state, *e.target);
            if (idx.empty()) return false;
            inputs["object_name"] = render_selector(*e.target);
            inputs["object_bbox"] = json(state.objects[idx[0]].bbox);
            return true;
        };
        switch (e.action) {
            case EditAction::add:
                inputs["object_name"] = render_selector({e.category, e.attrs, std::nullopt});
                inputs["object_bbox"] =
                    e.dest_bbox ? json(*e.dest_bbox) : json::array({0.44, 0.44, 0.12, 0.12});
                state = apply_tool(Skill::add, inputs, state, id, world);
                break;
            case EditAction::remove:
                if (!bind_target()) return -1;
                state = apply_tool(Skill::remove, inputs, state, id, world);
                break;
            case EditAction::edit_attribute:
                if (!bind_target()) return -1;
                inputs["attribute"] = e.attribute;
                inputs["value"] = e.value;
                state = apply_tool(Skill::edit_attribute, inputs, state, id, world);
                break;
            case EditAction::move:
                if (!bind_target()) return -1;
                if (!e.dest_bbox) return -1;
                inputs["target_bbox"] = json(*e.dest_bbox);
                state = apply_tool(Skill::drag_object, inputs, state, id, world);
                break;
            case EditAction::style:
                inputs["style"] = e.style;
                state = apply_tool(Skill::style_transfer, inputs, state, id, world);
                break;
            default:
                return -1;
        }
    }
    return spec_score(state, c.spec);
}

}  // namespace genorch::testing
