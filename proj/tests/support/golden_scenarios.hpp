#pragma once

// The two committed end-to-end scenarios. Both run the full job pipeline
// against a scripted world and replay byte-identically.

#include "genorch/json_io.hpp"
#include "genorch/orchestrate.hpp"

namespace genorch::testing {

// Generation succeeds partially (only a red scooter appears); the
// correction chain recolors the scooter and adds the two missing objects.
inline JobRequest correction_scenario_request() {
    JobRequest req;
    req.instruction.text = "a black bicycle and a blue scooter and a bird";

    json cfg;
    cfg["seed"] = 7;
    cfg["planning_mode"] = "tree";
    cfg["budget"] = {{"max_nodes", 32}, {"max_branching", 2}};
    SceneGraph partial;
    SceneObject scooter;
    scooter.id = "obj0";
    scooter.category = "scooter";
    scooter.attrs.color = "red";
    scooter.bbox = {0.4, 0.4, 0.2, 0.2};
    partial.objects.push_back(scooter);
    cfg["world"] = {{"mode", "scripted"},
                    {"script", {{"root.0", {{"outcome", "fixture"}, {"state", partial}}}}}};
    req.config = config_from_json(cfg);
    return req;
}

// The attribute edit fails, the replacement comes out too small, and the
// remove+add fallback finally recolors the sheep; the goat lands on the
// right afterwards.
inline JobRequest sheep_fallback_scenario_request() {
    JobRequest req;
    req.instruction.text =
        "two white sheep and a goat; the goat is right_of the sheep; grassland";

    json cfg;
    cfg["seed"] = 11;
    cfg["planning_mode"] = "tree";
    cfg["composite_fallback"] = true;
    cfg["budget"] = {{"max_nodes", 32}, {"max_branching", 3}};

    SceneGraph partial;
    SceneObject black, white;
    black.id = "obj0";
    black.category = "sheep";
    black.attrs.color = "black";
    black.bbox = {0.15, 0.45, 0.16, 0.16};
    white.id = "obj1";
    white.category = "sheep";
    white.attrs.color = "white";
    white.bbox = {0.45, 0.45, 0.16, 0.16};
    partial.objects = {black, white};
    partial.background = {"grassland"};

    cfg["world"] = {
        {"mode", "scripted"},
        {"script",
         {{"root.0", {{"outcome", "fixture"}, {"state", partial}}},
          {"root.0.0", {{"outcome", "failure"}, {"mode", "noop"}}},
          {"root.0.1", {{"outcome", "failure"}, {"mode", "shrink"}}}}}};
    req.config = config_from_json(cfg);
    return req;
}

}  // namespace genorch::testing
