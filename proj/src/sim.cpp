#include "genorch/sim.hpp"

#include <algorithm>
#include <cmath>

#include "genorch/decompose.hpp"
#include "genorch/rng.hpp"

namespace genorch {

std::string to_string(FailureMode m) {
    switch (m) {
        case FailureMode::noop: return "noop";
        case FailureMode::wrong_attribute: return "wrong_attribute";
        case FailureMode::collateral: return "collateral";
        case FailureMode::shrink: return "shrink";
        case FailureMode::misplace: return "misplace";
    }
    return "noop";
}

FailureMode failure_mode_from_string(const std::string& s) {
    if (s == "noop") return FailureMode::noop;
    if (s == "wrong_attribute") return FailureMode::wrong_attribute;
    if (s == "collateral") return FailureMode::collateral;
    if (s == "shrink") return FailureMode::shrink;
    if (s == "misplace") return FailureMode::misplace;
    throw ConfigError("unknown failure mode: " + s);
}

namespace {

struct Outcome {
    bool success = true;
    FailureMode mode = FailureMode::noop;
    std::optional<SceneGraph> fixture;
};

Outcome draw_outcome(Skill skill, const std::string& node_id, const WorldConfig& cfg, Rng& rng) {
    if (cfg.mode == WorldConfig::Mode::scripted) {
        auto it = cfg.script.find(node_id);
        if (it == cfg.script.end()) return {true, FailureMode::noop, std::nullopt};
        switch (it->second.kind) {
            case ScriptOutcome::Kind::success: return {true, FailureMode::noop, std::nullopt};
            case ScriptOutcome::Kind::failure: return {false, it->second.mode, std::nullopt};
            case ScriptOutcome::Kind::fixture:
                return {true, FailureMode::noop, it->second.state};
        }
    }
    double u = rng.next_u01();
    if (u < cfg.success_probability(skill)) return {true, FailureMode::noop, std::nullopt};
    double pick = rng.next_u01();
    double acc = 0;
    // Fixed draw order keeps replays stable.
    for (FailureMode m : {FailureMode::noop, FailureMode::wrong_attribute, FailureMode::collateral,
                          FailureMode::shrink, FailureMode::misplace}) {
        auto it = cfg.failure_weights.find(m);
        acc += it == cfg.failure_weights.end() ? 0.0 : it->second;
        if (pick < acc) return {false, m, std::nullopt};
    }
    return {false, FailureMode::misplace, std::nullopt};
}

std::string require_string(const json& inputs, const std::string& key) {
    auto it = inputs.find(key);
    if (it == inputs.end() || !it->is_string() || it->get<std::string>() == kMissingMarker)
        throw UnboundInput("input '" + key + "' is missing or unbound");
    return it->get<std::string>();
}

BBox require_bbox(const json& inputs, const std::string& key) {
    auto it = inputs.find(key);
    if (it == inputs.end() || !it->is_array() || it->size() != 4)
        throw UnboundInput("input '" + key + "' is missing or not a bbox");
    return clamp_bbox({(*it)[0].get<double>(), (*it)[1].get<double>(), (*it)[2].get<double>(),
                       (*it)[3].get<double>()});
}

ObjectSelector parse_phrase_selector(const std::string& phrase, const Vocab& vocab) {
    ObjectSelector sel;
    for (auto& word : split_words(lowercase(phrase))) {
        if (word == "the" || word == "a" || word == "an" || word == ",") continue;
        if (auto kind = vocab.attribute_kind(word)) {
            sel.attrs.set(*kind, word);
        } else {
            sel.category = singularize(word);
        }
    }
    return sel;
}

// Category + attribute match, closest bbox wins.
SceneObject* resolve_target(SceneGraph& g, const ObjectSelector& sel,
                            const std::optional<BBox>& near) {
    SceneObject* best = nullptr;
    double best_key = -1;
    for (auto& o : g.objects) {
        if (!sel.matches(o)) continue;
        double key = near ? bbox_iou(o.bbox, *near) : 0.0;
        if (!best || key > best_key) {
            best = &o;
            best_key = key;
        }
    }
    return best;
}

std::string wrong_value(const Vocab& vocab, const std::string& attr_kind,
                        const std::string& current, Rng& rng) {
    std::vector<std::string> pool;
    for (auto& v : vocab.values_for(attr_kind))
        if (v != current) pool.push_back(v);
    if (pool.empty()) return current;
    return pool[rng.next_below(pool.size())];
}

void corrupt(SceneGraph& g, const std::string& target_id, FailureMode mode,
             const WorldConfig& cfg, Rng& rng) {
    SceneObject* target = g.find(target_id);
    switch (mode) {
        case FailureMode::noop:
            break;  // handled by caller
        case FailureMode::wrong_attribute: {
            if (!target) break;
            const char* kinds[] = {"color", "shape", "texture"};
            std::string kind = kinds[rng.next_below(3)];
            auto cur = target->attrs.get(kind);
            target->attrs.set(kind, wrong_value(cfg.vocab, kind, cur.value_or(""), rng));
            break;
        }
        case FailureMode::collateral: {
            std::vector<SceneObject*> bystanders;
            for (auto& o : g.objects)
                if (o.id != target_id) bystanders.push_back(&o);
            if (bystanders.empty()) break;
            SceneObject* victim = bystanders[rng.next_below(bystanders.size())];
            victim->bbox = clamp_bbox({victim->bbox.x + 0.1, victim->bbox.y, victim->bbox.w,
                                       victim->bbox.h});
            break;
        }
        case FailureMode::shrink: {
            if (!target) break;
            double s = std::sqrt(0.1);  // area x0.1
            target->bbox = clamp_bbox({target->bbox.x, target->bbox.y,
                                       std::max(0.01, target->bbox.w * s),
                                       std::max(0.01, target->bbox.h * s)});
            break;
        }
        case FailureMode::misplace: {
            if (!target) break;
            target->bbox = clamp_bbox({rng.next_range(0, 1 - target->bbox.w),
                                       rng.next_range(0, 1 - target->bbox.h), target->bbox.w,
                                       target->bbox.h});
            break;
        }
    }
}

// Instantiate a spec as a fresh scene. Presence, attribute fidelity and
// position handling differ per skill class.
SceneGraph instantiate_spec(const SceneSpec& spec, const json& inputs, Skill skill,
                            const WorldConfig& cfg, Rng& rng) {
    SceneGraph g;
    bool exact_layout = skill == Skill::layout_to_image;
    bool guarantee_text = skill == Skill::text_rendering;

    std::map<std::pair<int, int>, BBox> layout_boxes;
    if (exact_layout) {
        auto it = inputs.find("layout");
        if (it == inputs.end() || !it->is_array())
            throw UnboundInput("layout_to_image requires a bound layout");
        for (auto& item : *it)
            layout_boxes[{item["entry"].get<int>(), item["unit"].get<int>()}] =
                clamp_bbox({item["bbox"][0].get<double>(), item["bbox"][1].get<double>(),
                            item["bbox"][2].get<double>(), item["bbox"][3].get<double>()});
    }

    int obj_counter = 0;
    for (int e = 0; e < int(spec.required.size()); ++e) {
        const RequiredEntry& entry = spec.required[e];
        for (int u = 0; u < entry.count; ++u) {
            bool present = exact_layout || rng.next_u01() < cfg.p_obj;
            if (!present) {
                // burn the draws the object would have used, so presence of
                // one object never shifts another's attributes
                rng.next_u01();
                rng.next_u01();
                continue;
            }
            SceneObject obj;
            obj.id = "obj" + std::to_string(obj_counter++);
            obj.category = entry.category;
            BBox box;
            if (exact_layout && layout_boxes.count({e, u})) {
                box = layout_boxes[{e, u}];
                rng.next_u01();
                rng.next_u01();  // keep draw count uniform across skills
            } else {
                double w = 0.1 + 0.1 * rng.next_u01();
                double h = 0.1 + 0.1 * rng.next_u01();
                box = clamp_bbox({rng.next_range(0, 1 - w), rng.next_range(0, 1 - h), w, h});
            }
            obj.bbox = box;
            for (const char* kind : {"color", "shape", "texture"}) {
                auto wanted = entry.attrs.get(kind);
                if (!wanted) continue;
                if (rng.next_u01() < cfg.p_attr)
                    obj.attrs.set(kind, *wanted);
                else
                    obj.attrs.set(kind, wrong_value(cfg.vocab, kind, *wanted, rng));
            }
            g.objects.push_back(obj);
        }
    }
    for (auto& token : spec.background) {
        bool is_text = token.rfind("render_text:", 0) == 0;
        if ((guarantee_text && is_text) || rng.next_u01() < cfg.p_attr)
            g.background.insert(token);
    }
    return g;
}

void apply_edit_semantics(SceneGraph& g, const AtomicEdit& edit, const json& inputs,
                          const WorldConfig& cfg, Rng& rng, std::string& target_id);

// instruction_edit re-parses the rendered instruction; an unparseable or
// ambiguous instruction leaves the image unchanged, like a model that did
// not understand the request.
void apply_instruction(SceneGraph& g, const std::string& text, const WorldConfig& cfg, Rng& rng,
                       std::string& target_id) {
    Decomposer dec(cfg.vocab);
    std::vector<AtomicEdit> edits;
    try {
        edits = dec.decompose_editing({text, TaskKind::editing, {}});
    } catch (const ParseError&) {
        return;
    }
    if (edits.size() != 1 || edits[0].action == EditAction::instruction_passthrough) return;
    json no_inputs = json::object();
    apply_edit_semantics(g, edits[0], no_inputs, cfg, rng, target_id);
}

void apply_edit_semantics(SceneGraph& g, const AtomicEdit& edit, const json& inputs,
                          const WorldConfig& cfg, Rng& rng, std::string& target_id) {
    auto near_box = [&]() -> std::optional<BBox> {
        if (inputs.contains("object_bbox") && inputs["object_bbox"].is_array())
            return require_bbox(inputs, "object_bbox");
        return std::nullopt;
    };
    switch (edit.action) {
        case EditAction::add: {
            SceneObject obj;
            obj.id = g.fresh_id();
            obj.category = edit.category;
            obj.attrs = edit.attrs;
            if (inputs.contains("object_bbox") && inputs["object_bbox"].is_array())
                obj.bbox = require_bbox(inputs, "object_bbox");
            else if (edit.dest_bbox)
                obj.bbox = clamp_bbox(*edit.dest_bbox);
            else {
                double w = 0.12, h = 0.12;
                obj.bbox = clamp_bbox({rng.next_range(0, 1 - w), rng.next_range(0, 1 - h), w, h});
            }
            target_id = obj.id;
            g.objects.push_back(obj);
            break;
        }
        case EditAction::remove: {
            SceneObject* t = resolve_target(g, *edit.target, near_box());
            if (!t) break;
            target_id = t->id;
            std::erase_if(g.objects, [&](const SceneObject& o) { return o.id == target_id; });
            break;
        }
        case EditAction::replace: {
            SceneObject* t = resolve_target(g, *edit.target, near_box());
            if (!t) break;
            BBox where = t->bbox;
            std::string old_id = t->id;
            std::erase_if(g.objects, [&](const SceneObject& o) { return o.id == old_id; });
            SceneObject obj;
            obj.id = g.fresh_id();
            obj.category = edit.category;
            obj.attrs = edit.attrs;
            obj.bbox = where;
            target_id = obj.id;
            g.objects.push_back(obj);
            break;
        }
        case EditAction::edit_attribute: {
            SceneObject* t = resolve_target(g, *edit.target, near_box());
            if (!t) break;
            target_id = t->id;
            t->attrs.set(edit.attribute, edit.value);
            break;
        }
        case EditAction::move: {
            SceneObject* t = resolve_target(g, *edit.target, near_box());
            if (!t) break;
            target_id = t->id;
            if (inputs.contains("target_bbox") && inputs["target_bbox"].is_array())
                t->bbox = require_bbox(inputs, "target_bbox");
            else if (edit.dest_bbox)
                t->bbox = clamp_bbox(*edit.dest_bbox);
            break;
        }
        case EditAction::style:
            g.background.insert(edit.style);
            break;
        case EditAction::instruction_passthrough:
            apply_instruction(g, edit.raw_text, cfg, rng, target_id);
            break;
    }
}

bool is_generation(Skill s) {
    switch (s) {
        case Skill::text_to_image:
        case Skill::layout_to_image:
        case Skill::image_to_image:
        case Skill::customization_single:
        case Skill::customization_multi:
        case Skill::text_rendering:
        case Skill::condition_to_image:
            return true;
        default:
            return false;
    }
}

}  // namespace

SceneGraph apply_tool(Skill skill, const json& inputs, const SceneGraph& state,
                      const std::string& node_id, const WorldConfig& cfg,
                      const std::string& tool_name) {
    for (auto& [key, value] : inputs.items()) {
        (void)key;
        if (value.is_string() && value.get<std::string>() == kMissingMarker)
            throw UnboundInput("input '" + key + "' is unbound");
    }

    Rng rng(cfg.seed, node_id);
    Outcome outcome = draw_outcome(skill, node_id, cfg, rng);
    std::string provenance_tool = tool_name.empty() ? to_string(skill) : tool_name;

    if (outcome.fixture) {
        SceneGraph g = *outcome.fixture;
        g.provenance = state.provenance;
        g.provenance.push_back({node_id, provenance_tool});
        return g;
    }

    if (is_generation(skill)) {
        SceneSpec spec;
        try {
            spec = Decomposer(cfg.vocab).decompose_generation(require_string(inputs, "text"));
        } catch (const ParseError&) {
            // Unintelligible prompt: the model produces an unrelated image.
        }
        if (!outcome.success && outcome.mode == FailureMode::noop) {
            SceneGraph g;  // generation noop = nothing relevant on canvas
            g.provenance = state.provenance;
            g.provenance.push_back({node_id, provenance_tool});
            return g;
        }
        SceneGraph g = instantiate_spec(spec, inputs, skill, cfg, rng);
        if (!outcome.success && !g.objects.empty()) {
            const std::string victim = g.objects[rng.next_below(g.objects.size())].id;
            corrupt(g, victim, outcome.mode, cfg, rng);
        }
        g.provenance = state.provenance;
        g.provenance.push_back({node_id, provenance_tool});
        return g;
    }

    // Editing skills.
    if (!outcome.success && outcome.mode == FailureMode::noop) return state;
    if (skill == Skill::super_resolution) return state;  // invisible at desk scale

    SceneGraph g = state;
    std::string target_id;
    AtomicEdit edit;
    switch (skill) {
        case Skill::add:
            edit.action = EditAction::add;
            {
                auto sel = parse_phrase_selector(require_string(inputs, "object_name"), cfg.vocab);
                edit.category = sel.category;
                edit.attrs = sel.attrs;
            }
            break;
        case Skill::remove:
            edit.action = EditAction::remove;
            edit.target = parse_phrase_selector(require_string(inputs, "object_name"), cfg.vocab);
            break;
        case Skill::replace: {
            edit.action = EditAction::replace;
            edit.target = parse_phrase_selector(require_string(inputs, "object_name"), cfg.vocab);
            auto repl = parse_phrase_selector(require_string(inputs, "replacement"), cfg.vocab);
            edit.category = repl.category;
            edit.attrs = repl.attrs;
            break;
        }
        case Skill::edit_attribute:
            edit.action = EditAction::edit_attribute;
            edit.target = parse_phrase_selector(require_string(inputs, "object_name"), cfg.vocab);
            edit.attribute = require_string(inputs, "attribute");
            edit.value = require_string(inputs, "value");
            break;
        case Skill::drag_object:
        case Skill::drag_detail:
            edit.action = EditAction::move;
            edit.target = parse_phrase_selector(require_string(inputs, "object_name"), cfg.vocab);
            break;
        case Skill::style_transfer:
            edit.action = EditAction::style;
            edit.style = require_string(inputs, "style");
            break;
        case Skill::instruction_edit:
            edit.action = EditAction::instruction_passthrough;
            edit.raw_text = require_string(inputs, "instruction");
            break;
        default:
            return state;
    }
    apply_edit_semantics(g, edit, inputs, cfg, rng, target_id);
    if (g == state) return state;  // nothing happened; keep snapshot identity

    if (!outcome.success) corrupt(g, target_id, outcome.mode, cfg, rng);
    g.provenance.push_back({node_id, provenance_tool});
    return g;
}

double action_failure_rate(Skill skill, int k_alternates, const WorldConfig& cfg, int trials) {
    int all_failed = 0;
    for (int t = 0; t < trials; ++t) {
        bool any_success = false;
        for (int a = 0; a < k_alternates && !any_success; ++a) {
            Rng rng(cfg.seed, "mc." + std::to_string(t) + "." + std::to_string(a));
            any_success = rng.next_u01() < cfg.success_probability(skill);
        }
        if (!any_success) ++all_failed;
    }
    return double(all_failed) / double(trials);
}

}  // namespace genorch
