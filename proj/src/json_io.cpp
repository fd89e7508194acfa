#include "genorch/json_io.hpp"

namespace genorch {

void to_json(json& j, const BBox& b) { j = json::array({b.x, b.y, b.w, b.h}); }

void from_json(const json& j, BBox& b) {
    if (!j.is_array() || j.size() != 4) throw ConfigError("bbox must be [x, y, w, h]");
    b = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

void to_json(json& j, const AttributeSet& a) {
    j = json::object();
    if (a.color) j["color"] = *a.color;
    if (a.shape) j["shape"] = *a.shape;
    if (a.texture) j["texture"] = *a.texture;
}

void from_json(const json& j, AttributeSet& a) {
    a = {};
    if (j.contains("color")) a.color = j["color"].get<std::string>();
    if (j.contains("shape")) a.shape = j["shape"].get<std::string>();
    if (j.contains("texture")) a.texture = j["texture"].get<std::string>();
}

void to_json(json& j, const SceneObject& o) {
    j = json{{"id", o.id}, {"category", o.category}, {"attrs", o.attrs}, {"bbox", o.bbox}};
}

void from_json(const json& j, SceneObject& o) {
    o.id = j.at("id").get<std::string>();
    o.category = j.at("category").get<std::string>();
    o.attrs = j.value("attrs", json::object()).get<AttributeSet>();
    from_json(j.at("bbox"), o.bbox);
}

void to_json(json& j, const SceneGraph& g) {
    j = json::object();
    j["objects"] = g.objects;
    j["background"] = g.background;
    json prov = json::array();
    for (auto& [node, tool] : g.provenance) prov.push_back(json::array({node, tool}));
    j["provenance"] = prov;
}

void from_json(const json& j, SceneGraph& g) {
    g = {};
    for (auto& o : j.value("objects", json::array())) g.objects.push_back(o.get<SceneObject>());
    for (auto& b : j.value("background", json::array())) g.background.insert(b.get<std::string>());
    for (auto& p : j.value("provenance", json::array()))
        g.provenance.push_back({p[0].get<std::string>(), p[1].get<std::string>()});
}

void to_json(json& j, const ObjectSelector& s) {
    j = json{{"category", s.category}, {"attrs", s.attrs}};
    if (s.anchor_id) j["anchor"] = *s.anchor_id;
}

void from_json(const json& j, ObjectSelector& s) {
    s.category = j.at("category").get<std::string>();
    s.attrs = j.value("attrs", json::object()).get<AttributeSet>();
    if (j.contains("anchor")) s.anchor_id = j["anchor"].get<std::string>();
}

void to_json(json& j, const Relation& r) {
    j = json{{"kind", to_string(r.kind)}, {"subject", r.subject}, {"object", r.object}};
}

void from_json(const json& j, Relation& r) {
    r.kind = relation_kind_from_string(j.at("kind").get<std::string>());
    from_json(j.at("subject"), r.subject);
    from_json(j.at("object"), r.object);
}

void to_json(json& j, const RequiredEntry& e) {
    j = json{{"category", e.category}, {"attrs", e.attrs}, {"count", e.count}};
}

void from_json(const json& j, RequiredEntry& e) {
    e.category = j.at("category").get<std::string>();
    e.attrs = j.value("attrs", json::object()).get<AttributeSet>();
    e.count = j.value("count", 1);
}

void to_json(json& j, const SceneSpec& s) {
    j = json{{"required", s.required},
             {"relations", s.relations},
             {"background", s.background},
             {"forbid_extraneous", s.forbid_extraneous}};
}

void from_json(const json& j, SceneSpec& s) {
    s = {};
    for (auto& e : j.value("required", json::array())) s.required.push_back(e.get<RequiredEntry>());
    for (auto& r : j.value("relations", json::array())) s.relations.push_back(r.get<Relation>());
    for (auto& b : j.value("background", json::array())) s.background.insert(b.get<std::string>());
    s.forbid_extraneous = j.value("forbid_extraneous", false);
}

void to_json(json& j, const DiscrepancyReport& r) {
    json missing = json::array();
    for (auto& m : r.missing)
        missing.push_back(json{{"category", m.category}, {"attrs", m.attrs}, {"deficit", m.deficit}});
    json wrong = json::array();
    for (auto& w : r.wrong_attribute)
        wrong.push_back(json{{"object", w.object_id},
                             {"attribute", w.attribute},
                             {"found", w.found},
                             {"wanted", w.wanted}});
    j = json{{"missing", missing},
             {"wrong_attribute", wrong},
             {"relation_violations", r.relation_violations},
             {"extraneous", r.extraneous},
             {"background_mismatch", r.background_mismatch},
             {"score", r.score},
             {"satisfied", r.satisfied},
             {"total", r.total}};
}

void to_json(json& j, const RelationHint& h) {
    j = json{{"kind", to_string(h.kind)}, {"ref", h.ref}};
}

void from_json(const json& j, RelationHint& h) {
    h.kind = relation_kind_from_string(j.at("kind").get<std::string>());
    from_json(j.at("ref"), h.ref);
}

void to_json(json& j, const AtomicEdit& e) {
    j = json::object();
    j["action"] = to_string(e.action);
    if (e.target) j["target"] = *e.target;
    if (!e.category.empty()) j["category"] = e.category;
    if (!e.attrs.empty()) j["attrs"] = e.attrs;
    if (!e.attribute.empty()) j["attribute"] = e.attribute;
    if (!e.value.empty()) j["value"] = e.value;
    if (e.dest_bbox) j["dest_bbox"] = *e.dest_bbox;
    if (!e.placement.empty()) j["placement"] = e.placement;
    if (!e.style.empty()) j["style"] = e.style;
    if (!e.raw_text.empty()) j["text"] = e.raw_text;
}

void from_json(const json& j, AtomicEdit& e) {
    e = {};
    e.action = edit_action_from_string(j.at("action").get<std::string>());
    if (j.contains("target")) e.target = j["target"].get<ObjectSelector>();
    e.category = j.value("category", "");
    if (j.contains("attrs")) e.attrs = j["attrs"].get<AttributeSet>();
    e.attribute = j.value("attribute", "");
    e.value = j.value("value", "");
    if (j.contains("dest_bbox")) {
        BBox b;
        from_json(j["dest_bbox"], b);
        e.dest_bbox = b;
    }
    for (auto& h : j.value("placement", json::array()))
        e.placement.push_back(h.get<RelationHint>());
    e.style = j.value("style", "");
    e.raw_text = j.value("text", "");
}

void to_json(json& j, const InputSlot& s) {
    j = json{{"name", s.name}, {"kind", to_string(s.kind)}};
}

void from_json(const json& j, InputSlot& s) {
    s.name = j.at("name").get<std::string>();
    s.kind = slot_kind_from_string(j.at("kind").get<std::string>());
}

void to_json(json& j, const ToolDescriptor& t) {
    j = json{{"skill", to_string(t.skill)},
             {"name", t.name},
             {"required_inputs", t.required_inputs},
             {"characteristics", t.characteristics},
             {"cost", t.cost}};
    if (!t.condition_kind.empty()) j["condition_kind"] = t.condition_kind;
}

void from_json(const json& j, ToolDescriptor& t) {
    t.skill = skill_from_string(j.at("skill").get<std::string>());
    t.name = j.at("name").get<std::string>();
    t.required_inputs.clear();
    for (auto& s : j.value("required_inputs", json::array()))
        t.required_inputs.push_back(s.get<InputSlot>());
    t.characteristics = j.value("characteristics", "");
    t.cost = j.value("cost", 0.0);
    t.condition_kind = j.value("condition_kind", "");
}

void to_json(json& j, const Verdict& v) {
    json aspects = json::object();
    for (auto& [k, ok] : v.aspects) aspects[k] = ok;
    j = json{{"pass", v.pass}, {"score", v.score}, {"aspects", aspects}, {"report", v.report}};
}

void from_json(const json& j, Verdict& v) {
    v = {};
    v.pass = j.at("pass").get<bool>();
    v.score = j.at("score").get<double>();
    if (j.contains("aspects"))
        for (auto& [k, val] : j["aspects"].items()) v.aspects[k] = val.get<bool>();
    if (j.contains("report")) {
        auto& r = j["report"];
        v.report.score = r.value("score", v.score);
        v.report.satisfied = r.value("satisfied", 0);
        v.report.total = r.value("total", 0);
        for (auto& m : r.value("missing", json::array()))
            v.report.missing.push_back({m.at("category").get<std::string>(),
                                        m.value("attrs", json::object()).get<AttributeSet>(),
                                        m.value("deficit", 1)});
        for (auto& w : r.value("wrong_attribute", json::array()))
            v.report.wrong_attribute.push_back({w.at("object").get<std::string>(),
                                                w.at("attribute").get<std::string>(),
                                                w.value("found", ""), w.value("wanted", "")});
        for (auto& rel : r.value("relation_violations", json::array()))
            v.report.relation_violations.push_back(rel.get<Relation>());
        for (auto& x : r.value("extraneous", json::array()))
            v.report.extraneous.push_back(x.get<std::string>());
        for (auto& b : r.value("background_mismatch", json::array()))
            v.report.background_mismatch.insert(b.get<std::string>());
    }
}

void to_json(json& j, const Detection& d) {
    j = json{{"name", d.name}, {"bbox", d.bbox}, {"confidence", d.confidence}};
}

void from_json(const json& j, Detection& d) {
    d.name = j.at("name").get<std::string>();
    from_json(j.at("bbox"), d.bbox);
    d.confidence = j.value("confidence", 1.0);
}

void to_json(json& j, const Vocab& v) {
    j = json{{"colors", v.colors}, {"shapes", v.shapes}, {"textures", v.textures}};
}

void from_json(const json& j, Vocab& v) {
    auto load = [&](const char* key, std::set<std::string>& out) {
        if (!j.contains(key)) return;
        out.clear();
        for (auto& t : j[key]) out.insert(t.get<std::string>());
    };
    load("colors", v.colors);
    load("shapes", v.shapes);
    load("textures", v.textures);
}

void to_json(json& j, const Thresholds& t) {
    j = json{{"next_to_distance", t.next_to_distance},
             {"on_epsilon", t.on_epsilon},
             {"bbox_drift_tolerance", t.bbox_drift_tolerance},
             {"target_drift_tolerance", t.target_drift_tolerance},
             {"min_object_area", t.min_object_area}};
}

void from_json(const json& j, Thresholds& t) {
    t.next_to_distance = j.value("next_to_distance", t.next_to_distance);
    t.on_epsilon = j.value("on_epsilon", t.on_epsilon);
    t.bbox_drift_tolerance = j.value("bbox_drift_tolerance", t.bbox_drift_tolerance);
    t.target_drift_tolerance = j.value("target_drift_tolerance", t.target_drift_tolerance);
    t.min_object_area = j.value("min_object_area", t.min_object_area);
}

void to_json(json& j, const WorldConfig& w) {
    j = json::object();
    j["seed"] = w.seed;
    j["mode"] = w.mode == WorldConfig::Mode::stochastic ? "stochastic" : "scripted";
    j["default_p_success"] = w.default_p_success;
    j["p_success"] = w.p_success;
    json weights = json::object();
    for (auto& [m, p] : w.failure_weights) weights[to_string(m)] = p;
    j["failure_weights"] = weights;
    j["p_obj"] = w.p_obj;
    j["p_attr"] = w.p_attr;
    if (!w.script.empty()) {
        json script = json::object();
        for (auto& [node, outcome] : w.script) {
            json o;
            switch (outcome.kind) {
                case ScriptOutcome::Kind::success: o["outcome"] = "success"; break;
                case ScriptOutcome::Kind::failure:
                    o["outcome"] = "failure";
                    o["mode"] = to_string(outcome.mode);
                    break;
                case ScriptOutcome::Kind::fixture:
                    o["outcome"] = "fixture";
                    o["state"] = outcome.state;
                    break;
            }
            script[node] = o;
        }
        j["script"] = script;
    }
}

void from_json(const json& j, WorldConfig& w) {
    w.seed = j.value("seed", uint64_t(0));
    std::string mode = j.value("mode", "stochastic");
    if (mode != "stochastic" && mode != "scripted")
        throw ConfigError("world mode must be stochastic or scripted");
    w.mode = mode == "scripted" ? WorldConfig::Mode::scripted : WorldConfig::Mode::stochastic;
    w.default_p_success = j.value("default_p_success", 1.0);
    if (w.default_p_success < 0 || w.default_p_success > 1)
        throw ConfigError("default_p_success must be in [0, 1]");
    w.p_success.clear();
    const json p_success = j.value("p_success", json::object());
    for (auto& [skill, p] : p_success.items()) {
        double v = p.get<double>();
        if (v < 0 || v > 1) throw ConfigError("p_success out of range for " + skill);
        skill_from_string(skill);  // validates the key
        w.p_success[skill] = v;
    }
    if (j.contains("failure_weights")) {
        w.failure_weights.clear();
        double sum = 0;
        for (auto& [m, p] : j["failure_weights"].items()) {
            w.failure_weights[failure_mode_from_string(m)] = p.get<double>();
            sum += p.get<double>();
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("failure weights must sum to 1");
    }
    w.p_obj = j.value("p_obj", w.p_obj);
    w.p_attr = j.value("p_attr", w.p_attr);
    w.script.clear();
    const json script = j.value("script", json::object());
    for (auto& [node, o] : script.items()) {
        ScriptOutcome out;
        std::string kind = o.value("outcome", "success");
        if (kind == "success") {
            out.kind = ScriptOutcome::Kind::success;
        } else if (kind == "failure") {
            out.kind = ScriptOutcome::Kind::failure;
            out.mode = failure_mode_from_string(o.value("mode", "noop"));
        } else if (kind == "fixture") {
            out.kind = ScriptOutcome::Kind::fixture;
            from_json(o.at("state"), out.state);
        } else {
            throw ConfigError("unknown script outcome: " + kind);
        }
        w.script[node] = out;
    }
}

}  // namespace genorch
