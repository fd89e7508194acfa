#include "genorch/scene.hpp"

#include <algorithm>
#include <cmath>

namespace genorch {

BBox clamp_bbox(BBox b, double min_side) {
    b.w = std::clamp(b.w, min_side, 1.0);
    b.h = std::clamp(b.h, min_side, 1.0);
    b.x = std::clamp(b.x, 0.0, 1.0 - b.w);
    b.y = std::clamp(b.y, 0.0, 1.0 - b.h);
    return b;
}

double bbox_iou(const BBox& a, const BBox& b) {
    double ix = std::max(0.0, std::min(a.right(), b.right()) - std::max(a.x, b.x));
    double iy = std::max(0.0, std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y));
    double inter = ix * iy;
    double uni = a.area() + b.area() - inter;
    return uni <= 0 ? 0.0 : inter / uni;
}

std::optional<std::string> AttributeSet::get(const std::string& name) const {
    if (name == "color") return color;
    if (name == "shape") return shape;
    if (name == "texture") return texture;
    return std::nullopt;
}

void AttributeSet::set(const std::string& name, const std::string& value) {
    if (name == "color")
        color = value;
    else if (name == "shape")
        shape = value;
    else if (name == "texture")
        texture = value;
}

void AttributeSet::unset(const std::string& name) {
    if (name == "color")
        color.reset();
    else if (name == "shape")
        shape.reset();
    else if (name == "texture")
        texture.reset();
}

bool AttributeSet::satisfied_by(const AttributeSet& other) const {
    if (color && other.color != color) return false;
    if (shape && other.shape != shape) return false;
    if (texture && other.texture != texture) return false;
    return true;
}

const SceneObject* SceneGraph::find(const std::string& id) const {
    for (auto& o : objects)
        if (o.id == id) return &o;
    return nullptr;
}

SceneObject* SceneGraph::find(const std::string& id) {
    for (auto& o : objects)
        if (o.id == id) return &o;
    return nullptr;
}

bool SceneGraph::ids_unique() const {
    std::set<std::string> seen;
    for (auto& o : objects)
        if (!seen.insert(o.id).second) return false;
    return true;
}

std::string SceneGraph::fresh_id() const {
    // Highest numeric suffix + 1 keeps ids stable regardless of removals.
    long best = -1;
    for (auto& o : objects) {
        if (o.id.rfind("obj", 0) == 0) {
            try {
                best = std::max(best, std::stol(o.id.substr(3)));
            } catch (...) {
            }
        }
    }
    return "obj" + std::to_string(best + 1);
}

int SceneSpec::total_object_count() const {
    int n = 0;
    for (auto& r : required) n += r.count;
    return n;
}

std::string to_string(RelationKind k) {
    switch (k) {
        case RelationKind::left_of: return "left_of";
        case RelationKind::right_of: return "right_of";
        case RelationKind::above: return "above";
        case RelationKind::below: return "below";
        case RelationKind::next_to: return "next_to";
        case RelationKind::on: return "on";
    }
    return "left_of";
}

RelationKind relation_kind_from_string(const std::string& s) {
    if (s == "left_of") return RelationKind::left_of;
    if (s == "right_of") return RelationKind::right_of;
    if (s == "above") return RelationKind::above;
    if (s == "below") return RelationKind::below;
    if (s == "next_to") return RelationKind::next_to;
    if (s == "on") return RelationKind::on;
    throw ConfigError("unknown relation kind: " + s);
}

std::vector<size_t> resolve_selector(const SceneGraph& graph, const ObjectSelector& sel) {
    std::vector<size_t> out;
    if (sel.anchor_id) {
        for (size_t i = 0; i < graph.objects.size(); ++i)
            if (graph.objects[i].id == *sel.anchor_id) return {i};
        return {};
    }
    for (size_t i = 0; i < graph.objects.size(); ++i)
        if (sel.matches(graph.objects[i])) out.push_back(i);
    return out;
}

bool relation_geometry(const BBox& s, const BBox& o, RelationKind kind, const Thresholds& th) {
    switch (kind) {
        case RelationKind::left_of: return s.cx() < o.cx();
        case RelationKind::right_of: return s.cx() > o.cx();
        case RelationKind::above: return s.cy() < o.cy();
        case RelationKind::below: return s.cy() > o.cy();
        case RelationKind::next_to: {
            double dx = s.cx() - o.cx(), dy = s.cy() - o.cy();
            return std::sqrt(dx * dx + dy * dy) < th.next_to_distance;
        }
        case RelationKind::on: {
            double overlap = std::min(s.right(), o.right()) - std::max(s.x, o.x);
            return std::abs(s.bottom() - o.y) <= th.on_epsilon + 1e-9 && overlap > 0;
        }
    }
    return false;
}

bool relation_holds(const SceneGraph& graph, const Relation& rel, const Thresholds& th) {
    if (rel.subject == rel.object)
        throw UnresolvedSelector("relation subject and object selectors are identical");
    auto subs = resolve_selector(graph, rel.subject);
    auto objs = resolve_selector(graph, rel.object);
    if (subs.size() != 1)
        throw UnresolvedSelector("subject selector '" + rel.subject.category + "' resolved to " +
                                 std::to_string(subs.size()) + " objects");
    if (objs.size() != 1)
        throw UnresolvedSelector("object selector '" + rel.object.category + "' resolved to " +
                                 std::to_string(objs.size()) + " objects");
    if (subs[0] == objs[0])
        throw UnresolvedSelector("relation selectors resolve to the same object");
    return relation_geometry(graph.objects[subs[0]].bbox, graph.objects[objs[0]].bbox, rel.kind, th);
}

bool relation_satisfied(const SceneGraph& graph, const Relation& rel, const Thresholds& th) {
    auto subs = resolve_selector(graph, rel.subject);
    auto objs = resolve_selector(graph, rel.object);
    if (subs.empty() || objs.empty()) return false;
    bool any_pair = false;
    for (size_t si : subs) {
        for (size_t oi : objs) {
            if (si == oi) continue;
            any_pair = true;
            if (!relation_geometry(graph.objects[si].bbox, graph.objects[oi].bbox, rel.kind, th))
                return false;
        }
    }
    return any_pair;
}

namespace {

// Slot = one count unit of a required entry.
struct Slot {
    int entry = 0;
    int unit = 0;
};

int pair_weight(const SceneObject& obj, const RequiredEntry& entry) {
    int w = 1;  // presence
    if (entry.attrs.color && obj.attrs.color == entry.attrs.color) ++w;
    if (entry.attrs.shape && obj.attrs.shape == entry.attrs.shape) ++w;
    if (entry.attrs.texture && obj.attrs.texture == entry.attrs.texture) ++w;
    return w;
}

// Max-weight assignment between objects and slots of one category.
// Exact DP over slot subsets; slot counts are small at desk scale.
struct Assignment {
    int weight = 0;
    std::vector<int> slot_of_object;  // -1 = unmatched
};

Assignment assign_category(const std::vector<size_t>& object_idx,
                           const std::vector<Slot>& slots, const SceneGraph& graph,
                           const SceneSpec& spec) {
    size_t n_obj = object_idx.size(), n_slot = slots.size();
    Assignment result;
    result.slot_of_object.assign(n_obj, -1);
    if (n_obj == 0 || n_slot == 0) return result;

    size_t full = size_t(1) << n_slot;
    // dp[i][mask]: best weight using the first i objects and slot set `mask`.
    std::vector<std::vector<int>> dp(n_obj + 1, std::vector<int>(full, 0));
    std::vector<std::vector<int>> choice(n_obj + 1, std::vector<int>(full, -1));
    for (size_t i = 1; i <= n_obj; ++i) {
        const SceneObject& obj = graph.objects[object_idx[i - 1]];
        for (size_t mask = 0; mask < full; ++mask) {
            dp[i][mask] = dp[i - 1][mask];  // leave object unmatched
            choice[i][mask] = -1;
            for (size_t s = 0; s < n_slot; ++s) {
                if (!(mask & (size_t(1) << s))) continue;
                int w = pair_weight(obj, spec.required[slots[s].entry]);
                int cand = dp[i - 1][mask ^ (size_t(1) << s)] + w;
                if (cand > dp[i][mask]) {
                    dp[i][mask] = cand;
                    choice[i][mask] = int(s);
                }
            }
        }
    }
    result.weight = dp[n_obj][full - 1];
    size_t mask = full - 1;
    for (size_t i = n_obj; i >= 1; --i) {
        int s = choice[i][mask];
        if (s >= 0) {
            result.slot_of_object[i - 1] = s;
            mask ^= size_t(1) << s;
        }
        if (i == 1) break;
    }
    return result;
}

std::string attr_or_unspecified(const std::optional<std::string>& v) {
    return v ? *v : "unspecified";
}

}  // namespace

DiscrepancyReport diff(const SceneGraph& graph, const SceneSpec& spec, const Thresholds& th) {
    DiscrepancyReport report;

    // Category -> slots / objects.
    std::map<std::string, std::vector<Slot>> slots_by_cat;
    for (int e = 0; e < int(spec.required.size()); ++e)
        for (int u = 0; u < spec.required[e].count; ++u)
            slots_by_cat[spec.required[e].category].push_back({e, u});
    std::map<std::string, std::vector<size_t>> objects_by_cat;
    for (size_t i = 0; i < graph.objects.size(); ++i)
        objects_by_cat[graph.objects[i].category].push_back(i);

    int satisfied = 0, total = 0;
    std::vector<int> matched_per_entry(spec.required.size(), 0);
    std::set<std::string> matched_ids;

    for (auto& [cat, slots] : slots_by_cat) {
        const RequiredEntry& any_entry = spec.required[slots[0].entry];
        (void)any_entry;
        std::vector<size_t> objs;
        if (auto it = objects_by_cat.find(cat); it != objects_by_cat.end()) objs = it->second;
        Assignment a = assign_category(objs, slots, graph, spec);

        for (size_t oi = 0; oi < objs.size(); ++oi) {
            int s = a.slot_of_object[oi];
            if (s < 0) continue;
            const SceneObject& obj = graph.objects[objs[oi]];
            const RequiredEntry& entry = spec.required[slots[s].entry];
            matched_per_entry[slots[s].entry]++;
            matched_ids.insert(obj.id);
            report.assignment[obj.id] = {slots[s].entry, slots[s].unit};
            ++satisfied;  // presence
            for (const char* name : {"color", "shape", "texture"}) {
                auto wanted = entry.attrs.get(name);
                if (!wanted) continue;
                if (obj.attrs.get(name) == wanted) {
                    ++satisfied;
                } else {
                    report.wrong_attribute.push_back(
                        {obj.id, name, attr_or_unspecified(obj.attrs.get(name)), *wanted});
                }
            }
        }
    }

    for (size_t e = 0; e < spec.required.size(); ++e) {
        const RequiredEntry& entry = spec.required[e];
        total += entry.count * (1 + int(entry.attrs.constrained_count()));
        int deficit = entry.count - matched_per_entry[e];
        if (deficit > 0) report.missing.push_back({entry.category, entry.attrs, deficit});
    }

    for (auto& rel : spec.relations) {
        ++total;
        if (relation_satisfied(graph, rel, th))
            ++satisfied;
        else
            report.relation_violations.push_back(rel);
    }

    for (auto& token : spec.background) {
        ++total;
        if (graph.background.count(token))
            ++satisfied;
        else
            report.background_mismatch.insert(token);
    }

    if (spec.forbid_extraneous) {
        for (auto& obj : graph.objects) {
            if (!matched_ids.count(obj.id)) {
                ++total;
                report.extraneous.push_back(obj.id);
            }
        }
    }

    report.satisfied = satisfied;
    report.total = total;
    report.score = total == 0 ? 1.0 : double(satisfied) / double(total);
    return report;
}

double spec_score(const SceneGraph& graph, const SceneSpec& spec, const Thresholds& th) {
    return diff(graph, spec, th).score;
}

bool selector_matches_entry(const ObjectSelector& sel, const RequiredEntry& entry) {
    return sel.category == entry.category && sel.attrs.satisfied_by(entry.attrs);
}

std::optional<std::vector<int>> entry_topo_order(const SceneSpec& spec) {
    int n = int(spec.required.size());
    std::vector<std::set<int>> succ(n);
    std::vector<int> indeg(n, 0);
    for (auto& rel : spec.relations) {
        for (int s = 0; s < n; ++s) {
            if (!selector_matches_entry(rel.subject, spec.required[s])) continue;
            for (int o = 0; o < n; ++o) {
                if (o == s || !selector_matches_entry(rel.object, spec.required[o])) continue;
                if (succ[o].insert(s).second) indeg[s]++;
            }
        }
    }
    std::vector<int> order, ready;
    for (int i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        int i = ready.front();
        ready.erase(ready.begin());
        order.push_back(i);
        for (int s : succ[i])
            if (--indeg[s] == 0) ready.push_back(s);
        std::sort(ready.begin(), ready.end());
    }
    if (int(order.size()) != n) return std::nullopt;
    return order;
}

}  // namespace genorch
