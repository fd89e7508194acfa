#include "genorch/position.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "genorch/adapter.hpp"
#include "genorch/json_io.hpp"

namespace genorch {

std::vector<Detection> PositionPipeline::detect(const SceneGraph& state) const {
    if (aux_endpoint_.empty()) return detect_objects(state, det_);
    json inputs;
    inputs["sigma"] = det_.sigma;
    json body;
    try {
        body = call_adapter(aux_endpoint_,
                            make_adapter_request("aux.detect", "detector", "", inputs, state));
    } catch (const AdapterError& e) {
        throw EndpointError(e.what());
    }
    if (!body.contains("detections") || !body["detections"].is_array())
        throw EndpointError("detector response lacks detections");
    std::vector<Detection> out;
    for (auto& d : body["detections"]) out.push_back(d.get<Detection>());
    return out;
}

std::vector<LayoutPlacement> PositionPipeline::layout(const SceneSpec& spec) const {
    if (aux_endpoint_.empty()) return generate_layout(spec, th_);
    json inputs;
    inputs["spec"] = spec;
    json body;
    try {
        body = call_adapter(aux_endpoint_,
                            make_adapter_request("aux.layout", "layouter", "", inputs, {}));
    } catch (const AdapterError& e) {
        throw EndpointError(e.what());
    }
    if (!body.contains("layout") || !body["layout"].is_array())
        throw EndpointError("layout response lacks a layout");
    std::vector<LayoutPlacement> out;
    for (auto& item : body["layout"]) {
        LayoutPlacement pl;
        pl.entry_index = item.at("entry").get<int>();
        pl.unit_index = item.at("unit").get<int>();
        pl.category = item.at("category").get<std::string>();
        from_json(item.at("bbox"), pl.bbox);
        out.push_back(pl);
    }
    return out;
}

std::string PositionPipeline::condition(const std::string& kind, const std::string& source) const {
    if (aux_endpoint_.empty()) return extract_condition(kind, source);
    json inputs;
    inputs["source"] = source;
    json body;
    try {
        body = call_adapter(aux_endpoint_, make_adapter_request("aux.condition." + kind,
                                                                "extractor", "", inputs, {}));
    } catch (const AdapterError& e) {
        throw EndpointError(e.what());
    }
    if (!body.contains("token") || !body["token"].is_string())
        throw EndpointError("condition response lacks a token");
    return body["token"].get<std::string>();
}

std::vector<Detection> detect_objects(const SceneGraph& state, const DetectorConfig& cfg) {
    std::vector<Detection> out;
    for (auto& obj : state.objects) {
        if (cfg.sigma <= 0.0) {
            out.push_back({obj.category, obj.bbox, 1.0});
            continue;
        }
        Rng rng(cfg.seed, "det:" + obj.id);
        double d[4];
        for (double& v : d) v = cfg.sigma * (2.0 * rng.next_u01() - 1.0);
        BBox jittered{obj.bbox.x + d[0], obj.bbox.y + d[1], obj.bbox.w + d[2], obj.bbox.h + d[3]};
        double mag = std::max({std::abs(d[0]), std::abs(d[1]), std::abs(d[2]), std::abs(d[3])});
        out.push_back({obj.category, clamp_bbox(jittered), std::clamp(1.0 - mag, 0.01, 1.0)});
    }
    return out;
}

std::string extract_condition(const std::string& kind, const std::string& source_handle) {
    char buf[20];
    snprintf(buf, sizeof buf, "%016llx",
             (unsigned long long)fnv1a64(kind + "|" + source_handle));
    return kind + ":" + buf;
}

namespace {

bool constraint_ok(const BBox& candidate, const PlacementConstraint& c, const SceneGraph& state,
                   const Thresholds& th, bool* had_refs) {
    auto refs = resolve_selector(state, c.ref);
    if (refs.empty()) return true;  // counterpart absent; caller decides if that matters
    if (had_refs) *had_refs = true;
    for (size_t i : refs) {
        const BBox& ref = state.objects[i].bbox;
        bool ok = c.as_object ? relation_geometry(ref, candidate, c.kind, th)
                              : relation_geometry(candidate, ref, c.kind, th);
        if (!ok) return false;
    }
    return true;
}

bool all_constraints_ok(const BBox& candidate, const std::vector<PlacementConstraint>& cons,
                        const SceneGraph& state, const Thresholds& th) {
    for (auto& c : cons)
        if (!constraint_ok(candidate, c, state, th, nullptr)) return false;
    return true;
}

double overlap_total(const BBox& candidate, const SceneGraph& state) {
    double t = 0;
    for (auto& o : state.objects) t += bbox_iou(candidate, o.bbox);
    return t;
}

}  // namespace

std::optional<BBox> solve_constrained_bbox(const SceneGraph& state,
                                           const std::vector<PlacementConstraint>& constraints,
                                           std::pair<double, double> size, const Thresholds& th,
                                           std::optional<BBox> near) {
    double w = size.first, h = size.second;
    auto box_at = [&](double cx, double cy, double bw, double bh) {
        return clamp_bbox({cx - bw / 2, cy - bh / 2, bw, bh});
    };

    std::vector<BBox> candidates;
    // Constraint-driven constructions go first: they handle the metric
    // relations that a coarse scan can miss.
    for (auto& c : constraints) {
        for (size_t i : resolve_selector(state, c.ref)) {
            const BBox& ref = state.objects[i].bbox;
            switch (c.kind) {
                case RelationKind::next_to: {
                    double r = 0.6 * th.next_to_distance;
                    for (auto [dx, dy] : {std::pair{r, 0.0}, {-r, 0.0}, {0.0, r}, {0.0, -r},
                                          {r * 0.7, r * 0.7}, {-r * 0.7, r * 0.7},
                                          {r * 0.7, -r * 0.7}, {-r * 0.7, -r * 0.7}})
                        candidates.push_back(box_at(ref.cx() + dx, ref.cy() + dy, w, h));
                    break;
                }
                case RelationKind::on: {
                    if (!c.as_object) {
                        double hh = std::min(h, std::max(0.02, ref.y + th.on_epsilon * 0.5));
                        candidates.push_back(clamp_bbox({ref.cx() - w / 2, ref.y - hh, w, hh}));
                    } else {
                        candidates.push_back(clamp_bbox({ref.cx() - w / 2, ref.bottom(), w, h}));
                    }
                    break;
                }
                case RelationKind::left_of:
                case RelationKind::right_of: {
                    bool want_left = (c.kind == RelationKind::left_of) != c.as_object;
                    double cx = want_left ? (ref.cx() - std::max(0.08, (ref.cx() - w / 2) / 2) -
                                             1e-4)
                                          : (ref.cx() + std::max(0.08, (1 - ref.cx() - w / 2) / 2) +
                                             1e-4);
                    candidates.push_back(box_at(cx, ref.cy(), w, h));
                    candidates.push_back(box_at(want_left ? w / 2 + 1e-4 : 1 - w / 2 - 1e-4,
                                                ref.cy(), w, h));
                    break;
                }
                case RelationKind::above:
                case RelationKind::below: {
                    bool want_above = (c.kind == RelationKind::above) != c.as_object;
                    double cy = want_above ? (ref.cy() - std::max(0.08, (ref.cy() - h / 2) / 2) -
                                              1e-4)
                                           : (ref.cy() + std::max(0.08, (1 - ref.cy() - h / 2) / 2) +
                                              1e-4);
                    candidates.push_back(box_at(ref.cx(), cy, w, h));
                    candidates.push_back(box_at(ref.cx(), want_above ? h / 2 + 1e-4 : 1 - h / 2 - 1e-4,
                                                w, h));
                    break;
                }
            }
        }
    }
    // Scan grid, ordered by distance to `near` (stable on ties).
    std::vector<BBox> grid;
    const int K = 25;
    for (int r = 0; r < K; ++r)
        for (int col = 0; col < K; ++col)
            grid.push_back(box_at((col + 0.5) / K, (r + 0.5) / K, w, h));
    if (near) {
        std::stable_sort(grid.begin(), grid.end(), [&](const BBox& a, const BBox& b) {
            auto d = [&](const BBox& v) {
                double dx = v.cx() - near->cx(), dy = v.cy() - near->cy();
                return dx * dx + dy * dy;
            };
            return d(a) < d(b);
        });
    }
    candidates.insert(candidates.end(), grid.begin(), grid.end());

    if (constraints.empty()) {
        // Free placement: least overlap with existing objects wins.
        const BBox* best = nullptr;
        double best_overlap = 1e18;
        for (auto& c : candidates) {
            double ov = overlap_total(c, state);
            if (ov < best_overlap - 1e-12) {
                best_overlap = ov;
                best = &c;
            }
            if (best_overlap == 0.0) break;
        }
        return best ? std::optional<BBox>(*best) : std::nullopt;
    }
    for (auto& cand : candidates)
        if (cand.valid() && all_constraints_ok(cand, constraints, state, th)) return cand;
    return std::nullopt;
}

namespace {

// True when every spec relation whose selectors both resolve on `state`
// already holds; unresolved relations are deferred to later placements.
bool placed_relations_ok(const SceneGraph& state, const SceneSpec& spec, const Thresholds& th) {
    for (auto& rel : spec.relations) {
        if (resolve_selector(state, rel.subject).empty()) continue;
        if (resolve_selector(state, rel.object).empty()) continue;
        if (!relation_satisfied(state, rel, th)) return false;
    }
    return true;
}

}  // namespace

std::vector<LayoutPlacement> generate_layout(const SceneSpec& spec, const Thresholds& th) {
    std::vector<LayoutPlacement> out;
    int n_units = spec.total_object_count();
    if (n_units == 0) return out;

    auto topo = entry_topo_order(spec);
    if (!topo) throw PlacementInfeasible("cyclic relation set");
    int n = int(spec.required.size());

    // Entries tied by next_to must end up close together, including refs
    // that share a subject but have no direct relation. Cluster them and
    // place each cluster as one compact group.
    std::vector<int> comp(n);
    for (int i = 0; i < n; ++i) comp[i] = i;
    std::function<int(int)> find = [&](int i) { return comp[i] == i ? i : comp[i] = find(comp[i]); };
    for (auto& rel : spec.relations) {
        if (rel.kind != RelationKind::next_to) continue;
        std::vector<int> touched;
        for (int i = 0; i < n; ++i)
            if (selector_matches_entry(rel.subject, spec.required[i]) ||
                selector_matches_entry(rel.object, spec.required[i]))
                touched.push_back(i);
        for (size_t k = 1; k < touched.size(); ++k) comp[find(touched[k])] = find(touched[0]);
    }
    std::map<int, std::vector<int>> cluster_entries;  // root -> entries in topo order
    for (int e : *topo) cluster_entries[find(e)].push_back(e);

    int g = int(std::ceil(std::sqrt(double(n_units))));
    double cell = 1.0 / g;
    double box_side = 0.55 * cell;

    std::map<int, int> home_cell;  // entry -> first unit's initial cell
    {
        int k = 0;
        for (int e : *topo) {
            home_cell.emplace(e, k);
            k += spec.required[e].count;
        }
    }
    auto cell_center = [&](int c) {
        return std::pair<double, double>{(c % g + 0.5) * cell, (c / g + 0.5) * cell};
    };
    auto box_at = [&](double cx, double cy, double side) {
        return clamp_bbox({cx - side / 2, cy - side / 2, side, side});
    };
    auto cells_by_distance = [&](int home) {
        std::vector<int> order(g * g);
        for (int i = 0; i < g * g; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            auto d = [&](int c) {
                double dx = double(c % g) - double(home % g), dy = double(c / g) - double(home / g);
                return dx * dx + dy * dy;
            };
            return d(a) < d(b);
        });
        return order;
    };

    SceneGraph placed;
    std::vector<bool> occupied(g * g, false);
    std::set<int> done_entries;

    auto commit = [&](int e, int u, const BBox& where) {
        placed.objects.push_back({"layout_e" + std::to_string(e) + "_u" + std::to_string(u),
                                  spec.required[e].category, spec.required[e].attrs, where});
        out.push_back({e, u, spec.required[e].category, spec.required[e].attrs, where});
    };

    // Compact slot pattern for a cluster of m units: center plus a loose
    // spiral, pairwise distance well under the next_to threshold.
    auto cluster_slots = [&](double cx, double cy, int m) {
        std::vector<std::pair<double, double>> slots;
        double radius = 0.35 * th.next_to_distance;
        for (int k = 0; k < m; ++k) {
            if (k == 0) {
                slots.push_back({cx, cy});
            } else {
                double angle = k * 2.399963 + 0.7;
                double r = radius * (0.7 + 0.3 * double(k) / m);
                slots.push_back({cx + r * std::cos(angle), cy + r * std::sin(angle)});
            }
        }
        return slots;
    };

    // One decision per free unit and one per whole cluster, in topo order.
    // Bounded depth-first search over candidate placements: greedy cell
    // choices can paint a later subject into a corner, so earlier decisions
    // must be revisitable.
    struct Decision {
        bool is_cluster = false;
        int entry = 0, unit = 0;
        std::vector<std::pair<int, int>> units;  // cluster members
        std::vector<PlacementConstraint> cons;
        int home = 0;
    };
    std::vector<Decision> decisions;
    for (int e : *topo) {
        if (done_entries.count(e)) continue;
        const std::vector<int>& members = cluster_entries[find(e)];
        if (members.size() > 1) {
            Decision d;
            d.is_cluster = true;
            d.home = home_cell[e];
            for (int m : members) {
                for (int u = 0; u < spec.required[m].count; ++u) d.units.push_back({m, u});
                done_entries.insert(m);
            }
            decisions.push_back(std::move(d));
            continue;
        }
        std::vector<PlacementConstraint> cons;
        for (auto& rel : spec.relations)
            if (selector_matches_entry(rel.subject, spec.required[e]))
                cons.push_back({rel.kind, rel.object, false});
        for (int u = 0; u < spec.required[e].count; ++u) {
            Decision d;
            d.entry = e;
            d.unit = u;
            d.cons = cons;
            d.home = home_cell[e];
            decisions.push_back(std::move(d));
        }
        done_entries.insert(e);
    }

    double cluster_side = std::max(std::min(box_side, 0.45 * th.next_to_distance), 0.08);
    int attempts = 4000;

    std::function<bool(size_t)> dfs = [&](size_t k) -> bool {
        if (k == decisions.size()) {
            for (auto& rel : spec.relations)
                if (!relation_satisfied(placed, rel, th)) return false;
            return true;
        }
        const Decision& d = decisions[k];
        auto push = [&](int e, int u, const BBox& where) { commit(e, u, where); };
        auto pop = [&](size_t count) {
            placed.objects.resize(placed.objects.size() - count);
            out.resize(out.size() - count);
        };

        if (!d.is_cluster) {
            for (int c : cells_by_distance(d.home)) {
                if (occupied[c]) continue;
                if (--attempts < 0) return false;
                auto [ccx, ccy] = cell_center(c);
                BBox cand = box_at(ccx, ccy, box_side);
                if (!d.cons.empty() && !all_constraints_ok(cand, d.cons, placed, th)) continue;
                occupied[c] = true;
                push(d.entry, d.unit, cand);
                if (dfs(k + 1)) return true;
                pop(1);
                occupied[c] = false;
            }
            if (!d.cons.empty() && --attempts >= 0) {
                auto [hx, hy] = cell_center(d.home);
                auto solved = solve_constrained_bbox(placed, d.cons, {box_side, box_side}, th,
                                                     box_at(hx, hy, box_side));
                if (solved) {
                    push(d.entry, d.unit, *solved);
                    if (dfs(k + 1)) return true;
                    pop(1);
                }
            }
            return false;
        }

        size_t m_count = d.units.size();
        for (int c : cells_by_distance(d.home)) {
            if (occupied[c]) continue;
            auto [ccx, ccy] = cell_center(c);
            auto slots = cluster_slots(ccx, ccy, int(m_count));
            std::vector<int> perm(m_count);
            for (size_t i = 0; i < m_count; ++i) perm[i] = int(i);
            int tried = 0;
            do {
                if (--attempts < 0) return false;
                for (size_t i = 0; i < m_count; ++i) {
                    auto [sx, sy] = slots[perm[i]];
                    push(d.units[i].first, d.units[i].second, box_at(sx, sy, cluster_side));
                }
                bool local_ok = placed_relations_ok(placed, spec, th);
                if (local_ok) {
                    occupied[c] = true;
                    if (dfs(k + 1)) return true;
                    occupied[c] = false;
                }
                pop(m_count);
            } while (++tried < 24 && std::next_permutation(perm.begin(), perm.end()));
        }
        return false;
    };

    if (!dfs(0)) throw PlacementInfeasible("no placement satisfies every relation");
    std::sort(out.begin(), out.end(), [](const LayoutPlacement& a, const LayoutPlacement& b) {
        return std::tie(a.entry_index, a.unit_index) < std::tie(b.entry_index, b.unit_index);
    });
    return out;
}

namespace {

// Selector matching against detections works on category only; detectors
// do not report attributes.
const Detection* match_detection(const std::vector<Detection>& dets, const ObjectSelector& sel,
                                 const std::optional<BBox>& anchor_bbox) {
    const Detection* best = nullptr;
    double best_key = -1;
    for (auto& d : dets) {
        if (d.name != sel.category) continue;
        double key = anchor_bbox ? bbox_iou(d.bbox, *anchor_bbox) : d.confidence;
        if (key > best_key) {
            best_key = key;
            best = &d;
        }
    }
    return best;
}

SceneGraph detections_as_graph(const std::vector<Detection>& dets) {
    SceneGraph g;
    int i = 0;
    for (auto& d : dets) g.objects.push_back({"det" + std::to_string(i++), d.name, {}, d.bbox});
    return g;
}

json bbox_to_json(const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

}  // namespace

Selection PositionPipeline::compensate_inputs(const Selection& sel, const SelectionContext& ctx,
                                              const Registry& registry,
                                              const CompensationHints& hints) const {
    const ToolDescriptor* tool = registry.lookup(sel.tool_name);
    if (!tool) throw CompensationFailed("tool_name", "unknown tool: " + sel.tool_name);

    Selection out = sel;
    for (auto& slot : tool->required_inputs) {
        auto it = out.inputs.find(slot.name);
        bool missing = it == out.inputs.end() ||
                       (it->is_string() && it->get<std::string>() == kMissingMarker);
        if (!missing) continue;

        switch (slot.kind) {
            case SlotKind::bbox: {
                if (slot.name == "object_bbox" && !hints.is_new_object) {
                    if (!hints.target)
                        throw CompensationFailed(slot.name, "no target selector available");
                    const Detection* d =
                        match_detection(ctx.detections, *hints.target, hints.anchor_bbox);
                    if (!d)
                        throw CompensationFailed(slot.name, "selector matches no detection: " +
                                                                hints.target->category);
                    out.inputs[slot.name] = bbox_to_json(d->bbox);
                    break;
                }
                // Placement of a new object or a move destination: solve
                // against the detected scene. Attribute constraints cannot
                // be checked on detections, so refs match by category.
                SceneGraph det_graph = detections_as_graph(ctx.detections);
                std::vector<PlacementConstraint> cons;
                for (auto& c : hints.constraints)
                    cons.push_back({c.kind, {c.ref.category, {}, std::nullopt}, c.as_object});
                auto size = hints.size.value_or(std::make_pair(0.12, 0.12));
                auto solved = solve_constrained_bbox(det_graph, cons, size, th_, hints.anchor_bbox);
                if (!solved)
                    throw CompensationFailed(slot.name, "no box satisfies the placement");
                out.inputs[slot.name] = bbox_to_json(*solved);
                break;
            }
            case SlotKind::layout: {
                if (!ctx.spec)
                    throw CompensationFailed(slot.name, "no scene spec to lay out");
                json arr = json::array();
                for (auto& pl : layout(*ctx.spec)) {
                    json item;
                    item["entry"] = pl.entry_index;
                    item["unit"] = pl.unit_index;
                    item["category"] = pl.category;
                    item["bbox"] = bbox_to_json(pl.bbox);
                    arr.push_back(item);
                }
                out.inputs[slot.name] = arr;
                break;
            }
            case SlotKind::condition: {
                std::string kind = hints.condition_kind.value_or(
                    tool->condition_kind.empty() ? "canny" : tool->condition_kind);
                std::optional<std::string> source = ctx.attachments.condition_source;
                if (!source) source = ctx.attachments.source_scene;
                if (!source)
                    throw CompensationFailed(slot.name, "no source to extract a condition from");
                out.inputs[slot.name] = condition(kind, *source);
                break;
            }
            case SlotKind::subject_image: {
                if (slot.name == "source_image") {
                    if (!ctx.attachments.source_scene)
                        throw CompensationFailed(slot.name, "no source image attached");
                    out.inputs[slot.name] = *ctx.attachments.source_scene;
                    break;
                }
                if (ctx.attachments.subject_refs.empty())
                    throw CompensationFailed(slot.name, "no subject reference attached");
                if (tool->skill == Skill::customization_multi) {
                    out.inputs[slot.name] = json(ctx.attachments.subject_refs);
                } else {
                    out.inputs[slot.name] = ctx.attachments.subject_refs.front();
                }
                break;
            }
            default:
                throw CompensationFailed(slot.name,
                                         "slot kind " + to_string(slot.kind) +
                                             " is not position-related and cannot be generated");
        }
    }
    return out;
}

}  // namespace genorch
