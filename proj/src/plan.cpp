#include "genorch/plan.hpp"

#include <algorithm>
#include <cmath>

#include "genorch/rng.hpp"

namespace genorch {

std::string to_string(NodeKind k) {
    switch (k) {
        case NodeKind::initial: return "initial";
        case NodeKind::generation: return "generation";
        case NodeKind::editing: return "editing";
    }
    return "initial";
}

std::string to_string(NodeStatus s) {
    switch (s) {
        case NodeStatus::pending: return "pending";
        case NodeStatus::succeeded: return "succeeded";
        case NodeStatus::failed: return "failed";
        case NodeStatus::pruned: return "pruned";
    }
    return "pending";
}

namespace {

PlanNode* find_in(PlanNode* node, const std::string& id) {
    if (node->id == id) return node;
    for (auto& c : node->children)
        if (PlanNode* hit = find_in(c.get(), id)) return hit;
    return nullptr;
}

}  // namespace

PlanNode* PlanTree::find(const std::string& id) {
    return root ? find_in(root.get(), id) : nullptr;
}

std::string TraversalTrace::to_jsonl() const {
    std::string out;
    for (auto& e : events) out += e.dump() + "\n";
    return out;
}

namespace {

std::string child_id(const std::string& parent, size_t index) {
    return parent + "." + std::to_string(index);
}

// Sibling alternates for one edit: ranked capable tools, optionally a
// remove+add composite in the last slot, optionally reseed fills.
std::vector<std::unique_ptr<PlanNode>> make_edit_group(const std::string& parent_id,
                                                       const std::vector<AtomicEdit>& chain,
                                                       const Registry& registry,
                                                       const SelectionContext& ctx,
                                                       const BuildOptions& opts) {
    const AtomicEdit& edit = chain.front();
    std::vector<AtomicEdit> rest(chain.begin() + 1, chain.end());
    auto ranked = registry.rank_tools(edit, ctx);

    int slots = std::max(1, opts.budget.max_branching);
    bool composite = opts.composite_fallback && slots >= 2 && edit.target &&
                     (edit.action == EditAction::edit_attribute ||
                      edit.action == EditAction::replace);

    std::vector<std::unique_ptr<PlanNode>> group;
    int tool_slots = composite ? slots - 1 : slots;
    for (int i = 0; i < tool_slots && i < int(ranked.size()); ++i) {
        auto node = std::make_unique<PlanNode>();
        node->kind = NodeKind::editing;
        node->action = edit;
        node->tool = ranked[i];
        node->remaining = rest;
        group.push_back(std::move(node));
    }
    if (composite) {
        AtomicEdit rm;
        rm.action = EditAction::remove;
        rm.target = edit.target;
        AtomicEdit add_back;
        add_back.action = EditAction::add;
        if (edit.action == EditAction::edit_attribute) {
            add_back.category = edit.target->category;
            add_back.attrs = edit.target->attrs;
            add_back.attrs.set(edit.attribute, edit.value);
        } else {
            add_back.category = edit.category;
            add_back.attrs = edit.attrs;
        }
        auto node = std::make_unique<PlanNode>();
        node->kind = NodeKind::editing;
        node->action = rm;
        node->tool = registry.rank_tools(rm, ctx).front();
        node->remaining.push_back(add_back);
        node->remaining.insert(node->remaining.end(), rest.begin(), rest.end());
        node->is_composite_head = true;
        group.push_back(std::move(node));
    }
    while (opts.reseed_alternates && int(group.size()) < slots && !group.empty()) {
        auto node = std::make_unique<PlanNode>();
        node->kind = NodeKind::editing;
        node->action = edit;
        node->tool = group.front()->tool;
        node->remaining = rest;
        node->reseed_salt = int(group.size());
        group.push_back(std::move(node));
    }
    for (size_t i = 0; i < group.size(); ++i) group[i]->id = child_id(parent_id, i);
    return group;
}

std::string fingerprint_report(const DiscrepancyReport& report) {
    json j;
    j["satisfied"] = report.satisfied;
    j["total"] = report.total;
    j["missing"] = report.missing.size();
    j["wrong"] = report.wrong_attribute.size();
    j["relations"] = report.relation_violations.size();
    j["extra"] = report.extraneous.size();
    std::string detail;
    for (auto& m : report.missing) detail += m.category + std::to_string(m.deficit);
    for (auto& w : report.wrong_attribute) detail += w.object_id + w.attribute + w.wanted;
    for (auto& id : report.extraneous) detail += id;
    for (auto& t : report.background_mismatch) detail += t;
    char buf[20];
    snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a64(j.dump() + detail));
    return buf;
}

}  // namespace

PlanTree build_tree(TaskKind kind, const GenerationRequest& request,
                    const std::vector<AtomicEdit>& edits, const Registry& registry,
                    const SelectionContext& ctx, const BuildOptions& opts) {
    if (registry.size() == 0) throw NoCapableTool("empty registry");
    PlanTree tree;
    tree.kind = kind;
    tree.base_context = ctx;
    tree.root = std::make_unique<PlanNode>();
    tree.root->id = "root";
    tree.root->kind = NodeKind::initial;

    if (kind == TaskKind::generation) {
        tree.spec = request.spec;
        auto ranked = registry.rank_tools(request, ctx);
        int slots = std::max(1, opts.budget.max_branching);
        for (int i = 0; i < slots && i < int(ranked.size()); ++i) {
            auto node = std::make_unique<PlanNode>();
            node->kind = NodeKind::generation;
            node->action = request;
            node->tool = ranked[i];
            node->id = child_id("root", tree.root->children.size());
            tree.root->children.push_back(std::move(node));
        }
        if (opts.reseed_alternates && int(tree.root->children.size()) < slots &&
            !tree.root->children.empty()) {
            auto node = std::make_unique<PlanNode>();
            node->kind = NodeKind::generation;
            node->action = request;
            node->tool = tree.root->children.front()->tool;
            node->reseed_salt = int(tree.root->children.size());
            node->id = child_id("root", tree.root->children.size());
            tree.root->children.push_back(std::move(node));
        }
    } else {
        if (edits.empty()) throw ConfigError("editing payload must not be empty");
        tree.edits = edits;
        tree.root->children = make_edit_group("root", edits, registry, ctx, opts);
    }
    return tree;
}

void attach_correction_subtree(PlanNode& gen_node, const DiscrepancyReport& report,
                               const Registry& registry, const Decomposer& decomposer,
                               const SceneSpec& spec, const SceneGraph& state,
                               const BuildOptions& opts) {
    if (report.empty()) return;
    std::string fp = fingerprint_report(report);
    if (gen_node.correction_fingerprint == fp && !gen_node.children.empty()) return;
    auto edits = decomposer.discrepancies_to_edits(report, spec, state);
    if (edits.empty()) return;
    SelectionContext ctx;
    ctx.spec = spec;
    gen_node.children = make_edit_group(gen_node.id, edits, registry, ctx, opts);
    gen_node.correction_fingerprint = fp;
}

SceneGraph execute_node(const PlanNode& node, const SceneGraph& state, ToolBackend& backend,
                        const PositionPipeline& pipeline, const Registry& registry,
                        const Decomposer& decomposer) {
    if (node.kind == NodeKind::initial || !node.action || !node.tool)
        throw ConfigError("cannot execute an initial or tool-less node");
    const ToolDescriptor& tool = *node.tool;

    SelectionContext ctx;
    ctx.tools = {tool};
    ctx.detections = pipeline.detect(state);

    CompensationHints hints;
    Selection sel;
    sel.tool_name = tool.name;

    auto phrase = [&](const std::string& category, const AttributeSet& attrs) {
        return render_selector({category, attrs, std::nullopt});
    };
    auto bbox_json = [](const BBox& b) { return json::array({b.x, b.y, b.w, b.h}); };

    if (const GenerationRequest* req = node.request()) {
        ctx.instruction = req->prompt;
        ctx.spec = req->spec;
        ctx.attachments = req->attachments;
        if (!tool.condition_kind.empty()) hints.condition_kind = tool.condition_kind;
        for (auto& slot : tool.required_inputs) {
            if (slot.kind == SlotKind::text)
                sel.inputs[slot.name] = req->prompt;
            else
                sel.inputs[slot.name] = kMissingMarker;
        }
    } else {
        const AtomicEdit& edit = *node.edit();
        ctx.instruction = decomposer.render_edit(edit);
        hints.target = edit.target;
        hints.is_new_object = edit.action == EditAction::add;
        for (auto& h : edit.placement) hints.constraints.push_back({h.kind, h.ref, false});
        if (edit.target) {
            auto idx = resolve_selector(state, *edit.target);
            if (!idx.empty()) {
                hints.anchor_bbox = state.objects[idx.front()].bbox;
                hints.size = {state.objects[idx.front()].bbox.w, state.objects[idx.front()].bbox.h};
            }
        }
        if (edit.action == EditAction::add) hints.size = {0.12, 0.12};

        for (auto& slot : tool.required_inputs) {
            if (slot.name == "instruction" || slot.kind == SlotKind::text) {
                if (slot.name == "attribute")
                    sel.inputs[slot.name] = edit.attribute;
                else if (slot.name == "value")
                    sel.inputs[slot.name] = edit.value;
                else if (slot.name == "style")
                    sel.inputs[slot.name] = edit.style;
                else
                    sel.inputs[slot.name] = ctx.instruction;
            } else if (slot.name == "object_name") {
                sel.inputs[slot.name] = edit.target ? render_selector(*edit.target)
                                                    : phrase(edit.category, edit.attrs);
            } else if (slot.name == "replacement") {
                if (edit.action == EditAction::edit_attribute && edit.target) {
                    // replace realizing an attribute edit: swap in the same
                    // object with the attribute changed
                    AttributeSet changed = edit.target->attrs;
                    changed.set(edit.attribute, edit.value);
                    sel.inputs[slot.name] = phrase(edit.target->category, changed);
                } else {
                    sel.inputs[slot.name] = phrase(edit.category, edit.attrs);
                }
            } else if (slot.name == "object_bbox") {
                if (edit.action == EditAction::add && edit.dest_bbox)
                    sel.inputs[slot.name] = bbox_json(*edit.dest_bbox);
                else
                    sel.inputs[slot.name] = kMissingMarker;
            } else if (slot.name == "target_bbox") {
                if (edit.dest_bbox)
                    sel.inputs[slot.name] = bbox_json(*edit.dest_bbox);
                else
                    sel.inputs[slot.name] = kMissingMarker;
            } else {
                sel.inputs[slot.name] = kMissingMarker;
            }
        }
    }
    if (node.reseed_salt > 0) sel.inputs["seed_offset"] = node.reseed_salt;

    Selection bound = pipeline.compensate_inputs(sel, ctx, registry, hints);
    return backend.apply(tool, bound.inputs, state, node.id);
}

PlanNode* switch_generation_tool(PlanTree& tree, const PlanNode& current) {
    if (!tree.root) return nullptr;
    bool seen = false;
    for (auto& child : tree.root->children) {
        if (child->id == current.id) {
            seen = true;
            continue;
        }
        if (seen && child->kind == NodeKind::generation && child->status == NodeStatus::pending)
            return child.get();
    }
    return nullptr;
}

namespace {

enum class StepKind { success, fail, halt };

struct StepResult {
    StepKind kind = StepKind::fail;
    SceneGraph state;
};

struct TraverseCtx {
    const BuildOptions* opts;
    const Registry* registry;
    const Decomposer* decomposer;
    ToolBackend* backend;
    IVerifier* verifier;
    const PositionPipeline* pipeline;
    PlanTree* tree;

    bool gen_mode = false;
    const SceneSpec* spec = nullptr;
    int total_edits = 1;

    int executed = 0;
    double best_score = 0.0;
    SceneGraph best_state;
    TraversalTrace trace;

    bool stalled = false;
    double prev_score = 0.0;
    int stall_count = 0;

    void update_best(double score, const SceneGraph& state) {
        if (score > best_score + 1e-12) {
            best_score = score;
            best_state = state;
        }
    }

    double state_score(const SceneGraph& state) const {
        return spec ? spec_score(state, *spec, pipeline->thresholds()) : 0.0;
    }
};

std::string action_summary(const PlanNode& node, const Decomposer& dec) {
    if (const GenerationRequest* req = node.request()) return req->prompt;
    if (const AtomicEdit* e = node.edit()) return dec.render_edit(*e);
    return "";
}

json aspects_json(const Verdict& v) {
    json a = json::object();
    for (auto& [k, ok] : v.aspects) a[k] = ok;
    return a;
}

void prune_right_siblings(std::vector<std::unique_ptr<PlanNode>>& group, size_t from,
                          TraverseCtx& ctx) {
    for (size_t j = from; j < group.size(); ++j) {
        if (group[j]->status != NodeStatus::pending) continue;
        group[j]->status = NodeStatus::pruned;
        ctx.trace.push({{"event", "prune"}, {"node", group[j]->id},
                        {"reason", "sibling_success"}});
    }
}

StepResult run_group(std::vector<std::unique_ptr<PlanNode>>& group, const SceneGraph& base,
                     int depth, TraverseCtx& ctx);

// A generation node that verified imperfect gets correction rounds; a chain
// leaf that still misses the spec gets the next round attached beneath it.
StepResult descend_corrections(PlanNode& node, const SceneGraph& state, TraverseCtx& ctx) {
    DiscrepancyReport report = diff(state, *ctx.spec, ctx.pipeline->thresholds());
    if (report.empty()) return {StepKind::success, state};
    try {
        attach_correction_subtree(node, report, *ctx.registry, *ctx.decomposer, *ctx.spec, state,
                                  *ctx.opts);
    } catch (const NoCapableTool&) {
        return {StepKind::fail, state};
    }
    if (node.children.empty()) return {StepKind::fail, state};
    json edits = json::array();
    for (auto& e : ctx.decomposer->discrepancies_to_edits(report, *ctx.spec, state))
        edits.push_back(ctx.decomposer->render_edit(e));
    ctx.trace.push({{"event", "corrections"}, {"node", node.id}, {"edits", edits}});
    return run_group(node.children, state, 0, ctx);
}

StepResult run_group(std::vector<std::unique_ptr<PlanNode>>& group, const SceneGraph& base,
                     int depth, TraverseCtx& ctx) {
    for (size_t i = 0; i < group.size(); ++i) {
        PlanNode& node = *group[i];
        if (node.status != NodeStatus::pending) continue;
        if (ctx.executed >= ctx.opts->budget.max_nodes) return {StepKind::halt, base};

        SceneGraph out = base;
        std::string error;
        try {
            out = execute_node(node, base, *ctx.backend, *ctx.pipeline, *ctx.registry,
                               *ctx.decomposer);
        } catch (const Error& e) {
            error = e.what();
        }
        ctx.executed++;

        auto next_sibling_id = [&]() -> json {
            for (size_t j = i + 1; j < group.size(); ++j)
                if (group[j]->status == NodeStatus::pending) return group[j]->id;
            return nullptr;
        };

        if (node.kind == NodeKind::generation) {
            Verdict verdict;
            if (error.empty()) {
                verdict = ctx.verifier->verify_spec(out, *ctx.spec);
            } else {
                verdict.pass = false;
                verdict.score = ctx.state_score(base);
            }
            json ev{{"event", "exec"},     {"node", node.id},
                    {"kind", "generation"}, {"tool", node.tool->name},
                    {"action", action_summary(node, *ctx.decomposer)},
                    {"pass", verdict.pass}, {"score", verdict.score},
                    {"aspects", aspects_json(verdict)}};
            if (!error.empty()) ev["error"] = error;
            ctx.trace.push(ev);
            ctx.update_best(verdict.score, error.empty() ? out : base);

            if (verdict.pass) {
                node.status = NodeStatus::succeeded;
                prune_right_siblings(group, i + 1, ctx);
                return {StepKind::success, out};
            }
            std::string reason = "verification_failed";
            if (error.empty() && ctx.opts->corrections_enabled) {
                ctx.prev_score = verdict.score;
                ctx.stall_count = 0;
                StepResult r = descend_corrections(node, out, ctx);
                if (r.kind != StepKind::fail) return r;
                reason = ctx.stalled ? "stall" : "corrections_failed";
                ctx.stalled = false;
            }
            node.status = NodeStatus::failed;
            ctx.trace.push({{"event", "switch"}, {"from", node.id}, {"to", next_sibling_id()},
                            {"reason", reason}});
            continue;
        }

        // Editing node.
        const AtomicEdit& edit = *node.edit();
        Verdict verdict;
        if (error.empty()) {
            verdict = ctx.verifier->verify_edit(base, out, edit);
        } else {
            verdict.pass = false;
        }
        double score;
        const SceneGraph& scored_state = error.empty() ? out : base;
        if (ctx.gen_mode) {
            score = ctx.state_score(scored_state);
        } else {
            score = double(verdict.pass ? depth + 1 : depth) / double(ctx.total_edits);
        }
        json ev{{"event", "exec"},    {"node", node.id},
                {"kind", "editing"},  {"tool", node.tool->name},
                {"action", action_summary(node, *ctx.decomposer)},
                {"pass", verdict.pass}, {"score", score},
                {"aspects", aspects_json(verdict)}};
        if (!error.empty()) ev["error"] = error;
        ctx.trace.push(ev);
        ctx.update_best(score, scored_state);

        if (!verdict.pass) {
            node.status = NodeStatus::failed;
            ctx.trace.push({{"event", "backtrack"}, {"failed", node.id},
                            {"next", next_sibling_id()}});
            continue;
        }

        node.status = NodeStatus::succeeded;
        prune_right_siblings(group, i + 1, ctx);

        if (ctx.gen_mode) {
            if (score <= ctx.prev_score + 1e-12) {
                if (++ctx.stall_count >= 2) {
                    ctx.trace.push({{"event", "stall"}, {"node", node.id}, {"score", score}});
                    ctx.stalled = true;
                    ctx.prev_score = score;
                    return {StepKind::fail, base};
                }
            } else {
                ctx.stall_count = 0;
            }
            ctx.prev_score = score;
        }

        if (node.is_composite_head && !node.remaining.empty()) {
            // The synthetic add re-creates the removed object in place,
            // carrying every attribute the edit did not change.
            auto idx = resolve_selector(base, *edit.target);
            if (!idx.empty()) {
                const SceneObject& removed = base.objects[idx.front()];
                node.remaining[0].dest_bbox = removed.bbox;
                for (const char* kind : {"color", "shape", "texture"}) {
                    auto have = removed.attrs.get(kind);
                    if (have && !node.remaining[0].attrs.get(kind))
                        node.remaining[0].attrs.set(kind, *have);
                }
            }
        }

        if (!node.remaining.empty()) {
            try {
                node.children = make_edit_group(node.id, node.remaining, *ctx.registry,
                                                ctx.tree->base_context, *ctx.opts);
            } catch (const NoCapableTool&) {
                return {StepKind::fail, base};
            }
            StepResult r = run_group(node.children, out, depth + 1, ctx);
            if (r.kind == StepKind::fail) return {StepKind::fail, base};
            return r;
        }
        if (ctx.gen_mode) {
            StepResult r = descend_corrections(node, out, ctx);
            if (r.kind == StepKind::fail) return {StepKind::fail, base};
            return r;
        }
        return {StepKind::success, out};
    }
    return {StepKind::fail, base};
}

}  // namespace

Outcome traverse(PlanTree& tree, const SceneGraph& initial_state, ToolBackend& backend,
                         IVerifier& verifier, const PositionPipeline& pipeline,
                         const Registry& registry, const Decomposer& decomposer,
                         const BuildOptions& opts) {
    TraverseCtx ctx;
    ctx.opts = &opts;
    ctx.registry = &registry;
    ctx.decomposer = &decomposer;
    ctx.backend = &backend;
    ctx.verifier = &verifier;
    ctx.pipeline = &pipeline;
    ctx.tree = &tree;
    ctx.gen_mode = tree.kind == TaskKind::generation;
    ctx.spec = tree.spec ? &*tree.spec : nullptr;
    ctx.total_edits = std::max<size_t>(1, tree.edits.size());

    double s0 = ctx.gen_mode ? ctx.state_score(initial_state) : 0.0;
    ctx.best_score = s0;
    ctx.best_state = initial_state;
    ctx.trace.push({{"event", "start"}, {"score", s0}});

    StepResult result{StepKind::fail, initial_state};
    if (tree.root && !tree.root->children.empty()) {
        tree.root->status = NodeStatus::succeeded;
        result = run_group(tree.root->children, initial_state, 0, ctx);
    }

    Outcome outcome;
    outcome.success = result.kind == StepKind::success;
    outcome.final_state = outcome.success ? result.state : ctx.best_state;
    outcome.best_score = ctx.best_score;
    outcome.nodes_executed = ctx.executed;
    ctx.trace.push({{"event", "end"},
                    {"success", outcome.success},
                    {"best_score", outcome.best_score},
                    {"nodes_executed", ctx.executed}});
    outcome.trace = std::move(ctx.trace);
    return outcome;
}

namespace {

void dot_walk(const PlanNode& node, std::string& out) {
    std::string label = node.id + "\\n" + to_string(node.kind);
    if (node.tool) label += "\\n" + node.tool->name;
    label += "\\n[" + to_string(node.status) + "]";
    out += "  \"" + node.id + "\" [label=\"" + label + "\"];\n";
    for (auto& c : node.children) {
        out += "  \"" + node.id + "\" -> \"" + c->id + "\";\n";
        dot_walk(*c, out);
    }
}

}  // namespace

std::string export_tree_dot(const PlanTree& tree) {
    std::string out = "digraph plan {\n  node [shape=box, fontname=\"monospace\"];\n";
    if (tree.root) dot_walk(*tree.root, out);
    out += "}\n";
    return out;
}

}  // namespace genorch
