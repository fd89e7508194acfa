#include "genorch/verify.hpp"

#include <algorithm>
#include <cmath>

namespace genorch {

namespace {

const std::vector<std::string> kAspects = {"objects",   "attributes", "positions",
                                           "relations", "background", "aesthetics"};

std::map<std::string, bool> all_pass() {
    std::map<std::string, bool> m;
    for (auto& a : kAspects) m[a] = true;
    return m;
}

double coord_drift(const BBox& a, const BBox& b) {
    return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.w - b.w),
                     std::abs(a.h - b.h)});
}

// Single resolution in `before`; nullptr when zero or multiple matches.
const SceneObject* resolve_unique(const SceneGraph& g, const ObjectSelector& sel) {
    auto idx = resolve_selector(g, sel);
    return idx.size() == 1 ? &g.objects[idx[0]] : nullptr;
}

}  // namespace

Verdict OracleVerifier::verify_spec(const SceneGraph& state, const SceneSpec& spec) {
    Verdict v;
    v.report = diff(state, spec, th_);
    v.score = v.report.score;
    v.pass = v.report.empty();
    v.aspects = all_pass();
    v.aspects["objects"] = v.report.missing.empty() && v.report.extraneous.empty();
    v.aspects["attributes"] = v.report.wrong_attribute.empty();
    v.aspects["relations"] = v.report.relation_violations.empty();
    v.aspects["background"] = v.report.background_mismatch.empty();
    return v;
}

Verdict OracleVerifier::verify_edit(const SceneGraph& before, const SceneGraph& after,
                                    const AtomicEdit& edit) {
    Verdict v;
    v.aspects = all_pass();

    // Expected-change set: ids the edit is allowed to touch. Everything
    // else must survive unchanged within tolerance.
    std::set<std::string> touchable;
    auto fail = [&](const std::string& aspect) { v.aspects[aspect] = false; };

    const SceneObject* target = nullptr;
    if (edit.target) target = resolve_unique(before, *edit.target);
    if (edit.target && !target) fail("objects");
    if (target) touchable.insert(target->id);

    switch (edit.action) {
        case EditAction::add: {
            // Exactly one new object matching the requested category/attrs.
            std::vector<const SceneObject*> added;
            for (auto& o : after.objects)
                if (!before.find(o.id)) added.push_back(&o);
            if (added.size() != 1) {
                fail("objects");
            } else {
                const SceneObject* z = added[0];
                touchable.insert(z->id);
                ObjectSelector want{edit.category, edit.attrs, std::nullopt};
                if (!want.matches(*z)) fail(edit.category == z->category ? "attributes" : "objects");
                if (z->bbox.area() < th_.min_object_area || !z->bbox.valid()) fail("positions");
                if (edit.dest_bbox && coord_drift(z->bbox, *edit.dest_bbox) >
                                          th_.target_drift_tolerance + 1e-9)
                    fail("positions");
                for (auto& hint : edit.placement) {
                    Relation rel{hint.kind, {z->category, {}, z->id}, hint.ref};
                    if (!relation_satisfied(after, rel, th_)) fail("relations");
                }
            }
            break;
        }
        case EditAction::remove: {
            if (target) {
                if (after.find(target->id)) fail("objects");
            }
            break;
        }
        case EditAction::edit_attribute: {
            if (!target) break;
            // Replacement counts as a valid realization: an object with the
            // edited attribute set must exist either in place or as a swap.
            AttributeSet wanted = target->attrs;
            wanted.set(edit.attribute, edit.value);
            const SceneObject* z = nullptr;
            if (auto* same = after.find(target->id); same && same->category == target->category &&
                                                     same->attrs == wanted) {
                z = same;
            } else if (!after.find(target->id)) {
                for (auto& o : after.objects)
                    if (!before.find(o.id) && o.category == target->category && o.attrs == wanted)
                        z = &o;
            }
            if (!z) {
                fail("attributes");
            } else {
                touchable.insert(z->id);
                if (coord_drift(z->bbox, target->bbox) > th_.target_drift_tolerance + 1e-9)
                    fail("positions");
                if (z->bbox.area() < th_.min_object_area) fail("positions");
            }
            break;
        }
        case EditAction::replace: {
            if (!target) break;
            if (after.find(target->id)) fail("objects");
            std::vector<const SceneObject*> added;
            for (auto& o : after.objects)
                if (!before.find(o.id)) added.push_back(&o);
            if (added.size() != 1) {
                fail("objects");
            } else {
                const SceneObject* z = added[0];
                touchable.insert(z->id);
                ObjectSelector want{edit.category, edit.attrs, std::nullopt};
                if (!want.matches(*z)) fail(edit.category == z->category ? "attributes" : "objects");
                if (z->bbox.area() < th_.min_object_area) fail("positions");
                if (coord_drift(z->bbox, target->bbox) > th_.target_drift_tolerance + 1e-9)
                    fail("positions");
            }
            break;
        }
        case EditAction::move: {
            if (!target) break;
            const SceneObject* z = after.find(target->id);
            if (!z) {
                fail("objects");
            } else {
                touchable.insert(z->id);
                if (z->attrs != target->attrs) fail("attributes");
                if (z->bbox.area() < th_.min_object_area) fail("positions");
                if (edit.dest_bbox && coord_drift(z->bbox, *edit.dest_bbox) >
                                          th_.target_drift_tolerance + 1e-9)
                    fail("positions");
                for (auto& hint : edit.placement) {
                    Relation rel{hint.kind, {z->category, {}, z->id}, hint.ref};
                    if (!relation_satisfied(after, rel, th_)) fail("relations");
                }
            }
            break;
        }
        case EditAction::style: {
            if (!after.background.count(edit.style)) fail("background");
            for (auto& token : before.background)
                if (!after.background.count(token)) fail("background");
            break;
        }
        case EditAction::instruction_passthrough:
            // Not symbolically judgeable; the spec-level check at the chain
            // end is the gate for these.
            v.pass = true;
            v.score = 1.0;
            return v;
    }

    // Collateral: bystanders unchanged, nothing else appeared.
    for (auto& o : before.objects) {
        if (touchable.count(o.id)) continue;
        const SceneObject* now = after.find(o.id);
        if (!now) {
            fail("objects");
            continue;
        }
        if (now->attrs != o.attrs || now->category != o.category) fail("objects");
        if (coord_drift(now->bbox, o.bbox) > th_.bbox_drift_tolerance + 1e-9) fail("objects");
    }
    for (auto& o : after.objects)
        if (!before.find(o.id) && !touchable.count(o.id)) fail("objects");

    v.pass = std::all_of(v.aspects.begin(), v.aspects.end(), [](auto& kv) { return kv.second; });
    v.score = v.pass ? 1.0 : 0.0;
    return v;
}

}  // namespace genorch
