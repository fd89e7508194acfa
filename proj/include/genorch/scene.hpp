#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "genorch/errors.hpp"

namespace genorch {

// Geometry thresholds for relation semantics and edit verification.
// All values are explicit config so that verdicts are reproducible.
struct Thresholds {
    double next_to_distance = 0.25;      // centroid distance for next_to
    double on_epsilon = 0.05;            // vertical adjacency tolerance for on
    double bbox_drift_tolerance = 0.02;  // bystander drift allowed per coordinate
    double target_drift_tolerance = 0.05;
    double min_object_area = 0.005;      // plausibility guard ("too small")
};

// Normalized canvas box, origin top-left, all coordinates in [0,1].
struct BBox {
    double x = 0, y = 0, w = 0, h = 0;

    bool valid() const {
        return x >= 0 && y >= 0 && w > 0 && h > 0 && x + w <= 1.0 + 1e-9 && y + h <= 1.0 + 1e-9;
    }
    double cx() const { return x + w / 2; }
    double cy() const { return y + h / 2; }
    double area() const { return w * h; }
    double right() const { return x + w; }
    double bottom() const { return y + h; }

    bool operator==(const BBox& o) const = default;
};

// Clamp a box back into the canvas, preserving size where possible.
BBox clamp_bbox(BBox b, double min_side = 0.01);

double bbox_iou(const BBox& a, const BBox& b);

// Attribute values are tokens from a closed, configured vocabulary.
// An absent attribute means "unconstrained" in specs and "unspecified"
// in graphs.
struct AttributeSet {
    std::optional<std::string> color;
    std::optional<std::string> shape;
    std::optional<std::string> texture;

    bool empty() const { return !color && !shape && !texture; }
    size_t constrained_count() const {
        return (color ? 1 : 0) + (shape ? 1 : 0) + (texture ? 1 : 0);
    }
    std::optional<std::string> get(const std::string& name) const;
    void set(const std::string& name, const std::string& value);
    void unset(const std::string& name);

    // True when every attribute constrained here matches `other` exactly.
    bool satisfied_by(const AttributeSet& other) const;

    bool operator==(const AttributeSet& o) const = default;
};

struct SceneObject {
    std::string id;
    std::string category;
    AttributeSet attrs;
    BBox bbox;

    bool operator==(const SceneObject& o) const = default;
};

// Simulated world state standing in for a generated image.
struct SceneGraph {
    std::vector<SceneObject> objects;
    std::set<std::string> background;
    std::vector<std::pair<std::string, std::string>> provenance;  // (node id, tool name)

    const SceneObject* find(const std::string& id) const;
    SceneObject* find(const std::string& id);
    bool ids_unique() const;
    std::string fresh_id() const;

    bool operator==(const SceneGraph& o) const = default;
};

enum class RelationKind { left_of, right_of, above, below, next_to, on };

std::string to_string(RelationKind k);
RelationKind relation_kind_from_string(const std::string& s);

// Category plus attribute constraints; the anchor pins a specific object id
// when the edit was derived from a discrepancy report (selectors alone can
// be ambiguous, e.g. two black sheep).
struct ObjectSelector {
    std::string category;
    AttributeSet attrs;
    std::optional<std::string> anchor_id;

    bool matches(const SceneObject& obj) const {
        return obj.category == category && attrs.satisfied_by(obj.attrs);
    }
    bool operator==(const ObjectSelector& o) const = default;
};

struct Relation {
    RelationKind kind = RelationKind::left_of;
    ObjectSelector subject;
    ObjectSelector object;

    bool operator==(const Relation& o) const = default;
};

struct RequiredEntry {
    std::string category;
    AttributeSet attrs;
    int count = 1;

    bool operator==(const RequiredEntry& o) const = default;
};

// Decomposed generation target.
struct SceneSpec {
    std::vector<RequiredEntry> required;
    std::vector<Relation> relations;
    std::set<std::string> background;
    bool forbid_extraneous = false;

    bool empty() const {
        return required.empty() && relations.empty() && background.empty() && !forbid_extraneous;
    }
    int total_object_count() const;

    bool operator==(const SceneSpec& o) const = default;
};

struct WrongAttribute {
    std::string object_id;
    std::string attribute;
    std::string found;  // "unspecified" when the graph object has no value
    std::string wanted;

    bool operator==(const WrongAttribute& o) const = default;
};

struct MissingEntry {
    std::string category;
    AttributeSet attrs;
    int deficit = 0;

    bool operator==(const MissingEntry& o) const = default;
};

// Exactly the unsatisfied constraints of a (graph, spec) pair, plus the
// fraction of satisfied constraints. Drives verification and correction.
struct DiscrepancyReport {
    std::vector<MissingEntry> missing;
    std::vector<WrongAttribute> wrong_attribute;
    std::vector<Relation> relation_violations;
    std::vector<std::string> extraneous;
    std::set<std::string> background_mismatch;
    double score = 1.0;

    int satisfied = 0;
    int total = 0;

    bool empty() const {
        return missing.empty() && wrong_attribute.empty() && relation_violations.empty() &&
               extraneous.empty() && background_mismatch.empty();
    }

    // Pairing chosen by the matcher: graph object id -> (entry index, unit index).
    std::map<std::string, std::pair<int, int>> assignment;
};

// Resolve a selector to object indices in the graph (anchor first, then
// category + attribute match).
std::vector<size_t> resolve_selector(const SceneGraph& graph, const ObjectSelector& sel);

// Strict single-pair relation check. Preconditions: each selector resolves
// to exactly one object and the two are distinct; otherwise UnresolvedSelector.
bool relation_holds(const SceneGraph& graph, const Relation& rel, const Thresholds& th = {});

// Constraint-level relation check used by scoring: true iff both selector
// sets are non-empty and every subject/object pair satisfies the geometry.
// Never throws; unresolvable means unsatisfied.
bool relation_satisfied(const SceneGraph& graph, const Relation& rel, const Thresholds& th = {});

// Geometry predicate on two boxes (subject vs object).
bool relation_geometry(const BBox& subject, const BBox& object, RelationKind kind,
                       const Thresholds& th);

DiscrepancyReport diff(const SceneGraph& graph, const SceneSpec& spec, const Thresholds& th = {});

double spec_score(const SceneGraph& graph, const SceneSpec& spec, const Thresholds& th = {});

// Spec-level selector resolution: does the selector pick out this entry?
bool selector_matches_entry(const ObjectSelector& sel, const RequiredEntry& entry);

// Kahn topological order over required entries with one edge per relation,
// object entry before subject entry; ties by entry index. nullopt on cycle.
std::optional<std::vector<int>> entry_topo_order(const SceneSpec& spec);

}  // namespace genorch
