#pragma once

#include <optional>
#include <string>
#include <vector>

#include "genorch/registry.hpp"
#include "genorch/rng.hpp"
#include "genorch/scene.hpp"

namespace genorch {

// Simulated detector settings. sigma = 0 reproduces scene boxes exactly;
// otherwise each coordinate is jittered by sigma * u, u drawn uniformly
// from [-1, 1) out of the (seed, "det:" + object id) stream, and
// confidence = clamp(1 - max |delta|, 0.01, 1).
struct DetectorConfig {
    double sigma = 0.0;
    uint64_t seed = 0;
};

std::vector<Detection> detect_objects(const SceneGraph& state, const DetectorConfig& cfg = {});

struct LayoutPlacement {
    int entry_index = 0;
    int unit_index = 0;
    std::string category;
    AttributeSet attrs;
    BBox bbox;
};

// Deterministic layout: units placed on a ceil(sqrt(N)) grid in
// (relation-topological, spec) order, then projected cell by cell until
// every relation holds. Throws PlacementInfeasible on cyclic or
// geometrically contradictory relation sets.
std::vector<LayoutPlacement> generate_layout(const SceneSpec& spec, const Thresholds& th = {});

// Opaque, restart-stable condition token for a source handle.
std::string extract_condition(const std::string& kind, const std::string& source_handle);

// One placement requirement for a box being solved: the box must satisfy
// `kind` against every object matching `ref` (as subject, or as the
// relation object when as_object is set).
struct PlacementConstraint {
    RelationKind kind = RelationKind::left_of;
    ObjectSelector ref;
    bool as_object = false;
};

// Find a box of the given size satisfying all constraints against `state`.
// Candidates: constraint-specific constructions first, then a scan grid,
// ordered by distance to `near` when provided. Constraints whose ref
// resolves to nothing are skipped.
std::optional<BBox> solve_constrained_bbox(const SceneGraph& state,
                                           const std::vector<PlacementConstraint>& constraints,
                                           std::pair<double, double> size, const Thresholds& th,
                                           std::optional<BBox> near = std::nullopt);

// Action-side context the compensator needs to fill position slots.
struct CompensationHints {
    std::optional<ObjectSelector> target;
    std::optional<BBox> anchor_bbox;  // resolved target box, when known
    std::vector<PlacementConstraint> constraints;
    std::optional<std::pair<double, double>> size;
    bool is_new_object = false;
    std::optional<std::string> condition_kind;
};

class PositionPipeline {
public:
    PositionPipeline(Thresholds th = {}, DetectorConfig det = {}, std::string aux_endpoint = "")
        : th_(th), det_(det), aux_endpoint_(std::move(aux_endpoint)) {}

    // Detector / layout generator / condition extractor, simulated by
    // default; with an aux endpoint configured they delegate over the wire
    // (skills aux.detect, aux.layout, aux.condition.*) keeping the same
    // output schema. Endpoint failures raise EndpointError.
    std::vector<Detection> detect(const SceneGraph& state) const;
    std::vector<LayoutPlacement> layout(const SceneSpec& spec) const;
    std::string condition(const std::string& kind, const std::string& source) const;

    // Fill every MISSING slot of the selection via the auxiliary tools:
    // object boxes from detections, layouts from the layout generator,
    // conditions from the extractor. Throws CompensationFailed naming the
    // slot it could not bind. Idempotent.
    //
    // Detection matching differs from scene-model selector resolution on
    // purpose: detectors legitimately return same-category duplicates, so
    // ambiguity resolves by anchor overlap then confidence instead of
    // erroring.
    Selection compensate_inputs(const Selection& sel, const SelectionContext& ctx,
                                const Registry& registry,
                                const CompensationHints& hints = {}) const;

    const Thresholds& thresholds() const { return th_; }
    const DetectorConfig& detector() const { return det_; }

private:
    Thresholds th_;
    DetectorConfig det_;
    std::string aux_endpoint_;
};

}  // namespace genorch
