#pragma once

#include <json.hpp>

#include "genorch/decompose.hpp"
#include "genorch/registry.hpp"
#include "genorch/scene.hpp"
#include "genorch/sim.hpp"
#include "genorch/verify.hpp"

// JSON mappings for every serialized domain type. Key order is nlohmann's
// sorted-object order everywhere, which keeps trace bytes reproducible.

namespace genorch {

void to_json(json& j, const BBox& b);
void from_json(const json& j, BBox& b);

void to_json(json& j, const AttributeSet& a);
void from_json(const json& j, AttributeSet& a);

void to_json(json& j, const SceneObject& o);
void from_json(const json& j, SceneObject& o);

void to_json(json& j, const SceneGraph& g);
void from_json(const json& j, SceneGraph& g);

void to_json(json& j, const ObjectSelector& s);
void from_json(const json& j, ObjectSelector& s);

void to_json(json& j, const Relation& r);
void from_json(const json& j, Relation& r);

void to_json(json& j, const RequiredEntry& e);
void from_json(const json& j, RequiredEntry& e);

void to_json(json& j, const SceneSpec& s);
void from_json(const json& j, SceneSpec& s);

void to_json(json& j, const DiscrepancyReport& r);

void to_json(json& j, const RelationHint& h);
void from_json(const json& j, RelationHint& h);

void to_json(json& j, const AtomicEdit& e);
void from_json(const json& j, AtomicEdit& e);

void to_json(json& j, const InputSlot& s);
void from_json(const json& j, InputSlot& s);

void to_json(json& j, const ToolDescriptor& t);
void from_json(const json& j, ToolDescriptor& t);

void to_json(json& j, const Verdict& v);
void from_json(const json& j, Verdict& v);

void to_json(json& j, const Detection& d);
void from_json(const json& j, Detection& d);

void to_json(json& j, const Vocab& v);
void from_json(const json& j, Vocab& v);

void to_json(json& j, const Thresholds& t);
void from_json(const json& j, Thresholds& t);

void to_json(json& j, const WorldConfig& w);
void from_json(const json& j, WorldConfig& w);

}  // namespace genorch
