#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "genorch/decompose.hpp"
#include "genorch/scene.hpp"

namespace genorch {

using json = nlohmann::json;

// Capability class of a tool; the unit of selection.
enum class Skill {
    text_to_image,
    layout_to_image,
    image_to_image,
    customization_single,
    customization_multi,
    super_resolution,
    text_rendering,
    condition_to_image,
    add,
    remove,
    replace,
    edit_attribute,
    instruction_edit,
    drag_detail,
    drag_object,
    style_transfer,
};

std::string to_string(Skill s);
Skill skill_from_string(const std::string& s);

enum class SlotKind { text, bbox, object_name, layout, subject_image, condition, style_image, mask };

std::string to_string(SlotKind k);
SlotKind slot_kind_from_string(const std::string& s);

struct InputSlot {
    std::string name;
    SlotKind kind = SlotKind::text;

    bool operator==(const InputSlot& o) const = default;
};

struct ToolDescriptor {
    Skill skill = Skill::text_to_image;
    std::string name;
    std::vector<InputSlot> required_inputs;
    std::string characteristics;
    double cost = 0.0;
    std::string condition_kind;  // condition_to_image tools only

    bool operator==(const ToolDescriptor& o) const = default;
};

// Marker for inputs the selector could not determine; the auxiliary
// pipeline fills these before execution.
inline constexpr const char* kMissingMarker = "<MISSING>";

struct Selection {
    std::string tool_name;
    json inputs = json::object();  // slot name -> value or kMissingMarker

    bool has_missing() const;
    bool operator==(const Selection& o) const = default;
};

struct Detection {
    std::string name;
    BBox bbox;
    double confidence = 1.0;
};

struct GenerationRequest {
    std::string prompt;
    SceneSpec spec;
    Attachments attachments;
};

using Action = std::variant<GenerationRequest, AtomicEdit>;

// Everything the selector sees: the instruction, the candidate tools, the
// detector output for spatial grounding, and the decomposed spec if any.
struct SelectionContext {
    std::string instruction;
    std::vector<ToolDescriptor> tools;
    std::vector<Detection> detections;
    std::optional<SceneSpec> spec;
    Attachments attachments;
};

class Registry {
public:
    Registry() = default;

    void register_tool(const ToolDescriptor& desc);  // throws DuplicateName
    const ToolDescriptor* lookup(const std::string& name) const;
    std::vector<ToolDescriptor> by_skill(Skill s) const;
    size_t size() const { return tools_.size(); }
    const std::vector<ToolDescriptor>& all() const { return tools_; }

    // Every tool whose skill can realize the action, best first. Ordering:
    // suitability score descending, ties by registration order. See
    // docs/tool-selection.md for the scoring table.
    std::vector<ToolDescriptor> rank_tools(const Action& action, const SelectionContext& ctx) const;

    double suitability(const ToolDescriptor& tool, const Action& action,
                       const SelectionContext& ctx) const;

    static bool skill_can_realize(Skill skill, const Action& action, const SelectionContext& ctx);
    static bool is_direct_match(Skill skill, const Action& action);

    // The stock tool roster the engine ships with.
    static Registry standard();

private:
    std::vector<ToolDescriptor> tools_;
};

// The three-part selection prompt: task instruction, tool introductions,
// position information.
std::string render_selection_prompt(const SelectionContext& ctx);

// Parse a selector response. Tolerates surrounding prose; unknown keys are
// ignored. Throws MalformedSelection on unparseable text or unknown tool.
Selection parse_selection(const std::string& text, const Registry& registry);

std::string selection_to_wire(const Selection& sel);

}  // namespace genorch
