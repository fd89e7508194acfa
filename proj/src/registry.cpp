#include "genorch/registry.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace genorch {

namespace {

const std::map<std::string, Skill> kSkillNames = {
    {"text_to_image", Skill::text_to_image},
    {"layout_to_image", Skill::layout_to_image},
    {"image_to_image", Skill::image_to_image},
    {"customization_single", Skill::customization_single},
    {"customization_multi", Skill::customization_multi},
    {"super_resolution", Skill::super_resolution},
    {"text_rendering", Skill::text_rendering},
    {"condition_to_image", Skill::condition_to_image},
    {"add", Skill::add},
    {"remove", Skill::remove},
    {"replace", Skill::replace},
    {"edit_attribute", Skill::edit_attribute},
    {"instruction_edit", Skill::instruction_edit},
    {"drag_detail", Skill::drag_detail},
    {"drag_object", Skill::drag_object},
    {"style_transfer", Skill::style_transfer},
};

const std::map<std::string, SlotKind> kSlotKinds = {
    {"text", SlotKind::text},
    {"bbox", SlotKind::bbox},
    {"object_name", SlotKind::object_name},
    {"layout", SlotKind::layout},
    {"subject_image", SlotKind::subject_image},
    {"condition", SlotKind::condition},
    {"style_image", SlotKind::style_image},
    {"mask", SlotKind::mask},
};

bool is_generation_skill(Skill s) {
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

bool spec_wants_text_render(const SceneSpec& spec) {
    for (auto& t : spec.background)
        if (t.rfind("render_text:", 0) == 0) return true;
    return false;
}

}  // namespace

std::string to_string(Skill s) {
    for (auto& [name, skill] : kSkillNames)
        if (skill == s) return name;
    return "text_to_image";
}

Skill skill_from_string(const std::string& s) {
    if (auto it = kSkillNames.find(s); it != kSkillNames.end()) return it->second;
    throw ConfigError("unknown skill: " + s);
}

std::string to_string(SlotKind k) {
    for (auto& [name, kind] : kSlotKinds)
        if (kind == k) return name;
    return "text";
}

SlotKind slot_kind_from_string(const std::string& s) {
    if (auto it = kSlotKinds.find(s); it != kSlotKinds.end()) return it->second;
    throw ConfigError("unknown slot kind: " + s);
}

bool Selection::has_missing() const {
    for (auto& [key, value] : inputs.items()) {
        (void)key;
        if (value.is_string() && value.get<std::string>() == kMissingMarker) return true;
    }
    return false;
}

void Registry::register_tool(const ToolDescriptor& desc) {
    if (lookup(desc.name)) throw DuplicateName("tool already registered: " + desc.name);
    tools_.push_back(desc);
}

const ToolDescriptor* Registry::lookup(const std::string& name) const {
    for (auto& t : tools_)
        if (t.name == name) return &t;
    return nullptr;
}

std::vector<ToolDescriptor> Registry::by_skill(Skill s) const {
    std::vector<ToolDescriptor> out;
    for (auto& t : tools_)
        if (t.skill == s) out.push_back(t);
    return out;
}

bool Registry::skill_can_realize(Skill skill, const Action& action, const SelectionContext& ctx) {
    if (std::holds_alternative<GenerationRequest>(action)) {
        switch (skill) {
            case Skill::text_to_image:
            case Skill::layout_to_image:
            case Skill::text_rendering:
                return true;
            case Skill::customization_single:
                return ctx.attachments.subject_refs.size() == 1;
            case Skill::customization_multi:
                return ctx.attachments.subject_refs.size() >= 2;
            case Skill::condition_to_image:
                return ctx.attachments.condition_source.has_value();
            case Skill::image_to_image:
                return ctx.attachments.source_scene.has_value();
            default:
                return false;
        }
    }
    const AtomicEdit& edit = std::get<AtomicEdit>(action);
    switch (edit.action) {
        case EditAction::add:
            return skill == Skill::add || skill == Skill::instruction_edit;
        case EditAction::remove:
            return skill == Skill::remove || skill == Skill::instruction_edit;
        case EditAction::replace:
            return skill == Skill::replace || skill == Skill::instruction_edit;
        case EditAction::edit_attribute:
            return skill == Skill::edit_attribute || skill == Skill::replace ||
                   skill == Skill::instruction_edit;
        case EditAction::move:
            return skill == Skill::drag_object || skill == Skill::instruction_edit;
        case EditAction::style:
            return skill == Skill::style_transfer || skill == Skill::instruction_edit;
        case EditAction::instruction_passthrough:
            return skill == Skill::instruction_edit;
    }
    return false;
}

bool Registry::is_direct_match(Skill skill, const Action& action) {
    if (std::holds_alternative<GenerationRequest>(action)) return is_generation_skill(skill);
    const AtomicEdit& edit = std::get<AtomicEdit>(action);
    switch (edit.action) {
        case EditAction::add: return skill == Skill::add;
        case EditAction::remove: return skill == Skill::remove;
        case EditAction::replace: return skill == Skill::replace;
        case EditAction::edit_attribute: return skill == Skill::edit_attribute;
        case EditAction::move: return skill == Skill::drag_object;
        case EditAction::style: return skill == Skill::style_transfer;
        case EditAction::instruction_passthrough: return skill == Skill::instruction_edit;
    }
    return false;
}

double Registry::suitability(const ToolDescriptor& tool, const Action& action,
                             const SelectionContext& ctx) const {
    double score = is_direct_match(tool.skill, action) ? 2.0 : 1.0;
    if (auto* req = std::get_if<GenerationRequest>(&action)) {
        bool compositional = req->spec.total_object_count() >= 3 || !req->spec.relations.empty();
        if (compositional && tool.skill == Skill::layout_to_image) score += 2.0;
        if (spec_wants_text_render(req->spec) && tool.skill == Skill::text_rendering) score += 3.0;
        if (!ctx.attachments.subject_refs.empty() &&
            (tool.skill == Skill::customization_single || tool.skill == Skill::customization_multi))
            score += 3.0;
    }
    return score - tool.cost;
}

std::vector<ToolDescriptor> Registry::rank_tools(const Action& action,
                                                 const SelectionContext& ctx) const {
    std::vector<std::pair<double, size_t>> scored;
    for (size_t i = 0; i < tools_.size(); ++i) {
        if (!skill_can_realize(tools_[i].skill, action, ctx)) continue;
        scored.push_back({suitability(tools_[i], action, ctx), i});
    }
    if (scored.empty()) throw NoCapableTool("no registered tool can realize the action");
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first > b.first;  // ties keep registration order
    });
    std::vector<ToolDescriptor> out;
    for (auto& [s, i] : scored) out.push_back(tools_[i]);
    return out;
}

Registry Registry::standard() {
    Registry r;
    auto slot = [](const std::string& name, SlotKind kind) { return InputSlot{name, kind}; };
    // Generation tools.
    r.register_tool({Skill::text_to_image, "SDXL", {slot("text", SlotKind::text)},
                     "general-purpose text-to-image model with strong overall quality", 0.10, ""});
    r.register_tool({Skill::text_to_image, "PixArt-alpha", {slot("text", SlotKind::text)},
                     "transformer text-to-image model, fast with good prompt following", 0.15, ""});
    r.register_tool({Skill::image_to_image, "StableDiffusion-v2",
                     {slot("text", SlotKind::text), slot("source_image", SlotKind::subject_image)},
                     "regenerates an image guided by a source image and a text prompt", 0.20, ""});
    r.register_tool({Skill::layout_to_image, "LMD",
                     {slot("text", SlotKind::text), slot("layout", SlotKind::layout)},
                     "follows the given box layout strictly; suited to prompts with many objects "
                     "or spatial relations",
                     0.20, ""});
    r.register_tool({Skill::layout_to_image, "BoxDiff",
                     {slot("text", SlotKind::text), slot("layout", SlotKind::layout)},
                     "follows the given box layout loosely", 0.30, ""});
    r.register_tool({Skill::customization_single, "BLIP-Diffusion",
                     {slot("text", SlotKind::text), slot("subject_image", SlotKind::subject_image)},
                     "generates around a single user-provided subject", 0.30, ""});
    r.register_tool({Skill::customization_multi, "Lambda-ECLIPSE",
                     {slot("text", SlotKind::text), slot("subject_images", SlotKind::subject_image)},
                     "composes multiple user-provided subjects in one scene", 0.35, ""});
    r.register_tool({Skill::super_resolution, "SDXL-Refiner",
                     {slot("source_image", SlotKind::subject_image)},
                     "upscales and sharpens an existing image", 0.20, ""});
    r.register_tool({Skill::text_rendering, "TextDiffuser", {slot("text", SlotKind::text)},
                     "renders legible written text inside the generated image", 0.30, ""});
    r.register_tool({Skill::condition_to_image, "ControlNet-canny",
                     {slot("text", SlotKind::text), slot("condition", SlotKind::condition)},
                     "generates guided by a canny edge map", 0.30, "canny"});
    r.register_tool({Skill::condition_to_image, "ControlNet-depth",
                     {slot("text", SlotKind::text), slot("condition", SlotKind::condition)},
                     "generates guided by a depth map", 0.30, "depth"});
    // Editing tools.
    r.register_tool({Skill::add, "AnyDoor-Add",
                     {slot("object_name", SlotKind::object_name), slot("object_bbox", SlotKind::bbox)},
                     "inserts a named object at a target box", 0.20, ""});
    r.register_tool({Skill::remove, "LaMa",
                     {slot("object_name", SlotKind::object_name), slot("object_bbox", SlotKind::bbox)},
                     "inpaints a region to remove the object cleanly", 0.10, ""});
    r.register_tool({Skill::replace, "AnyDoor-Replace",
                     {slot("object_name", SlotKind::object_name), slot("object_bbox", SlotKind::bbox),
                      slot("replacement", SlotKind::object_name)},
                     "swaps the object in a box for a new one", 0.20, ""});
    r.register_tool({Skill::edit_attribute, "DiffEdit",
                     {slot("object_name", SlotKind::object_name), slot("object_bbox", SlotKind::bbox),
                      slot("attribute", SlotKind::text), slot("value", SlotKind::text)},
                     "changes an object attribute in place via masked denoising", 0.10, ""});
    r.register_tool({Skill::instruction_edit, "MagicBrush",
                     {slot("instruction", SlotKind::text)},
                     "applies a free-form natural-language edit instruction", 0.25, ""});
    r.register_tool({Skill::drag_detail, "DragDiffusion",
                     {slot("object_name", SlotKind::object_name), slot("object_bbox", SlotKind::bbox),
                      slot("target_bbox", SlotKind::bbox)},
                     "drags fine details toward target points", 0.20, ""});
    r.register_tool({Skill::drag_object, "DragonDiffusion",
                     {slot("object_name", SlotKind::object_name), slot("object_bbox", SlotKind::bbox),
                      slot("target_bbox", SlotKind::bbox)},
                     "relocates a whole object to a target box", 0.20, ""});
    r.register_tool({Skill::style_transfer, "InST", {slot("style", SlotKind::text)},
                     "restyles the whole image to match a reference style", 0.20, ""});
    return r;
}

namespace {
std::string fmt_coord(double v) {
    char buf[32];
    snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}
}  // namespace

std::string render_selection_prompt(const SelectionContext& ctx) {
    std::string out;
    out += "Task instruction:\n";
    out += ctx.instruction + "\n";
    out += "Select the single most suitable tool for this task. The primary criterion is the "
           "suitability of the tool, not the content of the given inputs; missing inputs are "
           "generated automatically. Respond exactly in the format "
           "{\"tool_name\": name, \"input\": {slot: value}} and annotate missing inputs with "
           "\"<MISSING>\".\n";
    out += "\nTool introductions:\n";
    for (auto& t : ctx.tools) {
        out += "- skill: " + to_string(t.skill) + ", name: " + t.name + "; required inputs: ";
        for (size_t i = 0; i < t.required_inputs.size(); ++i)
            out += (i ? ", " : "") + t.required_inputs[i].name;
        if (t.required_inputs.empty()) out += "none";
        out += "; characteristics: " + t.characteristics + "\n";
    }
    out += "\nPosition information:\n";
    if (ctx.detections.empty()) {
        out += "none\n";
    } else {
        for (auto& d : ctx.detections)
            out += d.name + ": (" + fmt_coord(d.bbox.x) + ", " + fmt_coord(d.bbox.y) + ", " +
                   fmt_coord(d.bbox.w) + ", " + fmt_coord(d.bbox.h) + ")\n";
    }
    return out;
}

Selection parse_selection(const std::string& text, const Registry& registry) {
    size_t open = text.find('{');
    size_t close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw MalformedSelection("no JSON object found in selection text");
    json j;
    try {
        j = json::parse(text.substr(open, close - open + 1));
    } catch (const json::exception& e) {
        throw MalformedSelection(std::string("selection is not valid JSON: ") + e.what());
    }
    if (!j.contains("tool_name") || !j["tool_name"].is_string())
        throw MalformedSelection("selection lacks a tool_name string");
    Selection sel;
    sel.tool_name = j["tool_name"].get<std::string>();
    if (!registry.lookup(sel.tool_name))
        throw MalformedSelection("unknown tool_name: " + sel.tool_name);
    if (j.contains("input") && j["input"].is_object()) sel.inputs = j["input"];
    return sel;
}

std::string selection_to_wire(const Selection& sel) {
    json j;
    j["tool_name"] = sel.tool_name;
    j["input"] = sel.inputs;
    return j.dump();
}

}  // namespace genorch
