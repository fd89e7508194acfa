#pragma once

#include <optional>
#include <string>
#include <vector>

#include "genorch/scene.hpp"
#include "genorch/vocab.hpp"

namespace genorch {

// References attached to an instruction. source_scene marks editing tasks;
// subject refs and condition sources gate customization / condition tools.
struct Attachments {
    std::optional<std::string> source_scene;
    std::vector<std::string> subject_refs;
    std::optional<std::string> condition_source;

    bool operator==(const Attachments& o) const = default;
};

enum class TaskKind { generation, editing };

struct TaskInstruction {
    std::string text;
    std::optional<TaskKind> kind_hint;
    Attachments attachments;
};

enum class EditAction { add, remove, replace, edit_attribute, move, style, instruction_passthrough };

std::string to_string(EditAction a);
EditAction edit_action_from_string(const std::string& s);

// Placement constraint carried by add/move edits: the edited object must
// satisfy `kind` against every object matching `ref`.
struct RelationHint {
    RelationKind kind = RelationKind::left_of;
    ObjectSelector ref;

    bool operator==(const RelationHint& o) const = default;
};

// One simple editing action. Exactly the params required by the action are
// meaningful; validate() enforces that.
struct AtomicEdit {
    EditAction action = EditAction::add;
    std::optional<ObjectSelector> target;  // absent for add/style/passthrough

    std::string category;  // add / replace: new object
    AttributeSet attrs;
    std::string attribute;  // edit_attribute
    std::string value;
    std::optional<BBox> dest_bbox;        // move / add explicit placement
    std::vector<RelationHint> placement;  // add / move relational placement
    std::string style;                    // style
    std::string raw_text;                 // instruction_passthrough

    void validate() const;  // throws ConfigError on malformed params
    bool operator==(const AtomicEdit& o) const = default;
};

class Decomposer {
public:
    explicit Decomposer(Vocab vocab = {}) : vocab_(std::move(vocab)) {}

    TaskKind classify_task(const TaskInstruction& instr) const;

    // Constrained grammar; see docs/grammar.md. Deterministic: identical
    // prompt yields an identical spec.
    SceneSpec decompose_generation(const std::string& prompt) const;

    std::vector<AtomicEdit> decompose_editing(const TaskInstruction& instr) const;

    // Map a discrepancy report to correction edits, ordered
    // removes -> attribute edits -> adds -> moves.
    std::vector<AtomicEdit> discrepancies_to_edits(const DiscrepancyReport& report,
                                                   const SceneSpec& spec,
                                                   const SceneGraph& graph) const;

    // Canonical clause for an edit; parses back to the same action under
    // decompose_editing (anchors are not representable in text).
    std::string render_edit(const AtomicEdit& edit) const;

    // Canonical prompt for a spec; parses back to the same spec.
    std::string render_spec(const SceneSpec& spec) const;

    const Vocab& vocab() const { return vocab_; }

private:
    Vocab vocab_;
    std::optional<AtomicEdit> parse_edit_clause(const std::string& clause) const;
};

std::string render_selector(const ObjectSelector& sel);

}  // namespace genorch
