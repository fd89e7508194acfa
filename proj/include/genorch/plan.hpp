#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "genorch/decompose.hpp"
#include "genorch/position.hpp"
#include "genorch/registry.hpp"
#include "genorch/verify.hpp"

namespace genorch {

enum class NodeKind { initial, generation, editing };
enum class NodeStatus { pending, succeeded, failed, pruned };

std::string to_string(NodeKind k);
std::string to_string(NodeStatus s);

// One action in the tree. Node ids are structural paths ("root.1.0"), so a
// node's id pins both its position and its randomness stream, and a trace
// alone reconstructs the realized tree.
struct PlanNode {
    std::string id;
    NodeKind kind = NodeKind::initial;
    std::optional<Action> action;
    std::optional<ToolDescriptor> tool;
    NodeStatus status = NodeStatus::pending;
    int reseed_salt = 0;  // >0 marks a seed-variation alternate

    std::vector<std::unique_ptr<PlanNode>> children;

    // Chain continuation, realized as children only after this node passes
    // verification. Sibling alternates share it by construction.
    std::vector<AtomicEdit> remaining;

    // The remove half of a remove+add fallback for attribute edits and
    // replacements; remaining[0] is the synthetic add.
    bool is_composite_head = false;

    std::string correction_fingerprint;  // attach idempotence

    const AtomicEdit* edit() const {
        return action ? std::get_if<AtomicEdit>(&*action) : nullptr;
    }
    const GenerationRequest* request() const {
        return action ? std::get_if<GenerationRequest>(&*action) : nullptr;
    }
};

struct PlanTree {
    std::unique_ptr<PlanNode> root;
    TaskKind kind = TaskKind::generation;
    std::optional<SceneSpec> spec;   // generation jobs
    std::vector<AtomicEdit> edits;   // editing jobs
    SelectionContext base_context;

    PlanNode* find(const std::string& id);
};

struct Budget {
    int max_nodes = 32;
    int max_branching = 2;  // binary tree by default
};

struct BuildOptions {
    Budget budget;
    bool composite_fallback = false;  // remove+add alternate for attr edits
    bool reseed_alternates = false;   // fill spare sibling slots by reseeding
    bool corrections_enabled = true;  // off = selection-only planning
};

// Append-only execution audit. Events serialize to JSON Lines.
struct TraversalTrace {
    std::vector<json> events;

    void push(json event) { events.push_back(std::move(event)); }
    std::string to_jsonl() const;
};

struct Outcome {
    SceneGraph final_state;
    bool success = false;
    double best_score = 0.0;
    TraversalTrace trace;
    int nodes_executed = 0;
};

// Tool execution boundary: in-process simulation or a wire adapter.
class ToolBackend {
public:
    virtual ~ToolBackend() = default;
    virtual SceneGraph apply(const ToolDescriptor& tool, const json& inputs,
                             const SceneGraph& state, const std::string& node_id) = 0;
};

PlanTree build_tree(TaskKind kind, const GenerationRequest& request,
                    const std::vector<AtomicEdit>& edits, const Registry& registry,
                    const SelectionContext& ctx, const BuildOptions& opts);

// Turn a discrepancy report into an editing chain under a generation node.
// Idempotent per (node, report); an empty report attaches nothing.
void attach_correction_subtree(PlanNode& gen_node, const DiscrepancyReport& report,
                               const Registry& registry, const Decomposer& decomposer,
                               const SceneSpec& spec, const SceneGraph& state,
                               const BuildOptions& opts);

// Bind inputs for the node's action, compensate missing position slots, and
// invoke the tool. The input state is untouched; failures surface as
// CompensationFailed / AdapterError and are treated as node failure by
// traverse.
SceneGraph execute_node(const PlanNode& node, const SceneGraph& state, ToolBackend& backend,
                        const PositionPipeline& pipeline, const Registry& registry,
                        const Decomposer& decomposer);

// Next untried generation sibling, or nullptr when none remains.
PlanNode* switch_generation_tool(PlanTree& tree, const PlanNode& current);

// Pre-order traversal with verification gates: pass descends leftmost and
// prunes siblings, fail removes the subtree and backtracks to the next
// sibling. Generation nodes get adaptively attached correction subtrees;
// stalled corrections switch to the next generation tool. Terminates on
// lowest-level success, exhaustion, or budget, returning the best-scoring
// verified state.
Outcome traverse(PlanTree& tree, const SceneGraph& initial_state, ToolBackend& backend,
                         IVerifier& verifier, const PositionPipeline& pipeline,
                         const Registry& registry, const Decomposer& decomposer,
                         const BuildOptions& opts);

std::string export_tree_dot(const PlanTree& tree);

}  // namespace genorch
