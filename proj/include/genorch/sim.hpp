#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "genorch/registry.hpp"
#include "genorch/scene.hpp"
#include "genorch/vocab.hpp"

namespace genorch {

// How a simulated tool call can go wrong. Distilled from the failure
// shapes generation/editing models actually exhibit: silent no-ops, wrong
// attribute values, collateral damage to bystanders, shrunken targets,
// misplaced targets.
enum class FailureMode { noop, wrong_attribute, collateral, shrink, misplace };

std::string to_string(FailureMode m);
FailureMode failure_mode_from_string(const std::string& s);

// Forced outcome for one node in scripted mode. `fixture` substitutes an
// exact result state, which golden-trace scenarios need.
struct ScriptOutcome {
    enum class Kind { success, failure, fixture };
    Kind kind = Kind::success;
    FailureMode mode = FailureMode::noop;  // for Kind::failure
    SceneGraph state;                      // for Kind::fixture
};

struct WorldConfig {
    uint64_t seed = 0;
    enum class Mode { stochastic, scripted } mode = Mode::stochastic;

    double default_p_success = 1.0;
    std::map<std::string, double> p_success;  // skill token -> probability
    std::map<FailureMode, double> failure_weights = {{FailureMode::noop, 0.2},
                                                     {FailureMode::wrong_attribute, 0.2},
                                                     {FailureMode::collateral, 0.2},
                                                     {FailureMode::shrink, 0.2},
                                                     {FailureMode::misplace, 0.2}};
    double p_obj = 0.85;   // per-object presence for free-form generation
    double p_attr = 0.8;   // per-attribute correctness for generation

    std::map<std::string, ScriptOutcome> script;  // node id -> outcome

    Vocab vocab;
    Thresholds thresholds;

    double success_probability(Skill skill) const {
        auto it = p_success.find(to_string(skill));
        return it == p_success.end() ? default_p_success : it->second;
    }
};

// Apply one tool call to a state. The outcome is drawn from a stream keyed
// by (seed, node_id), so replays are byte-identical regardless of call
// order. Throws UnboundInput when a required value is still MISSING.
SceneGraph apply_tool(Skill skill, const json& inputs, const SceneGraph& state,
                      const std::string& node_id, const WorldConfig& cfg,
                      const std::string& tool_name = "");

// Monte Carlo estimate of P(all k independent alternates fail) for a skill
// under the configured success rate; expectation (1-p)^k.
double action_failure_rate(Skill skill, int k_alternates, const WorldConfig& cfg,
                           int trials = 10000);

}  // namespace genorch
