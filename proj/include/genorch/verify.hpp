#pragma once

#include <map>
#include <string>

#include "genorch/decompose.hpp"
#include "genorch/scene.hpp"

namespace genorch {

// Per-node verification result. Aspects cover the judged dimensions;
// aesthetics is always pass in oracle mode (no symbolic analogue).
struct Verdict {
    bool pass = false;
    double score = 0.0;
    DiscrepancyReport report;
    std::map<std::string, bool> aspects;  // objects, attributes, positions,
                                          // relations, background, aesthetics
};

class IVerifier {
public:
    virtual ~IVerifier() = default;
    virtual Verdict verify_spec(const SceneGraph& state, const SceneSpec& spec) = 0;
    virtual Verdict verify_edit(const SceneGraph& before, const SceneGraph& after,
                                const AtomicEdit& edit) = 0;
};

// Exact verifier over the scene model. verify_spec gates generation nodes;
// verify_edit gates editing nodes: the edit's postcondition must hold, no
// bystander may change beyond tolerance, and plausibility guards (minimum
// object area, bounded target drift) must pass.
class OracleVerifier : public IVerifier {
public:
    explicit OracleVerifier(Thresholds th = {}) : th_(th) {}

    Verdict verify_spec(const SceneGraph& state, const SceneSpec& spec) override;
    Verdict verify_edit(const SceneGraph& before, const SceneGraph& after,
                        const AtomicEdit& edit) override;

    const Thresholds& thresholds() const { return th_; }

private:
    Thresholds th_;
};

}  // namespace genorch
