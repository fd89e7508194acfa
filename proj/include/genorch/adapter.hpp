#pragma once

#include <memory>
#include <string>

#include "genorch/plan.hpp"
#include "genorch/position.hpp"
#include "genorch/sim.hpp"
#include "genorch/verify.hpp"

namespace genorch {

inline constexpr int kWireSchemaVersion = 1;

// In-process simulated tools.
class SimBackend : public ToolBackend {
public:
    explicit SimBackend(WorldConfig cfg) : cfg_(std::move(cfg)) {}

    SceneGraph apply(const ToolDescriptor& tool, const json& inputs, const SceneGraph& state,
                     const std::string& node_id) override;

    const WorldConfig& config() const { return cfg_; }

private:
    WorldConfig cfg_;
};

// Tool execution over the adapter wire protocol: JSON request/response
// bodies over HTTP POST /v1/execute, versioned with schema_version. State
// snapshots travel inline. Timeouts, transport failures and schema
// violations all become AdapterError.
class HttpBackend : public ToolBackend {
public:
    explicit HttpBackend(std::string endpoint, int timeout_ms = 5000)
        : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms) {}

    SceneGraph apply(const ToolDescriptor& tool, const json& inputs, const SceneGraph& state,
                     const std::string& node_id) override;

private:
    std::string endpoint_;
    int timeout_ms_;
};

// Build / parse the wire envelope.
json make_adapter_request(const std::string& skill, const std::string& tool_name,
                          const std::string& node_id, const json& inputs,
                          const SceneGraph& state);

// POST a request envelope and validate the response envelope.
json call_adapter(const std::string& endpoint, const json& request, int timeout_ms = 5000);

// Multimodal-judge verification behind the wire protocol (skill aux.verify).
// Malformed responses are EndpointError, never a silent pass.
class EndpointVerifier : public IVerifier {
public:
    explicit EndpointVerifier(std::string endpoint, int timeout_ms = 5000)
        : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms) {}

    Verdict verify_spec(const SceneGraph& state, const SceneSpec& spec) override;
    Verdict verify_edit(const SceneGraph& before, const SceneGraph& after,
                        const AtomicEdit& edit) override;

private:
    std::string endpoint_;
    int timeout_ms_;
};

// Hosts the simulated world (tool skills plus aux.detect / aux.layout /
// aux.condition.* / aux.verify) on the wire protocol.
class AdapterServer {
public:
    AdapterServer(WorldConfig world, Thresholds th = {}, DetectorConfig det = {});
    ~AdapterServer();

    // Spawns the listener thread; returns false if the port cannot be bound.
    bool start(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Blocking convenience wrapper for the CLI serve subcommand.
bool serve_adapters(const WorldConfig& world, const Thresholds& th, const DetectorConfig& det,
                    const std::string& host, int port);

}  // namespace genorch
