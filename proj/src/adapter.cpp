#include "genorch/adapter.hpp"

#include <httplib.h>

#include <thread>

#include "genorch/json_io.hpp"

namespace genorch {

SceneGraph SimBackend::apply(const ToolDescriptor& tool, const json& inputs,
                             const SceneGraph& state, const std::string& node_id) {
    return apply_tool(tool.skill, inputs, state, node_id, cfg_, tool.name);
}

json make_adapter_request(const std::string& skill, const std::string& tool_name,
                          const std::string& node_id, const json& inputs,
                          const SceneGraph& state) {
    json req;
    req["schema_version"] = kWireSchemaVersion;
    req["request"] = json{{"skill", skill},
                          {"tool_name", tool_name},
                          {"node_id", node_id},
                          {"inputs", inputs},
                          {"state", state}};
    return req;
}

json call_adapter(const std::string& endpoint, const json& request, int timeout_ms) {
    httplib::Client client(endpoint);
    client.set_connection_timeout(0, timeout_ms * 1000);
    client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);

    // Endpoint credentials come from the environment; everything else is
    // config-file state.
    httplib::Headers headers;
    if (const char* token = std::getenv("GENORCH_ADAPTER_TOKEN"))
        headers.insert({"Authorization", std::string("Bearer ") + token});

    auto res = client.Post("/v1/execute", headers, request.dump(), "application/json");
    if (!res) throw AdapterError("transport failure calling " + endpoint);
    if (res->status != 200)
        throw AdapterError("adapter returned HTTP " + std::to_string(res->status));
    json body;
    try {
        body = json::parse(res->body);
    } catch (const json::exception& e) {
        throw AdapterError(std::string("adapter response is not JSON: ") + e.what());
    }
    if (body.value("schema_version", -1) != kWireSchemaVersion)
        throw AdapterError("adapter response schema_version mismatch");
    std::string status = body.value("status", "");
    if (status == "error")
        throw AdapterError("adapter error: " + body.value("diagnostics", "unspecified"));
    if (status != "ok") throw AdapterError("adapter response lacks a valid status");
    return body;
}

SceneGraph HttpBackend::apply(const ToolDescriptor& tool, const json& inputs,
                              const SceneGraph& state, const std::string& node_id) {
    json req = make_adapter_request(to_string(tool.skill), tool.name, node_id, inputs, state);
    json body = call_adapter(endpoint_, req, timeout_ms_);
    if (!body.contains("state")) throw AdapterError("adapter response lacks a state");
    SceneGraph out;
    try {
        from_json(body["state"], out);
    } catch (const std::exception& e) {
        throw AdapterError(std::string("adapter state failed to parse: ") + e.what());
    }
    return out;
}

namespace {

Verdict parse_verdict(const json& body) {
    if (!body.contains("verdict")) throw EndpointError("judge response lacks a verdict");
    Verdict v;
    try {
        from_json(body["verdict"], v);
    } catch (const std::exception& e) {
        throw EndpointError(std::string("judge verdict failed to parse: ") + e.what());
    }
    return v;
}

}  // namespace

Verdict EndpointVerifier::verify_spec(const SceneGraph& state, const SceneSpec& spec) {
    json inputs;
    inputs["check"] = "spec";
    inputs["spec"] = spec;
    json req = make_adapter_request("aux.verify", "judge", "", inputs, state);
    try {
        return parse_verdict(call_adapter(endpoint_, req, timeout_ms_));
    } catch (const AdapterError& e) {
        throw EndpointError(e.what());
    }
}

Verdict EndpointVerifier::verify_edit(const SceneGraph& before, const SceneGraph& after,
                                      const AtomicEdit& edit) {
    json inputs;
    inputs["check"] = "edit";
    inputs["before"] = before;
    inputs["edit"] = edit;
    json req = make_adapter_request("aux.verify", "judge", "", inputs, after);
    try {
        return parse_verdict(call_adapter(endpoint_, req, timeout_ms_));
    } catch (const AdapterError& e) {
        throw EndpointError(e.what());
    }
}

namespace {

void attach_routes(httplib::Server& server, const WorldConfig& world, const Thresholds& th,
                   const DetectorConfig& det) {
    server.Post("/v1/execute", [world, th, det](const httplib::Request& req,
                                                httplib::Response& res) {
        json reply;
        reply["schema_version"] = kWireSchemaVersion;
        try {
            json body = json::parse(req.body);
            if (body.value("schema_version", -1) != kWireSchemaVersion)
                throw AdapterError("unsupported schema_version");
            const json& r = body.at("request");
            std::string skill = r.at("skill").get<std::string>();
            SceneGraph state;
            if (r.contains("state")) from_json(r["state"], state);
            const json inputs = r.value("inputs", json::object());

            if (skill == "aux.detect") {
                DetectorConfig d = det;
                if (inputs.contains("sigma")) d.sigma = inputs["sigma"].get<double>();
                reply["detections"] = detect_objects(state, d);
            } else if (skill == "aux.layout") {
                SceneSpec spec;
                from_json(inputs.at("spec"), spec);
                json arr = json::array();
                for (auto& pl : generate_layout(spec, th))
                    arr.push_back(json{{"entry", pl.entry_index},
                                       {"unit", pl.unit_index},
                                       {"category", pl.category},
                                       {"bbox", pl.bbox}});
                reply["layout"] = arr;
            } else if (skill.rfind("aux.condition.", 0) == 0) {
                reply["token"] =
                    extract_condition(skill.substr(14), inputs.at("source").get<std::string>());
            } else if (skill == "aux.decompose") {
                Decomposer dec(world.vocab);
                std::string text = inputs.at("text").get<std::string>();
                if (inputs.value("kind", "generation") == "generation") {
                    reply["spec"] = dec.decompose_generation(text);
                } else {
                    json arr = json::array();
                    for (auto& e : dec.decompose_editing({text, TaskKind::editing, {}}))
                        arr.push_back(e);
                    reply["edits"] = arr;
                }
            } else if (skill == "aux.verify") {
                OracleVerifier verifier(th);
                std::string check = inputs.value("check", "spec");
                Verdict v;
                if (check == "spec") {
                    SceneSpec spec;
                    from_json(inputs.at("spec"), spec);
                    v = verifier.verify_spec(state, spec);
                } else {
                    SceneGraph before;
                    from_json(inputs.at("before"), before);
                    AtomicEdit edit;
                    from_json(inputs.at("edit"), edit);
                    v = verifier.verify_edit(before, state, edit);
                }
                reply["verdict"] = v;
            } else {
                SceneGraph out = apply_tool(skill_from_string(skill), inputs, state,
                                            r.value("node_id", ""), world,
                                            r.value("tool_name", ""));
                reply["state"] = out;
            }
            reply["status"] = "ok";
        } catch (const std::exception& e) {
            reply["status"] = "error";
            reply["diagnostics"] = e.what();
        }
        res.set_content(reply.dump(), "application/json");
    });
}

}  // namespace

struct AdapterServer::Impl {
    httplib::Server server;
    std::thread worker;
};

AdapterServer::AdapterServer(WorldConfig world, Thresholds th, DetectorConfig det)
    : impl_(std::make_unique<Impl>()) {
    attach_routes(impl_->server, std::move(world), th, det);
}

AdapterServer::~AdapterServer() { stop(); }

bool AdapterServer::start(const std::string& host, int port) {
    if (!impl_->server.bind_to_port(host, port)) return false;
    impl_->worker = std::thread([this]() { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return true;
}

void AdapterServer::stop() {
    if (impl_->worker.joinable()) {
        impl_->server.stop();
        impl_->worker.join();
    }
}

bool serve_adapters(const WorldConfig& world, const Thresholds& th, const DetectorConfig& det,
                    const std::string& host, int port) {
    httplib::Server server;
    attach_routes(server, world, th, det);
    return server.listen(host, port);
}

}  // namespace genorch
