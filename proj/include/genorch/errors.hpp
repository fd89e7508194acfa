#pragma once

#include <stdexcept>
#include <string>

namespace genorch {

// Base for all typed errors thrown by the engine. Traversal-level failures
// are never exceptions; they are encoded in Outcome.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : Error {
    size_t position = 0;
    ParseError(const std::string& msg, size_t pos)
        : Error(msg + " (at offset " + std::to_string(pos) + ")"), position(pos) {}
};

struct UnresolvedSelector : Error {
    using Error::Error;
};

struct DuplicateName : Error {
    using Error::Error;
};

struct NoCapableTool : Error {
    using Error::Error;
};

struct MalformedSelection : Error {
    using Error::Error;
};

struct CompensationFailed : Error {
    std::string slot;
    CompensationFailed(const std::string& slot_name, const std::string& msg)
        : Error("compensation failed for slot '" + slot_name + "': " + msg), slot(slot_name) {}
};

struct PlacementInfeasible : Error {
    using Error::Error;
};

struct UnboundInput : Error {
    using Error::Error;
};

struct AdapterError : Error {
    using Error::Error;
};

struct EndpointError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace genorch
