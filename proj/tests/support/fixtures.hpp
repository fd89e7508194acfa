#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace genorch::testing {

inline std::string test_dir() {
    const char* dir = std::getenv("GENORCH_TEST_DIR");
    return dir ? dir : "tests";
}

inline std::string read_text(const std::string& rel_path) {
    std::ifstream in(test_dir() + "/" + rel_path, std::ios::binary);
    if (!in) throw std::runtime_error("missing fixture: " + rel_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline nlohmann::json read_json(const std::string& rel_path) {
    return nlohmann::json::parse(read_text(rel_path));
}

inline void write_text(const std::string& rel_path, const std::string& content) {
    std::ofstream out(test_dir() + "/" + rel_path, std::ios::binary);
    out << content;
}

}  // namespace genorch::testing
