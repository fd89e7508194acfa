#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace genorch {

// Closed attribute vocabularies. The grammar only recognizes these tokens,
// which keeps verification decidable at desk scale.
struct Vocab {
    std::set<std::string> colors = {"white", "black", "blue",   "red",    "green", "yellow",
                                    "brown", "gray",  "orange", "purple", "pink",  "golden"};
    std::set<std::string> shapes = {"round", "square", "triangular", "oval", "cubic", "spherical"};
    std::set<std::string> textures = {"wooden",  "metallic", "furry",   "fluffy", "striped",
                                      "spotted", "glass",    "plastic", "rusty",  "leather"};

    std::optional<std::string> attribute_kind(const std::string& token) const {
        if (colors.count(token)) return "color";
        if (shapes.count(token)) return "shape";
        if (textures.count(token)) return "texture";
        return std::nullopt;
    }

    const std::set<std::string>& values_for(const std::string& kind) const {
        if (kind == "color") return colors;
        if (kind == "shape") return shapes;
        return textures;
    }
};

// "two" -> 2, "3" -> 3; nullopt when the token is not a numeral.
std::optional<int> parse_numeral(const std::string& token);

// Naive singularization for category nouns; irregulars stay as-is.
std::string singularize(const std::string& noun);

std::vector<std::string> split_words(const std::string& text);
std::string lowercase(const std::string& s);
std::string trim(const std::string& s);

}  // namespace genorch
