#include "genorch/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace genorch {

std::optional<int> parse_numeral(const std::string& token) {
    static const std::map<std::string, int> words = {
        {"a", 1},    {"an", 1},   {"one", 1}, {"two", 2},   {"three", 3}, {"four", 4},
        {"five", 5}, {"six", 6},  {"seven", 7}, {"eight", 8}, {"nine", 9}, {"ten", 10}};
    if (auto it = words.find(token); it != words.end()) return it->second;
    if (!token.empty() && std::all_of(token.begin(), token.end(),
                                      [](unsigned char c) { return std::isdigit(c); })) {
        int v = std::stoi(token);
        if (v >= 1) return v;
    }
    return std::nullopt;
}

std::string singularize(const std::string& noun) {
    static const std::set<std::string> invariant = {"sheep", "fish",  "deer",    "moose",
                                                    "grass", "glass", "scissors"};
    if (invariant.count(noun)) return noun;
    if (noun.size() > 3 && noun.compare(noun.size() - 3, 3, "ies") == 0)
        return noun.substr(0, noun.size() - 3) + "y";  // puppies -> puppy
    if (noun.size() > 2 && noun.back() == 's' && noun[noun.size() - 2] != 's')
        return noun.substr(0, noun.size() - 1);
    return noun;
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
            if (c == ',') out.push_back(",");
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace genorch
