#include "gesturelab/core/keyvalue.hpp"

#include <fstream>
#include <sstream>

#include "gesturelab/core/error.hpp"

namespace gesturelab::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues out;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected `key = value`", lineno);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno);
        bool replaced = false;
        for (auto& kv : out)
            if (kv.first == key) {
                kv.second = value;
                replaced = true;
            }
        if (!replaced) out.emplace_back(key, value);
    }
    return out;
}

KeyValues load_key_values(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_key_values(buf.str());
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

} // namespace gesturelab::config
