#pragma once

#include <string>
#include <utility>
#include <vector>

namespace gesturelab::config {

// Flat `key = value` text with '#' comments. Order preserved; duplicate keys
// keep the last value.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(const std::string& text);
KeyValues load_key_values(const std::string& path);

// Splits a whitespace-separated value list (used for joint-name lists).
std::vector<std::string> split_list(const std::string& value);

} // namespace gesturelab::config
