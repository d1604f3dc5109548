#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace caltype {

/// Flat key=value configuration with [section] headers. Sections keep file
/// order and may repeat (e.g. one [layer] section per layer). '#' starts a
/// comment; blank lines are ignored.
using ConfigSection = std::pair<std::string, std::map<std::string, std::string>>;

std::vector<ConfigSection> parse_config(const std::string& text);

std::string get_field(const ConfigSection& section, const std::string& key);
std::string get_field_or(const ConfigSection& section, const std::string& key,
                         const std::string& fallback);

} // namespace caltype
