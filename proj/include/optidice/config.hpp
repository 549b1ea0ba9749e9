#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>

namespace optidice {

/// Parses the flat TOML subset used by the config files (comments,
/// `key = value`, `[section]` tables, strings, numbers, booleans and
/// homogeneous scalar arrays) into a JSON document.
nlohmann::json parse_toml(const std::string& text);

/// Loads a config file, accepting JSON and TOML interchangeably: content
/// starting with '{' is parsed as JSON, anything else as TOML.
nlohmann::json load_config_file(const std::filesystem::path& path);

} // namespace optidice
