#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tagcode/experiments.hpp"

namespace tagcode {

/// INI-style configuration: `[section]` headers, `key = value` lines, `;`
/// comments. Every key is optional; unknown sections or keys are rejected.
/// Parse errors are ConfigError (with line), bad values are ValidationError
/// naming "section.key".
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

// "a..b step s", "a..b" (step 1) or a comma list; "inf" is accepted as a value.
std::vector<double> parse_number_list(std::string_view text, const std::string& field);

// Canonical INI rendering of every field; parse_config(render_config(c)) == c.
std::string render_config(const ScenarioConfig& config);

// FNV-1a over render_config.
std::uint64_t config_hash(const ScenarioConfig& config);
std::string hash_hex(std::uint64_t h);

}  // namespace tagcode
