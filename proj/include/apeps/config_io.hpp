#pragma once

// Flat `key = value` configuration files. Keys are SimConfig field names;
// power profile entries use the tx_mw / rx_mw / listen_mw / sleep_mw keys.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "apeps/core.hpp"

namespace apeps {

/// Applies one setting. Throws ConfigError naming the key on unknown keys or
/// unparsable values.
void apply_setting(SimConfig& cfg, std::string_view key, std::string_view value);

/// Parses config text on top of `base`. `#` starts a comment.
SimConfig parse_config_text(std::string_view text, SimConfig base = {});

SimConfig load_config_file(const std::string& path, SimConfig base = {});

/// Serialises every key, one per line, in a stable order.
std::string format_config(const SimConfig& cfg);

std::vector<std::string> config_keys();

using Setting = std::pair<std::string, std::string>;

/// Built-in defaults, then the file at `path` (skipped when empty), then
/// `overrides` in order. The result is validated; every problem is reported
/// in one ConfigError.
SimConfig resolve_config(const std::string& path, const std::vector<Setting>& overrides);

}  // namespace apeps
