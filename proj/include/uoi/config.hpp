#pragma once

#include <string>
#include <string_view>

#include "uoi/harness.hpp"

namespace uoi {

/// Parses a JSON experiment description. Unknown keys are rejected with a
/// ConfigError naming the key path (e.g. "weight.prob"). The scenario may
/// be omitted from the text and supplied as `fallback`.
ExperimentConfig parse_config(std::string_view json_text, std::optional<Scenario> fallback = std::nullopt);

ExperimentConfig load_config(const std::string& path, std::optional<Scenario> fallback = std::nullopt);

}  // namespace uoi
