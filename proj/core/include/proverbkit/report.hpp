#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace proverbkit {

/// Renders the run summary from tagged stage documents. Sections without a
/// document say "no data". Documents written by a different tool version
/// produce a warning banner. Unknown or missing schema tags throw DataError.
std::string render_report(const std::vector<nlohmann::json>& documents);

}  // namespace proverbkit
