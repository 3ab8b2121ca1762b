#pragma once

#include <map>
#include <string>

#include "gpseg/segmentation.hpp"

namespace gpseg {

// key=value lines; '#' starts a comment; blank lines ignored.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Applies recognized keys (kernel, tile-side, alpha-grid, stabilization,
// interior-frac, boundary-frac, merge-tolerance, rethreshold-factor, seed)
// onto the config. Unknown keys or unparsable values throw.
void apply_config(PipelineConfig& config,
                  const std::map<std::string, std::string>& entries);

// defaults, then config file entries, then flag overrides.
PipelineConfig resolve_config(
    const std::map<std::string, std::string>& file_entries,
    const std::map<std::string, std::string>& flag_entries);

}  // namespace gpseg
