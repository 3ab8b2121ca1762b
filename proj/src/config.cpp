#include "gpseg/config.hpp"

#include <fstream>
#include <stdexcept>

namespace gpseg {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(value, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad integer '" +
                                value + "'");
  }
  if (pos != value.size())
    throw std::invalid_argument("config key '" + key + "': bad integer '" +
                                value + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': bad number '" +
                                value + "'");
  }
  if (pos != value.size())
    throw std::invalid_argument("config key '" + key + "': bad number '" +
                                value + "'");
  return v;
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  " is not key=value: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  " has an empty key");
    entries[key] = value;
  }
  return entries;
}

void apply_config(PipelineConfig& config,
                  const std::map<std::string, std::string>& entries) {
  for (const auto& [key, value] : entries) {
    if (key == "kernel") {
      config.kernel = kernel_family_from_string(value);
    } else if (key == "tile-side") {
      config.tile_side = parse_int(key, value);
      if (config.tile_side < 1)
        throw std::invalid_argument("tile-side must be positive");
    } else if (key == "alpha-grid") {
      config.alpha_grid_size = parse_int(key, value);
      if (config.alpha_grid_size < 2)
        throw std::invalid_argument("alpha-grid must be >= 2");
    } else if (key == "stabilization") {
      config.stabilization = parse_double(key, value);
      if (!(config.stabilization > 0.0))
        throw std::invalid_argument("stabilization must be positive");
    } else if (key == "interior-frac") {
      config.interior_min_frac = parse_double(key, value);
      if (!(config.interior_min_frac >= 0.0 && config.interior_min_frac < 1.0))
        throw std::invalid_argument("interior-frac must lie in [0,1)");
    } else if (key == "boundary-frac") {
      config.boundary_min_frac = parse_double(key, value);
      if (!(config.boundary_min_frac >= 0.0 && config.boundary_min_frac < 1.0))
        throw std::invalid_argument("boundary-frac must lie in [0,1)");
    } else if (key == "merge-tolerance") {
      config.merge_tolerance = parse_double(key, value);
      if (!(config.merge_tolerance >= 0.0))
        throw std::invalid_argument("merge-tolerance must be >= 0");
    } else if (key == "rethreshold-factor") {
      config.rethreshold_factor = parse_int(key, value);
      if (config.rethreshold_factor < 1)
        throw std::invalid_argument("rethreshold-factor must be >= 1");
    } else if (key == "seed") {
      try {
        std::size_t pos = 0;
        config.seed = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw std::invalid_argument("config key 'seed': bad integer '" +
                                    value + "'");
      }
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
}

PipelineConfig resolve_config(
    const std::map<std::string, std::string>& file_entries,
    const std::map<std::string, std::string>& flag_entries) {
  PipelineConfig config;
  apply_config(config, file_entries);
  apply_config(config, flag_entries);
  return config;
}

}  // namespace gpseg
