#pragma once

#include <stdexcept>
#include <string>

#include "kylesim/market.hpp"
#include "kylesim/scenario.hpp"

namespace kylesim {

// Invalid scenario input; the message names the offending key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flat key = value lines under [section] headers, '#' comments, quoted strings,
// [a, b] arrays. Relative table paths resolve against `base_dir`.
Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

// Fully resolved scenario (drift tables embedded) as JSON and back.
std::string scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(const std::string& text);

extern const char* const kCodeVersion;
std::string manifest_json(const Scenario& sc);
Scenario load_manifest(const std::string& path);

// result.csv, summary.json, paths.csv
std::string result_csv(const SimulationResult& r);
std::string summary_json(const SimulationResult& r);
std::string paths_csv(const Scenario& sc);
// shortest round-trip decimal
std::string format_double(double v);

}  // namespace kylesim
