#pragma once

#include "ssreid/types.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace ssreid {

inline constexpr const char* kToolVersion = "0.1.0";

// Applies one key=value pair to cfg; throws a config error for unknown keys or bad values.
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
std::map<std::string, std::string> config_snapshot(const ExperimentConfig& cfg);

// Entry point behind the ssreid executable; returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssreid
