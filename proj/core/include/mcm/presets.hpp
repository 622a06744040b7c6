#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mcm/cost.hpp"
#include "mcm/nop.hpp"
#include "mcm/workload.hpp"

namespace mcm {

// Name of the environment variable that overrides the bundled config directory.
inline constexpr const char* kConfigDirEnv = "MCM_CONFIG_DIR";

// $MCM_CONFIG_DIR if set, otherwise the installed or source data directory.
std::filesystem::path config_dir();

// Each resolver accepts a path to an existing file or a preset name.
//   workloads: "autopilot" (all trunks), "autopilot-fusion" (no trunks)
//   mcm:       files under mcm/, e.g. "simba-6x6", "simba-2x6x6"
//   profiles:  "analytical" or files under profiles/, e.g. "autopilot-paper"
WorkloadGraph resolve_workload(const std::string& name_or_path);
McmSpec resolve_mcm(const std::string& name_or_path);
CostProfile resolve_profile(const std::string& name_or_path);

std::vector<std::string> preset_names(const std::string& kind);  // "mcm" or "profiles"

}  // namespace mcm
