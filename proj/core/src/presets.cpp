#include "mcm/presets.hpp"

#include <algorithm>
#include <cstdlib>

#include "mcm/autopilot.hpp"
#include "mcm/errors.hpp"
#include "mcm/graph_io.hpp"

#ifndef MCM_SOURCE_DATA_DIR
#define MCM_SOURCE_DATA_DIR "data"
#endif

namespace mcm {

namespace fs = std::filesystem;

fs::path config_dir() {
    if (const char* env = std::getenv(kConfigDirEnv); env && *env) return fs::path(env);
    return fs::path(MCM_SOURCE_DATA_DIR);
}

namespace {

fs::path preset_file(const std::string& kind, const std::string& name, const char* ext) {
    const auto p = config_dir() / kind / (name + ext);
    if (!fs::exists(p))
        throw ConfigError("unknown " + kind + " preset '" + name + "' (looked for " + p.string() + ")");
    return p;
}

bool is_file(const std::string& s) {
    std::error_code ec;
    return fs::is_regular_file(s, ec);
}

}  // namespace

WorkloadGraph resolve_workload(const std::string& s) {
    if (is_file(s)) return load_graph(s);
    if (s == "autopilot") return build_autopilot_pipeline();
    if (s == "autopilot-fusion") {
        AutopilotParams p;
        p.trunk_set.clear();
        return build_autopilot_pipeline(p);
    }
    throw ConfigError("unknown workload '" + s + "': expected a graph file, 'autopilot' or 'autopilot-fusion'");
}

McmSpec resolve_mcm(const std::string& s) {
    if (is_file(s)) return load_mcm(s);
    return load_mcm(preset_file("mcm", s, ".json"));
}

CostProfile resolve_profile(const std::string& s) {
    if (s == "analytical") return CostProfile::analytical();
    if (is_file(s)) return load_profile(s);
    return load_profile(preset_file("profiles", s, ".csv"));
}

std::vector<std::string> preset_names(const std::string& kind) {
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(config_dir() / kind, ec)) out.push_back(e.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace mcm
