#pragma once

#include <filesystem>
#include <string>

#include "mcm/workload.hpp"

namespace mcm {

inline constexpr int kGraphSchemaVersion = 1;

// JSON text form documented in docs/workload_schema.md. Lossless round trip.
std::string graph_to_json(const WorkloadGraph& graph, int indent = 2);
WorkloadGraph graph_from_json(const std::string& text);

void save_graph(const WorkloadGraph& graph, const std::filesystem::path& path);
WorkloadGraph load_graph(const std::filesystem::path& path);

}  // namespace mcm
