#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcm/schedule.hpp"

namespace mcm {

struct HetConfig {
    std::vector<Position> ws_positions;                // sorted
    std::map<std::string, Position> layer_assignment;  // every trunk layer
    bool operator==(const HetConfig&) const = default;
};

struct ScoredConfig {
    HetConfig config;
    double score = 0.0;  // -(energy * e2e), or -infinity when infeasible
    PipelineMetrics metrics;
    double max_chiplet_ms = 0.0;  // largest per-chiplet compute latency
    bool feasible() const;
    // The scoring EDP, energy * e2e (J*ms); metrics.edp uses pipe latency.
    double edp() const { return -score; }
};

// Exhaustive: every layer on any chiplet.
// Contiguous: each trunk model is cut into runs of consecutive layers, one
// chiplet per run, and exactly ws_count runs are WS; runs are laid out along
// a serpentine walk of the region so neighbouring runs are one hop apart.
// Auto: Exhaustive when it fits the cap, else Contiguous.
enum class DseSpace { Auto, Exhaustive, Contiguous };

struct DseOptions {
    std::uint64_t cap = 10'000'000;
    DseSpace space = DseSpace::Auto;
};

// Trunk-stage layers in evaluation order.
std::vector<std::string> trunk_layers(const WorkloadGraph& graph);

// All C(|region|, ws_count) choices of WS positions, in lexicographic order.
std::vector<std::vector<Position>> dataflow_placements(const std::vector<Position>& region, int ws_count);

// Serpentine walk: rows by y, alternating x direction.
std::vector<Position> serpentine(const std::vector<Position>& region);

std::uint64_t count_configs(const std::vector<Position>& region, int ws_count, const WorkloadGraph& graph,
                            DseSpace space);

// Streams every configuration in a deterministic order. Resolves Auto with the default cap.
void enumerate_configs(const std::vector<Position>& region, int ws_count, const WorkloadGraph& graph,
                       const std::function<void(const HetConfig&)>& visit, DseSpace space = DseSpace::Auto);

// Metrics over the trunks stage only: compute plus intra-trunk NoP traffic.
ScoredConfig score(const HetConfig& config, double l_cstr_ms, const WorkloadGraph& graph, const McmSpec& mcm,
                   const CostProfile& profile);

struct DseDelta {  // percent change against the best OS-only configuration
    double e2e_pct = 0.0;
    double pipe_pct = 0.0;
    double energy_pct = 0.0;
    double edp_pct = 0.0;  // scoring EDP
};

struct DseEntry {
    int ws_count = 0;
    DseSpace space = DseSpace::Contiguous;
    std::uint64_t explored = 0;
    std::uint64_t feasible = 0;
    std::optional<ScoredConfig> best;
    std::optional<DseDelta> delta;
};

struct DseReport {
    std::vector<Position> region;
    double l_cstr_ms = 0.0;
    std::optional<ScoredConfig> os_only;
    std::vector<DseEntry> entries;
};

// Exact argmax per ws_count; ties keep the first configuration in stream order.
// Throws CapExceededError when a space is larger than options.cap.
DseReport search(const std::vector<Position>& region, const std::vector<int>& ws_counts, double l_cstr_ms,
                 const WorkloadGraph& graph, const McmSpec& mcm, const CostProfile& profile,
                 const DseOptions& options = {});

std::string_view to_string(DseSpace space);

}  // namespace mcm
