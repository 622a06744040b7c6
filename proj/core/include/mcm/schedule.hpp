#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mcm/cost.hpp"
#include "mcm/nop.hpp"
#include "mcm/scaling.hpp"
#include "mcm/workload.hpp"

namespace mcm {

enum class PipelineMode { Stagewise, Layerwise };
std::string_view to_string(PipelineMode mode);
PipelineMode parse_pipeline_mode(std::string_view text);

struct LayerPlacement {
    std::vector<Position> chiplets;  // one per shard
    std::int64_t shard_factor = 1;
    ShardAxis shard_axis = ShardAxis::Replica;
    bool operator==(const LayerPlacement&) const = default;
};

using Assignment = std::map<std::string, LayerPlacement>;

struct Schedule {
    Assignment assignment;
    std::array<std::vector<Position>, kStageCount> stage_regions;
    PipelineMode mode = PipelineMode::Layerwise;

    const std::vector<Position>& region(StageId s) const { return stage_regions[static_cast<int>(s)]; }
    std::vector<Position>& region(StageId s) { return stage_regions[static_cast<int>(s)]; }
    void assign(const std::string& layer_id, std::vector<Position> chiplets,
                ShardAxis axis = ShardAxis::Replica);
    bool operator==(const Schedule&) const = default;
};

struct PipelineMetrics {
    double e2e_latency_ms = 0.0;
    double pipe_latency_ms = 0.0;
    double energy_j = 0.0;
    double edp = 0.0;  // energy * pipe latency, J*ms
    double utilization = 0.0;
};

struct ChipletLoad {
    Position position;
    double compute_ms = 0.0;
    double nop_ms = 0.0;  // incoming transfers
    double work_pe_ms = 0.0;
    std::vector<std::string> layers;
};

struct EdgeTraffic {
    std::string producer;
    std::string consumer;
    double latency_ms = 0.0;  // slowest consumer shard's gather
    double energy_j = 0.0;
    int max_hops = 0;
};

struct Evaluation {
    PipelineMetrics metrics;
    double compute_energy_j = 0.0;
    double nop_energy_j = 0.0;
    std::array<double, kStageCount> stage_pipe_ms{};  // max chiplet latency per stage region
    std::vector<ChipletLoad> chiplets;                // hosting chiplets only
    std::vector<EdgeTraffic> edges;
};

struct EvaluateOptions {
    ScalingParams scaling;
    bool include_nop = true;
};

// Unit cost of a layer on a particular chiplet, before sharding.
CostEntry chiplet_cost(const WorkloadGraph& graph, std::size_t layer_index, const ChipletSpec& chiplet,
                       const CostProfile& profile, const ScalingParams& scaling = {});

Evaluation evaluate_detailed(const Schedule& schedule, const WorkloadGraph& graph, const McmSpec& mcm,
                             const CostProfile& profile, const EvaluateOptions& options = {});

PipelineMetrics evaluate(const Schedule& schedule, const WorkloadGraph& graph, const McmSpec& mcm,
                         const CostProfile& profile, const EvaluateOptions& options = {});

// Text grid of the placement: one cell per chiplet with its stage letter and layer count.
std::string placement_map(const Schedule& schedule, const WorkloadGraph& graph, const McmSpec& mcm);

}  // namespace mcm
