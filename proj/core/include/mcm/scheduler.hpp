#pragma once

#include <array>
#include <random>
#include <string>
#include <vector>

#include "mcm/schedule.hpp"

namespace mcm {

// Four equal contiguous regions, indexed by StageId: quadrants when both grid
// dimensions are even, otherwise strips. Positions sorted by (x, y).
std::array<std::vector<Position>, kStageCount> stage_regions(const McmSpec& mcm);

// One chiplet per model instance (FE+BFPN cameras, trunks) and one per
// shardable attention unit; positions are provisional until place().
Schedule initial_allocation(const WorkloadGraph& graph, const McmSpec& mcm);

struct DecisionRecord {
    int iteration = 0;
    std::string action;  // "shard", "split", "donate"
    StageId stage = StageId::FeBfpn;
    std::string layer;   // layer id, or model name for splits
    std::int64_t k_before = 1;
    std::int64_t k_after = 1;
    double unit_latency_ms = 0.0;      // the moved unit after the move
    double stage_before_ms = 0.0;
    double stage_after_ms = 0.0;
    double pipe_latency_ms = 0.0;      // max stage latency after the move
};

struct MatchOptions {
    // Relative slack when comparing against a target (165.6 / 2 = 82.8 counts as matched to 82.7).
    double tolerance = 0.005;
    // After matching Lat_base, keep lowering the target to Lat_base / r while moves remain.
    bool deepen = true;
    int max_rounds = 16;
};

struct MatchResult {
    Schedule schedule;
    std::vector<DecisionRecord> log;
    double lat_base_ms = 0.0;
    double final_stage_pipe_ms = 0.0;  // compute-only, as seen by the matcher
    int iterations = 0;
    int rounds = 0;
    bool exhausted = false;  // stopped because the bottleneck could not move
};

MatchResult throughput_match(const WorkloadGraph& graph, const McmSpec& mcm, const CostProfile& profile,
                             const MatchOptions& options = {});

// Greedy NoP-energy placement of each stage's chiplets inside its region.
Schedule place(const Schedule& schedule, const WorkloadGraph& graph, const McmSpec& mcm);

// Total NoP energy of a placement (joules), as charged by evaluate.
double placement_nop_energy(const Schedule& schedule, const WorkloadGraph& graph, const McmSpec& mcm);

// Same grouping of layers onto chiplets, moved to uniformly random distinct
// positions inside each stage region.
Schedule random_placement(const Schedule& schedule, std::mt19937_64& rng);

std::string decision_log_csv(const std::vector<DecisionRecord>& log);

}  // namespace mcm
