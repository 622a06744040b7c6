#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mcm/schedule.hpp"

namespace mcm {

// Evenly sized chiplets in a 1-D row; stages round-robin (Stagewise) or
// contiguous layer runs of balanced latency (Layerwise). Costs are rescaled
// from the profile's reference array to pes_per_chiplet.
Schedule baseline_schedule(const WorkloadGraph& graph, int n_chiplets, std::int64_t pes_per_chiplet,
                           const CostProfile& profile, PipelineMode mode, const ScalingParams& scaling = {});

PipelineMetrics baseline(const WorkloadGraph& graph, int n_chiplets, std::int64_t pes_per_chiplet,
                         const CostProfile& profile, PipelineMode mode, const EvaluateOptions& options = {});

// "NxP": N chiplets of P PEs each, e.g. "36x256" or "1x9216".
struct Arrangement {
    int n_chiplets = 1;
    std::int64_t pes_per_chiplet = 256;
    std::string label() const;
};

Arrangement parse_arrangement(std::string_view text);

struct ArrangementResult {
    Arrangement arrangement;
    bool matched = false;  // scheduled by throughput matching on a grid rather than as a baseline
    PipelineMetrics metrics;
};

// Arrangements whose chiplets match the profile's reference array and that
// fill a grid of four regions go through throughput_match; the others are baselines.
ArrangementResult run_arrangement(const WorkloadGraph& graph, const Arrangement& arrangement,
                                  const CostProfile& profile, PipelineMode mode, const EvaluateOptions& options = {});

std::vector<ArrangementResult> compare_arrangements(const WorkloadGraph& graph, const std::vector<Arrangement>& list,
                                                    const CostProfile& profile, PipelineMode mode,
                                                    const EvaluateOptions& options = {});

}  // namespace mcm
