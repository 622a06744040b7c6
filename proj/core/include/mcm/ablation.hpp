#pragma once

#include <optional>
#include <vector>

#include "mcm/cost.hpp"
#include "mcm/workload.hpp"

namespace mcm {

struct OccupancyPoint {
    std::int64_t upscale = 2;
    std::size_t layers = 0;
    std::int64_t total_macs = 0;
    double final_layer_share = 0.0;  // MACs of the last deconvolution / total
    double latency_ms = 0.0;         // OS, summed over the chain
};

// MAC share of the last compute layer in topological order.
double final_layer_mac_share(const WorkloadGraph& graph);

std::vector<OccupancyPoint> occupancy_study(const std::vector<std::int64_t>& upscales, const CostProfile& profile);

struct LanePoint {
    double fraction = 0.0;  // share of the lane trunk's compute that is kept
    double latency_ms = 0.0;
    bool exceeds = false;
};

struct LaneStudy {
    double serial_ms = 0.0;  // full lane trunk on one OS chiplet
    double threshold_ms = 82.0;
    std::vector<LanePoint> points;
    std::optional<double> crossing;  // fraction at which latency reaches the threshold, if within (0, 1]
};

LaneStudy lane_fraction_study(const WorkloadGraph& graph, const CostProfile& profile,
                              const std::vector<double>& fractions, double threshold_ms = 82.0);

}  // namespace mcm
