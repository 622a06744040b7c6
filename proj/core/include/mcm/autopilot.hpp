#pragma once

#include <string>
#include <vector>

#include "mcm/workload.hpp"

namespace mcm {

// Parameters of the four-stage HydraNet-style perception pipeline.
struct AutopilotParams {
    std::int64_t num_cameras = 8;
    std::int64_t grid_h = 20;
    std::int64_t grid_w = 80;
    std::int64_t grid_c = 256;
    std::int64_t temporal_depth = 12;
    std::int64_t temporal_channels = 300;
    std::int64_t image_h = 360;
    std::int64_t image_w = 640;
    std::int64_t bfpn_blocks = 2;
    // Any of "occupancy", "lane", "detection"; empty builds the first three stages only.
    std::vector<std::string> trunk_set = {"occupancy", "lane", "detection"};
};

WorkloadGraph build_autopilot_pipeline(const AutopilotParams& params = {});

// Standalone occupancy trunk with log2(upscale) stride-2 deconvolutions.
WorkloadGraph build_occupancy_trunk(std::int64_t upscale, const AutopilotParams& params = {});

// Ids of the four ResNet stage outputs of one camera model, in scale order.
std::vector<std::string> fe_multiscale_ids(std::int64_t camera);

}  // namespace mcm
