#pragma once

#include <cstdint>

#include "mcm/cost.hpp"

namespace mcm {

// Physical PE array, rows <= cols, as close to square as the PE count allows.
struct ArrayShape {
    std::int64_t rows = 1;
    std::int64_t cols = 1;
};

ArrayShape array_shape(std::int64_t pe_count);

// Fraction of PEs that receive work when a layer's 2-D mapping plane is tiled
// onto the array: OS tiles the output plane, WS the (Cin, Cout) weight plane.
double mapping_utilization(const LayerDescriptor& layer, Dataflow df, ArrayShape array);

struct ScalingParams {
    // Operand-broadcast overhead in PEs: energy per MAC scales with (1 + beta / active PEs).
    double broadcast_beta = 23.5;
};

// Re-targets a cost measured on a ref_pe array to a target_pe array.
CostEntry scale_cost(const LayerDescriptor& layer, Dataflow df, const CostEntry& ref, std::int64_t ref_pe,
                     std::int64_t target_pe, const ScalingParams& params = {});

}  // namespace mcm
