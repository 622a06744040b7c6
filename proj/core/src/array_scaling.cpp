#include <algorithm>
#include <cmath>

#include "mcm/errors.hpp"
#include "mcm/scaling.hpp"

namespace mcm {

namespace {

struct Plane {
    std::int64_t a = 1;
    std::int64_t b = 1;
};

Plane mapping_plane(const LayerDescriptor& l, Dataflow df) {
    const auto& out = l.output_shape;
    if (df == Dataflow::OutputStationary) {
        if (out.height * out.width == 1) return {out.batch, out.channels};
        return {out.batch * out.height, out.width};
    }
    if (l.kernel) return {l.kernel->in_channels, l.kernel->out_channels};
    if (l.model_dim) return {*l.model_dim, out.channels};
    return {out.channels, 1};
}

double tiled(std::int64_t a, std::int64_t b, std::int64_t r, std::int64_t c) {
    const double used = static_cast<double>(a) * static_cast<double>(b);
    const double alloc = static_cast<double>((a + r - 1) / r * r) * static_cast<double>((b + c - 1) / c * c);
    return used / alloc;
}

}  // namespace

ArrayShape array_shape(std::int64_t pe_count) {
    if (pe_count < 1) throw DomainError("pe_count must be >= 1");
    auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(pe_count)));
    while (r > 1 && pe_count % r != 0) --r;
    return ArrayShape{r, pe_count / r};
}

double mapping_utilization(const LayerDescriptor& layer, Dataflow df, ArrayShape array) {
    const Plane p = mapping_plane(layer, df);
    // Either orientation of the plane may be used; take the better one.
    return std::max(tiled(p.a, p.b, array.rows, array.cols), tiled(p.b, p.a, array.rows, array.cols));
}

CostEntry scale_cost(const LayerDescriptor& layer, Dataflow df, const CostEntry& ref, std::int64_t ref_pe,
                     std::int64_t target_pe, const ScalingParams& params) {
    if (ref_pe == target_pe) return ref;
    const double u_ref = mapping_utilization(layer, df, array_shape(ref_pe));
    const double u_t = mapping_utilization(layer, df, array_shape(target_pe));
    const double active_ref = static_cast<double>(ref_pe) * u_ref;
    const double active_t = static_cast<double>(target_pe) * u_t;
    CostEntry e;
    e.latency_ms = ref.latency_ms * active_ref / active_t;
    e.energy_j = ref.energy_j * (1.0 + params.broadcast_beta / active_t) / (1.0 + params.broadcast_beta / active_ref);
    return e;
}

}  // namespace mcm
