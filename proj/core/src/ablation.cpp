#include "mcm/ablation.hpp"

#include "mcm/autopilot.hpp"
#include "mcm/errors.hpp"

namespace mcm {

double final_layer_mac_share(const WorkloadGraph& graph) {
    std::int64_t total = 0, last = 0;
    for (auto i : graph.topological_order()) {
        const auto& l = graph.layer(i);
        if (!is_compute(l.kind)) continue;
        last = mac_count(l);
        total += last;
    }
    return total > 0 ? static_cast<double>(last) / static_cast<double>(total) : 0.0;
}

std::vector<OccupancyPoint> occupancy_study(const std::vector<std::int64_t>& upscales, const CostProfile& profile) {
    std::vector<OccupancyPoint> out;
    for (auto u : upscales) {
        const auto g = build_occupancy_trunk(u);
        OccupancyPoint pt;
        pt.upscale = u;
        pt.layers = g.size();
        for (std::size_t i = 0; i < g.size(); ++i) {
            pt.total_macs += mac_count(g.layer(i));
            pt.latency_ms += unit_cost(g, i, Dataflow::OutputStationary, profile).latency_ms;
        }
        pt.final_layer_share = final_layer_mac_share(g);
        out.push_back(pt);
    }
    return out;
}

LaneStudy lane_fraction_study(const WorkloadGraph& graph, const CostProfile& profile,
                              const std::vector<double>& fractions, double threshold_ms) {
    LaneStudy s;
    s.threshold_ms = threshold_ms;
    const ModelInstance* lane = nullptr;
    for (const auto& st : graph.stages())
        for (const auto& m : st.model_instances)
            if (m.name == "lane") lane = &m;
    if (!lane) throw ConfigError("workload has no lane trunk");
    for (const auto& id : lane->layer_ids)
        s.serial_ms += unit_cost(graph, graph.index_of(id), Dataflow::OutputStationary, profile).latency_ms;
    for (double f : fractions) {
        if (f < 0) throw DomainError("lane fraction must be non-negative");
        s.points.push_back({f, s.serial_ms * f, s.serial_ms * f > threshold_ms});
    }
    if (s.serial_ms > 0) {
        const double c = threshold_ms / s.serial_ms;
        if (c > 0 && c <= 1) s.crossing = c;
    }
    return s;
}

}  // namespace mcm
