#include "mcm/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mcm/errors.hpp"

namespace mcm {

std::string_view to_string(PipelineMode mode) { return mode == PipelineMode::Stagewise ? "stagewise" : "layerwise"; }

PipelineMode parse_pipeline_mode(std::string_view t) {
    if (t == "stagewise" || t == "Stagewise") return PipelineMode::Stagewise;
    if (t == "layerwise" || t == "Layerwise") return PipelineMode::Layerwise;
    throw ConfigError("unknown pipelining mode '" + std::string(t) + "'");
}

void Schedule::assign(const std::string& layer_id, std::vector<Position> chiplets, ShardAxis axis) {
    LayerPlacement p;
    p.shard_factor = static_cast<std::int64_t>(chiplets.size());
    p.chiplets = std::move(chiplets);
    p.shard_axis = axis;
    assignment[layer_id] = std::move(p);
}

CostEntry chiplet_cost(const WorkloadGraph& graph, std::size_t idx, const ChipletSpec& chiplet,
                       const CostProfile& profile, const ScalingParams& scaling) {
    const CostEntry unit = unit_cost(graph, idx, chiplet.dataflow, profile);
    if (chiplet.pe_count == profile.reference_pe_count()) return unit;
    return scale_cost(graph.layer(idx), chiplet.dataflow, unit, profile.reference_pe_count(), chiplet.pe_count, scaling);
}

namespace {

std::vector<int> stage_index(const WorkloadGraph& graph) {
    std::vector<int> out(graph.size(), -1);
    for (const auto& st : graph.stages())
        for (const auto& m : st.model_instances)
            for (const auto& id : m.layer_ids)
                if (graph.has_layer(id)) out[graph.index_of(id)] = static_cast<int>(st.stage_id);
    return out;
}

// Gather of `bytes` spread evenly over the producer shards into one consumer shard.
TransferCost shard_gather(const std::vector<Position>& src, double bytes_per_source, const Position& dst,
                          const McmSpec& mcm) {
    TransferCost total;
    for (const auto& s : src) {
        const int h = manhattan(s, dst);
        const double lat = h * (bytes_per_source / mcm.nop_bandwidth) + h * mcm.hop_latency;
        total.latency_s = std::max(total.latency_s, lat);
        total.energy_j += bytes_per_source * 8.0 * mcm.energy_per_bit * h;
        total.hops = std::max(total.hops, h);
    }
    return total;
}

}  // namespace

Evaluation evaluate_detailed(const Schedule& schedule, const WorkloadGraph& graph, const McmSpec& mcm,
                             const CostProfile& profile, const EvaluateOptions& options) {
    const auto order = graph.topological_order();
    if (order.empty() && graph.size() > 0) throw EvaluationError("workload graph is cyclic");
    const auto stages = stage_index(graph);
    const auto& preds = graph.predecessors();

    // Resolve positions; data-movement layers without an assignment ride with a producer.
    std::vector<std::vector<Position>> where(graph.size());
    for (auto i : order) {
        const auto& l = graph.layer(i);
        auto it = schedule.assignment.find(l.id);
        if (it != schedule.assignment.end() && !it->second.chiplets.empty()) {
            for (const auto& p : it->second.chiplets)
                if (!mcm.contains(p)) throw EvaluationError("layer " + l.id + " placed outside the grid at " + to_string(p));
            where[i] = it->second.chiplets;
        } else if (is_compute(l.kind)) {
            throw EvaluationError("compute layer " + l.id + " is not assigned");
        } else if (!preds[i].empty()) {
            where[i] = {where[preds[i].front()].front()};
        }
    }

    Evaluation ev;
    const std::size_t n_chiplets = static_cast<std::size_t>(mcm.count());
    std::vector<ChipletLoad> loads(n_chiplets);
    std::vector<std::array<bool, kStageCount>> hosts(n_chiplets);
    for (std::size_t c = 0; c < n_chiplets; ++c) {
        loads[c].position = mcm.position(c);
        hosts[c].fill(false);
    }

    // Incoming edges per consumer, keyed by consumer index.
    std::vector<std::vector<std::size_t>> in_edges(graph.size());
    for (std::size_t e = 0; e < graph.edges().size(); ++e) {
        const auto& edge = graph.edges()[e];
        if (!graph.has_layer(edge.producer) || !graph.has_layer(edge.consumer)) continue;
        in_edges[graph.index_of(edge.consumer)].push_back(e);
    }

    std::vector<double> finish(graph.size(), 0.0);
    std::vector<double> chiplet_free(n_chiplets, 0.0);
    const auto ref_pe = static_cast<double>(profile.reference_pe_count());

    for (auto i : order) {
        const auto& pos = where[i];
        if (pos.empty()) continue;
        const double k = static_cast<double>(pos.size());

        // NoP: every consumer shard gathers its slice from all producer shards.
        std::vector<double> ready(pos.size(), 0.0);
        for (auto e : in_edges[i]) {
            const auto& edge = graph.edges()[e];
            const auto u = graph.index_of(edge.producer);
            EdgeTraffic traffic{edge.producer, edge.consumer, 0.0, 0.0, 0};
            const auto& src = where[u];
            if (src.empty()) continue;
            const double per_source = static_cast<double>(edge.shape.byte_size()) / (static_cast<double>(src.size()) * k);
            for (std::size_t j = 0; j < pos.size(); ++j) {
                TransferCost t;
                if (options.include_nop) t = shard_gather(src, per_source, pos[j], mcm);
                const double lat_ms = t.latency_s * 1e3;
                ready[j] = std::max(ready[j], finish[u] + lat_ms);
                loads[mcm.index(pos[j])].nop_ms += lat_ms;
                traffic.latency_ms = std::max(traffic.latency_ms, lat_ms);
                traffic.energy_j += t.energy_j;
                traffic.max_hops = std::max(traffic.max_hops, t.hops);
            }
            ev.nop_energy_j += traffic.energy_j;
            ev.edges.push_back(std::move(traffic));
        }
        for (std::size_t j = 0; j < pos.size(); ++j)
            if (in_edges[i].empty()) ready[j] = 0.0;

        // Compute: shards run on their chiplets in topological order.
        double done = 0.0;
        for (std::size_t j = 0; j < pos.size(); ++j) {
            const auto c = mcm.index(pos[j]);
            const auto& spec = mcm.chiplets[c];
            const CostEntry unit = chiplet_cost(graph, i, spec, profile, options.scaling);
            const double lat = unit.latency_ms / k;
            const double ref_lat = unit_cost(graph, i, spec.dataflow, profile).latency_ms / k;
            loads[c].compute_ms += lat;
            loads[c].work_pe_ms += ref_lat * ref_pe;
            loads[c].layers.push_back(graph.layer(i).id);
            if (stages[i] >= 0) hosts[c][stages[i]] = true;
            ev.compute_energy_j += unit.energy_j / k;
            const double start = std::max(ready[j], chiplet_free[c]);
            chiplet_free[c] = start + lat;
            done = std::max(done, start + lat);
        }
        finish[i] = done;
    }

    double pipe = 0.0, work = 0.0, e2e = 0.0;
    for (std::size_t c = 0; c < n_chiplets; ++c) {
        const double lat = loads[c].compute_ms + loads[c].nop_ms;
        pipe = std::max(pipe, lat);
        work += loads[c].work_pe_ms;
        for (int s = 0; s < kStageCount; ++s)
            if (hosts[c][s]) ev.stage_pipe_ms[s] = std::max(ev.stage_pipe_ms[s], lat);
        if (!loads[c].layers.empty()) ev.chiplets.push_back(loads[c]);
    }
    for (double f : finish) e2e = std::max(e2e, f);

    double capacity = 0.0;
    for (const auto& c : mcm.chiplets) capacity += static_cast<double>(c.pe_count);

    auto& m = ev.metrics;
    m.pipe_latency_ms = pipe;
    m.e2e_latency_ms = std::max(e2e, pipe);
    m.energy_j = ev.compute_energy_j + ev.nop_energy_j;
    m.edp = m.energy_j * m.pipe_latency_ms;
    m.utilization = pipe > 0 ? std::min(1.0, work / (capacity * pipe)) : 0.0;
    return ev;
}

PipelineMetrics evaluate(const Schedule& schedule, const WorkloadGraph& graph, const McmSpec& mcm,
                         const CostProfile& profile, const EvaluateOptions& options) {
    return evaluate_detailed(schedule, graph, mcm, profile, options).metrics;
}

std::string placement_map(const Schedule& schedule, const WorkloadGraph& graph, const McmSpec& mcm) {
    static constexpr char kLetters[kStageCount] = {'F', 'S', 'T', 'R'};
    std::vector<int> count(static_cast<std::size_t>(mcm.count()), 0);
    std::vector<char> letter(static_cast<std::size_t>(mcm.count()), '.');
    for (const auto& [id, pl] : schedule.assignment) {
        const auto st = graph.has_layer(id) ? graph.stage_of(id) : std::nullopt;
        for (const auto& p : pl.chiplets) {
            if (!mcm.contains(p)) continue;
            ++count[mcm.index(p)];
            letter[mcm.index(p)] = st ? kLetters[static_cast<int>(*st)] : '?';
        }
    }
    std::ostringstream out;
    for (int y = 0; y < mcm.grid_h; ++y) {
        for (int x = 0; x < mcm.grid_w; ++x) {
            const auto c = mcm.index({x, y});
            std::string cell = count[c] ? std::string(1, letter[c]) + std::to_string(count[c]) : ".";
            if (mcm.chiplets[c].dataflow == Dataflow::WeightStationary) cell += "w";
            out << (x ? " " : "") << cell << std::string(cell.size() < 5 ? 5 - cell.size() : 0, ' ');
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace mcm
