#include "mcm/cost.hpp"

#include "mcm/errors.hpp"

namespace mcm {

std::string_view to_string(Dataflow df) { return df == Dataflow::OutputStationary ? "OS" : "WS"; }

Dataflow parse_dataflow(std::string_view t) {
    if (t == "OS" || t == "OutputStationary" || t == "os") return Dataflow::OutputStationary;
    if (t == "WS" || t == "WeightStationary" || t == "ws") return Dataflow::WeightStationary;
    throw ConfigError("unknown dataflow '" + std::string(t) + "'");
}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::Paper: return "paper";
        case Provenance::Synthetic: return "synthetic";
        case Provenance::Measured: return "measured";
    }
    return "?";
}

Provenance parse_provenance(std::string_view t) {
    if (t == "paper") return Provenance::Paper;
    if (t == "synthetic") return Provenance::Synthetic;
    if (t == "measured") return Provenance::Measured;
    throw ConfigError("unknown provenance tag '" + std::string(t) + "'");
}

CostProfile CostProfile::fixture(std::string name) {
    CostProfile p;
    p.source_ = ProfileSource::FixtureFile;
    p.name_ = std::move(name);
    return p;
}

CostProfile CostProfile::analytical(AnalyticalParams params) {
    if (params.pe_count <= 0 || params.frequency_hz <= 0 || params.macs_per_pe_per_cycle <= 0 ||
        params.os_utilization <= 0 || params.os_utilization > 1 || params.ws_utilization <= 0 ||
        params.ws_utilization > 1 || params.energy_per_mac_os < 0 || params.energy_per_mac_ws < 0 ||
        params.energy_per_byte_dram < 0)
        throw ConfigError("analytical parameters must be positive with utilizations in (0, 1]");
    CostProfile p;
    p.source_ = ProfileSource::Analytical;
    p.name_ = "analytical";
    p.params_ = params;
    return p;
}

void CostProfile::set(const std::string& layer_id, Dataflow df, CostEntry cost, Provenance prov) {
    rows_[{layer_id, df}] = Row{cost, prov};
}

const CostProfile::Row* CostProfile::find(std::string_view layer_id, Dataflow df) const {
    auto it = rows_.find({std::string(layer_id), df});
    return it == rows_.end() ? nullptr : &it->second;
}

bool CostProfile::covers(Dataflow df) const {
    if (source_ == ProfileSource::Analytical) return true;
    for (const auto& [k, v] : rows_)
        if (k.second == df) return true;
    return false;
}

CostEntry analytical_cost(const LayerDescriptor& layer, Dataflow df, const AnalyticalParams& p) {
    const double macs = static_cast<double>(mac_count(layer));
    const double util = df == Dataflow::OutputStationary ? p.os_utilization : p.ws_utilization;
    const double epm = df == Dataflow::OutputStationary ? p.energy_per_mac_os : p.energy_per_mac_ws;
    const double moved = static_cast<double>(input_bytes(layer) + output_bytes(layer) + weight_bytes(layer));
    CostEntry e;
    e.latency_ms = macs / (static_cast<double>(p.pe_count * p.macs_per_pe_per_cycle) * p.frequency_hz * util) * 1e3;
    e.energy_j = macs * epm + moved * p.energy_per_byte_dram;
    return e;
}

CostEntry layer_cost(const LayerDescriptor& layer, Dataflow df, const CostProfile& profile) {
    if (profile.source() == ProfileSource::Analytical) return analytical_cost(layer, df, profile.params());
    if (const auto* row = profile.find(layer.id, df)) return row->cost;
    if (!is_compute(layer.kind)) return {};
    throw LookupError("no cost entry for (" + layer.id + ", " + std::string(to_string(df)) + ") in profile '" +
                      profile.name() + "'");
}

CostEntry unit_cost(const WorkloadGraph& graph, std::size_t idx, Dataflow df, const CostProfile& profile) {
    const auto& layer = graph.layer(idx);
    CostEntry e = layer_cost(layer, df, profile);
    if (profile.source() == ProfileSource::Analytical) {
        if (const auto* g = graph.group_of(layer.id)) {
            e.latency_ms *= static_cast<double>(g->replication);
            e.energy_j *= static_cast<double>(g->replication);
        }
    }
    return e;
}

CostEntry shard_cost(const CostEntry& entry, std::int64_t k) {
    if (k < 1) throw DomainError("shard factor must be >= 1");
    return CostEntry{entry.latency_ms / static_cast<double>(k), entry.energy_j};
}

std::vector<Affinity> dataflow_affinity(const WorkloadGraph& graph, const CostProfile& profile) {
    std::vector<Affinity> out;
    for (std::size_t i = 0; i < graph.size(); ++i) {
        const auto& l = graph.layer(i);
        if (!is_compute(l.kind)) continue;
        const auto os = unit_cost(graph, i, Dataflow::OutputStationary, profile);
        const auto ws = unit_cost(graph, i, Dataflow::WeightStationary, profile);
        out.push_back(Affinity{l.id, os.latency_ms - ws.latency_ms, os.energy_j - ws.energy_j});
    }
    return out;
}

std::vector<StageTotal> stage_totals(const WorkloadGraph& graph, const CostProfile& profile, Dataflow df,
                                     FeScope scope) {
    std::vector<StageTotal> out;
    double lat_sum = 0.0, en_sum = 0.0;
    for (const auto& st : graph.stages()) {
        StageTotal t;
        t.stage = st.stage_id;
        for (std::size_t m = 0; m < st.model_instances.size(); ++m) {
            // The FE+BFPN models are identical per camera; the single-camera view counts one.
            if (st.stage_id == StageId::FeBfpn && scope == FeScope::SingleCamera && m > 0) break;
            for (const auto& id : st.model_instances[m].layer_ids) {
                const auto c = unit_cost(graph, graph.index_of(id), df, profile);
                t.latency_ms += c.latency_ms;
                t.energy_j += c.energy_j;
            }
        }
        lat_sum += t.latency_ms;
        en_sum += t.energy_j;
        out.push_back(t);
    }
    for (auto& t : out) {
        t.fraction_of_total = lat_sum > 0 ? t.latency_ms / lat_sum : 0.0;
        t.energy_fraction = en_sum > 0 ? t.energy_j / en_sum : 0.0;
    }
    return out;
}

double mean_ws_os_latency_ratio(const WorkloadGraph& graph, const CostProfile& profile) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < graph.size(); ++i) {
        if (!is_compute(graph.layer(i).kind)) continue;
        const auto os = unit_cost(graph, i, Dataflow::OutputStationary, profile);
        const auto ws = unit_cost(graph, i, Dataflow::WeightStationary, profile);
        if (os.latency_ms <= 0) continue;
        sum += ws.latency_ms / os.latency_ms;
        ++n;
    }
    return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace mcm
