#include "mcm/nop.hpp"

#include <algorithm>

#include "mcm/errors.hpp"

namespace mcm {

std::string to_string(const Position& p) { return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")"; }

McmSpec McmSpec::uniform(int w, int h, std::int64_t pe_count, Dataflow df) {
    McmSpec m;
    m.name = std::to_string(w) + "x" + std::to_string(h);
    m.grid_w = w;
    m.grid_h = h;
    m.chiplets.assign(static_cast<std::size_t>(std::max(0, w * h)), ChipletSpec{pe_count, df});
    return m;
}

std::string McmSpec::check() const {
    if (grid_w < 1 || grid_h < 1) return "grid dimensions must be >= 1";
    if (chiplets.size() != static_cast<std::size_t>(grid_w * grid_h)) return "grid not fully populated";
    for (const auto& c : chiplets)
        if (c.pe_count < 1) return "chiplet pe_count must be >= 1";
    if (!(nop_bandwidth > 0) || !(hop_latency > 0) || !(energy_per_bit > 0)) return "NoP parameters must be positive";
    return {};
}

int hops(const Position& src, const Position& dst, const McmSpec& mcm) {
    if (!mcm.contains(src)) throw DomainError("source " + to_string(src) + " outside the grid");
    if (!mcm.contains(dst)) throw DomainError("destination " + to_string(dst) + " outside the grid");
    return manhattan(src, dst);
}

TransferCost transfer_cost_hops(std::int64_t bytes, int hop_count, const McmSpec& mcm) {
    if (bytes < 0) throw DomainError("transfer size must be >= 0");
    TransferCost t;
    t.hops = hop_count;
    const double b = static_cast<double>(bytes);
    t.latency_s = hop_count * (b / mcm.nop_bandwidth) + hop_count * mcm.hop_latency;
    t.energy_j = b * 8.0 * mcm.energy_per_bit * hop_count;
    return t;
}

TransferCost transfer_cost(std::int64_t bytes, const Position& src, const Position& dst, const McmSpec& mcm) {
    return transfer_cost_hops(bytes, hops(src, dst, mcm), mcm);
}

TransferCost gather_cost(const std::vector<GatherSource>& sources, const Position& dst, const McmSpec& mcm) {
    if (sources.empty()) throw DomainError("gather needs at least one source");
    TransferCost total;
    for (const auto& s : sources) {
        const auto t = transfer_cost(s.bytes, s.position, dst, mcm);
        total.energy_j += t.energy_j;
        total.latency_s = std::max(total.latency_s, t.latency_s);
        total.hops = std::max(total.hops, t.hops);
    }
    return total;
}

}  // namespace mcm
