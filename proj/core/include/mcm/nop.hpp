#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcm/cost.hpp"

namespace mcm {

// Zero-indexed grid coordinate, x to the right, y downward.
struct Position {
    int x = 0;
    int y = 0;
    bool operator==(const Position&) const = default;
    auto operator<=>(const Position& o) const {
        if (auto c = x <=> o.x; c != 0) return c;
        return y <=> o.y;
    }
};

std::string to_string(const Position& p);

struct ChipletSpec {
    std::int64_t pe_count = 256;
    Dataflow dataflow = Dataflow::OutputStationary;
    bool operator==(const ChipletSpec&) const = default;
};

struct McmSpec {
    std::string name = "mcm";
    int grid_w = 1;
    int grid_h = 1;
    std::vector<ChipletSpec> chiplets;  // row-major, y * grid_w + x
    double nop_bandwidth = 100.0e9;     // bytes per second per link
    double hop_latency = 35.0e-9;       // seconds
    double energy_per_bit = 2.04e-12;   // joules

    static McmSpec uniform(int w, int h, std::int64_t pe_count = 256, Dataflow df = Dataflow::OutputStationary);

    int count() const { return grid_w * grid_h; }
    bool contains(const Position& p) const { return p.x >= 0 && p.y >= 0 && p.x < grid_w && p.y < grid_h; }
    std::size_t index(const Position& p) const { return static_cast<std::size_t>(p.y * grid_w + p.x); }
    Position position(std::size_t index) const {
        return Position{static_cast<int>(index % grid_w), static_cast<int>(index / grid_w)};
    }
    const ChipletSpec& at(const Position& p) const { return chiplets.at(index(p)); }
    ChipletSpec& at(const Position& p) { return chiplets.at(index(p)); }

    // Empty string when valid, otherwise the first violated invariant.
    std::string check() const;
    bool operator==(const McmSpec&) const = default;
};

struct TransferCost {
    double latency_s = 0.0;
    double energy_j = 0.0;
    int hops = 0;
};

// XY-routing hop count. Throws DomainError for positions outside the grid.
int hops(const Position& src, const Position& dst, const McmSpec& mcm);
inline int manhattan(const Position& a, const Position& b) {
    return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

// Store-and-forward: each hop pays serialization plus the per-hop router delay.
TransferCost transfer_cost(std::int64_t bytes, const Position& src, const Position& dst, const McmSpec& mcm);
TransferCost transfer_cost_hops(std::int64_t bytes, int hop_count, const McmSpec& mcm);

struct GatherSource {
    Position position;
    std::int64_t bytes = 0;
};

// Parallel links: latency and hops are the max over sources, energy the sum.
TransferCost gather_cost(const std::vector<GatherSource>& sources, const Position& dst, const McmSpec& mcm);

inline constexpr int kMcmSchemaVersion = 1;
std::string mcm_to_json(const McmSpec& mcm);
McmSpec mcm_from_json(const std::string& text);
McmSpec load_mcm(const std::filesystem::path& path);
void save_mcm(const McmSpec& mcm, const std::filesystem::path& path);

}  // namespace mcm
