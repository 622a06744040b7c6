#include "mcm/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "mcm/errors.hpp"

namespace mcm {

std::array<std::vector<Position>, kStageCount> stage_regions(const McmSpec& mcm) {
    std::array<std::vector<Position>, kStageCount> regions;
    const int w = mcm.grid_w, h = mcm.grid_h;
    auto region_of = [&](int x, int y) -> int {
        if (w % 2 == 0 && h % 2 == 0) return (y >= h / 2 ? 2 : 0) + (x >= w / 2 ? 1 : 0);
        if (w % 4 == 0) return x / (w / 4);
        return y / (h / 4);
    };
    if (!((w % 2 == 0 && h % 2 == 0) || w % 4 == 0 || h % 4 == 0))
        throw CapacityError("a " + std::to_string(w) + "x" + std::to_string(h) +
                            " grid cannot be divided into 4 equal contiguous regions");
    for (int x = 0; x < w; ++x)
        for (int y = 0; y < h; ++y) regions[region_of(x, y)].push_back(Position{x, y});
    return regions;
}

namespace {

constexpr double kTieEps = 1e-9;

struct Unit {
    bool shard = false;
    StageId stage = StageId::FeBfpn;
    // Shard units: one layer split k ways.
    std::size_t layer = 0;
    std::int64_t k = 1;
    std::int64_t replication = 1;
    std::int64_t max_k = 1;
    ShardAxis axis = ShardAxis::Replica;
    double full_ms = 0.0;
    // Partition units: a contiguous run of one model's layers on one chiplet.
    int model = -1;
    std::string model_name;
    std::vector<std::size_t> layers;
    std::vector<double> layer_ms;

    double latency() const {
        if (shard) return full_ms / static_cast<double>(k);
        return std::accumulate(layer_ms.begin(), layer_ms.end(), 0.0);
    }
    std::int64_t chiplets() const { return shard ? k : 1; }
    bool valid_k(std::int64_t c) const {
        if (c < 1 || c > max_k) return false;
        return axis != ShardAxis::Replica || replication % c == 0;
    }
};

struct StageState {
    std::vector<Position> region;
    std::vector<std::size_t> units;  // indices into the unit table
    bool touched = false;            // any move applied
};

std::int64_t max_shards(const LayerDescriptor& l, const ConcurrencyGroup& g) {
    switch (g.shard_axis) {
        case ShardAxis::Replica: return g.replication;
        case ShardAxis::OutputChannel: return l.output_shape.channels;
        case ShardAxis::SpatialTile: return l.output_shape.height;
    }
    return 1;
}

class Matcher {
public:
    Matcher(const WorkloadGraph& g, const McmSpec& mcm, const CostProfile& profile, const MatchOptions& opt)
        : g_(g), mcm_(mcm), profile_(profile), opt_(opt) {
        if (auto err = mcm.check(); !err.empty()) throw ConfigError("mcm: " + err);
        auto regions = stage_regions(mcm);
        for (int s = 0; s < kStageCount; ++s) stages_[s].region = regions[s];
        build_units();
    }

    MatchResult run() {
        MatchResult res;
        const auto& fe = stages_[0];
        lat_base_ = fe.units.empty() ? 0.0 : stage_latency(0);
        if (lat_base_ <= 0) {
            // No FE+BFPN stage: fall back to the least-loaded non-empty stage.
            lat_base_ = std::numeric_limits<double>::infinity();
            for (int s = 0; s < kStageCount; ++s)
                if (!stages_[s].units.empty() && stage_latency(s) > 0) lat_base_ = std::min(lat_base_, stage_latency(s));
            if (!std::isfinite(lat_base_)) lat_base_ = 0.0;
        }
        res.lat_base_ms = lat_base_;

        bool exhausted = lat_base_ <= 0;
        int round = 0;
        while (!exhausted && round < opt_.max_rounds) {
            ++round;
            const double target = lat_base_ / round * (1.0 + opt_.tolerance);
            // Outer loop over bottleneck stages; the inner loop keeps sharding the
            // chosen stage's bottleneck layers until the stage meets the target.
            while (!exhausted) {
                const int s = bottleneck_stage();
                if (s < 0 || stage_latency(s) <= target) break;
                while (stage_latency(s) > target)
                    if (!iterate(s, target, res)) {
                        exhausted = true;
                        break;
                    }
            }
            if (!opt_.deepen) break;
        }
        res.rounds = round;
        res.exhausted = exhausted;
        res.iterations = iteration_;
        res.final_stage_pipe_ms = max_stage_latency();
        res.schedule = materialize();
        return res;
    }

    Schedule materialize() const {
        Schedule sch;
        sch.mode = PipelineMode::Layerwise;
        for (int s = 0; s < kStageCount; ++s) {
            const auto& st = stages_[s];
            auto region = st.region;
            std::sort(region.begin(), region.end());
            sch.stage_regions[s] = region;
            std::size_t next = 0;
            auto take = [&]() -> Position {
                if (next >= region.size())
                    throw CapacityError(std::string("stage ") + std::string(to_string(static_cast<StageId>(s))) +
                                        " overflows its region");
                return region[next++];
            };
            for (auto ui : st.units) {
                const auto& u = units_[ui];
                if (u.shard) {
                    std::vector<Position> pos;
                    for (std::int64_t i = 0; i < u.k; ++i) pos.push_back(take());
                    sch.assign(g_.layer(u.layer).id, pos, u.axis);
                } else {
                    const Position p = take();
                    for (auto li : u.layers) sch.assign(g_.layer(li).id, {p});
                }
            }
        }
        return sch;
    }

private:
    void build_units() {
        std::vector<char> is_shard(g_.size(), 0);
        for (const auto& st : g_.stages()) {
            const int s = static_cast<int>(st.stage_id);
            const ChipletSpec spec = stage_spec(s);
            for (const auto& grp : st.concurrency_groups) {
                if (!grp.shardable) continue;
                for (const auto& id : grp.member_layer_ids) {
                    Unit u;
                    u.shard = true;
                    u.stage = st.stage_id;
                    u.layer = g_.index_of(id);
                    u.replication = grp.replication;
                    u.axis = grp.shard_axis;
                    u.max_k = std::max<std::int64_t>(1, max_shards(g_.layer(u.layer), grp));
                    u.full_ms = chiplet_cost(g_, u.layer, spec, profile_).latency_ms;
                    is_shard[u.layer] = 1;
                    pending_shards_[s].push_back(units_.size());
                    units_.push_back(std::move(u));
                }
            }
            for (std::size_t m = 0; m < st.model_instances.size(); ++m) {
                Unit u;
                u.stage = st.stage_id;
                u.model = static_cast<int>(m);
                u.model_name = st.model_instances[m].name;
                for (const auto& id : st.model_instances[m].layer_ids) {
                    const auto li = g_.index_of(id);
                    if (is_shard[li]) continue;
                    u.layers.push_back(li);
                    u.layer_ms.push_back(chiplet_cost(g_, li, spec, profile_).latency_ms);
                }
                if (u.layers.empty()) continue;
                stages_[s].units.push_back(units_.size());
                units_.push_back(std::move(u));
            }
            // Shard units after the model partitions, ordered by layer index.
            auto& ps = pending_shards_[s];
            std::sort(ps.begin(), ps.end(), [&](auto a, auto b) { return units_[a].layer < units_[b].layer; });
            for (auto ui : ps) stages_[s].units.push_back(ui);
        }
        for (int s = 0; s < kStageCount; ++s) {
            const auto used = used_chiplets(s);
            const auto have = static_cast<std::int64_t>(stages_[s].region.size());
            if (used > have)
                throw CapacityError(std::string("stage ") + std::string(to_string(static_cast<StageId>(s))) + " needs " +
                                    std::to_string(used) + " chiplets for its concurrent units but its region has " +
                                    std::to_string(have) + " (deficit " + std::to_string(used - have) + ")");
        }
    }

    ChipletSpec stage_spec(int s) const {
        const auto& r = stages_[s].region;
        return r.empty() ? ChipletSpec{} : mcm_.at(r.front());
    }

    std::int64_t used_chiplets(int s) const {
        std::int64_t n = 0;
        for (auto ui : stages_[s].units) n += units_[ui].chiplets();
        return n;
    }
    std::int64_t free_chiplets(int s) const {
        return static_cast<std::int64_t>(stages_[s].region.size()) - used_chiplets(s);
    }

    double stage_latency(int s) const {
        double m = 0.0;
        for (auto ui : stages_[s].units) m = std::max(m, units_[ui].latency());
        return m;
    }
    double max_stage_latency() const {
        double m = 0.0;
        for (int s = 0; s < kStageCount; ++s) m = std::max(m, stage_latency(s));
        return m;
    }
    int bottleneck_stage() const {
        int best = -1;
        double m = 0.0;
        for (int s = 0; s < kStageCount; ++s) {
            const double l = stage_latency(s);
            if (l > m * (1.0 + kTieEps) && l > 0) {
                m = l;
                best = s;
            }
        }
        return best;
    }

    // The untouched FE+BFPN stage, still at Lat_base, lends spare chiplets to neighbours.
    bool can_donate_to(int receiver) const {
        if (receiver == 0 || stages_[0].touched || free_chiplets(0) <= 0) return false;
        if (std::abs(stage_latency(0) - lat_base_) > kTieEps * lat_base_) return false;
        for (const auto& a : stages_[0].region)
            for (const auto& b : stages_[receiver].region)
                if (manhattan(a, b) == 1) return true;
        return false;
    }
    std::int64_t donor_free(int receiver) const { return can_donate_to(receiver) ? free_chiplets(0) : 0; }

    void donate(int receiver, int iteration, MatchResult& res) {
        // Lend the donor position closest to the receiver region; ties to lowest (x, y).
        auto& donor = stages_[0].region;
        std::sort(donor.begin(), donor.end());
        std::size_t best = 0;
        int best_d = std::numeric_limits<int>::max();
        for (std::size_t i = 0; i < donor.size(); ++i) {
            int d = std::numeric_limits<int>::max();
            for (const auto& b : stages_[receiver].region) d = std::min(d, manhattan(donor[i], b));
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        const Position p = donor[best];
        donor.erase(donor.begin() + static_cast<std::ptrdiff_t>(best));
        const auto before = static_cast<std::int64_t>(stages_[receiver].region.size());
        stages_[receiver].region.push_back(p);
        DecisionRecord r;
        r.iteration = iteration;
        r.action = "donate";
        r.stage = static_cast<StageId>(receiver);
        r.layer = "FeBfpn" + to_string(p);
        r.k_before = before;
        r.k_after = before + 1;
        r.stage_before_ms = r.stage_after_ms = stage_latency(receiver);
        r.pipe_latency_ms = max_stage_latency();
        res.log.push_back(r);
    }

    // Smallest chiplet increment that lowers the unit, or -1.
    std::int64_t min_need(const Unit& u) const {
        if (!u.shard) return best_cut(u) > 0 ? 1 : -1;
        for (std::int64_t c = u.k + 1; c <= u.max_k; ++c)
            if (u.valid_k(c)) return c - u.k;
        return -1;
    }

    // Cut index nearest the half-latency point that strictly lowers the partition, or 0.
    std::size_t best_cut(const Unit& u) const {
        if (u.layers.size() < 2) return 0;
        const double total = u.latency();
        double prefix = 0.0, best_gap = std::numeric_limits<double>::infinity();
        std::size_t best = 0;
        for (std::size_t c = 1; c < u.layers.size(); ++c) {
            prefix += u.layer_ms[c - 1];
            const double gap = std::abs(prefix - total / 2.0);
            const bool lowers = std::max(prefix, total - prefix) < total * (1.0 - kTieEps);
            if (lowers && gap < best_gap - kTieEps) {
                best_gap = gap;
                best = c;
            }
        }
        return best;
    }

    bool iterate(int s, double target, MatchResult& res) {
        auto& st = stages_[s];
        const double before = stage_latency(s);
        std::vector<std::size_t> tied;
        for (auto ui : st.units)
            if (units_[ui].latency() >= before * (1.0 - kTieEps)) tied.push_back(ui);

        std::int64_t need = 0;
        for (auto ui : tied) {
            const auto n = min_need(units_[ui]);
            if (n < 0) return false;
            need += n;
        }
        if (need > free_chiplets(s) + donor_free(s)) return false;

        ++iteration_;
        std::int64_t budget_left = free_chiplets(s) + donor_free(s);
        for (std::size_t t = 0; t < tied.size(); ++t) {
            auto& u = units_[tied[t]];
            // Keep enough chiplets for the remaining tied units' minimal moves.
            std::int64_t reserve = 0;
            for (std::size_t r = t + 1; r < tied.size(); ++r) reserve += min_need(units_[tied[r]]);
            const std::int64_t budget = budget_left - reserve;

            DecisionRecord rec;
            rec.iteration = iteration_;
            rec.stage = static_cast<StageId>(s);
            rec.stage_before_ms = before;
            std::int64_t used = 0;
            if (u.shard) {
                std::int64_t pick = -1;
                for (std::int64_t c = u.k + 1; c <= u.max_k && c - u.k <= budget; ++c)
                    if (u.valid_k(c) && u.full_ms / static_cast<double>(c) <= target) {
                        pick = c;
                        break;
                    }
                if (pick < 0)
                    for (std::int64_t c = u.k + 1; c <= u.max_k && c - u.k <= budget; ++c)
                        if (u.valid_k(c)) pick = c;
                used = pick - u.k;
                borrow(s, used, res);
                rec.action = "shard";
                rec.layer = g_.layer(u.layer).id;
                rec.k_before = u.k;
                rec.k_after = pick;
                u.k = pick;
                rec.unit_latency_ms = u.latency();
            } else {
                const auto cut = best_cut(u);
                used = 1;
                borrow(s, used, res);
                Unit tail = u;
                tail.layers.assign(u.layers.begin() + static_cast<std::ptrdiff_t>(cut), u.layers.end());
                tail.layer_ms.assign(u.layer_ms.begin() + static_cast<std::ptrdiff_t>(cut), u.layer_ms.end());
                u.layers.resize(cut);
                u.layer_ms.resize(cut);
                std::int64_t parts_before = 0;
                for (auto ui : st.units)
                    if (!units_[ui].shard && units_[ui].model == u.model) ++parts_before;
                const auto pos = std::find(st.units.begin(), st.units.end(), tied[t]) - st.units.begin();
                st.units.insert(st.units.begin() + pos + 1, units_.size());
                rec.action = "split";
                rec.layer = u.model_name;
                rec.k_before = parts_before;
                rec.k_after = parts_before + 1;
                rec.unit_latency_ms = std::max(u.latency(), tail.latency());
                units_.push_back(std::move(tail));
            }
            budget_left -= used;
            st.touched = true;
            rec.stage_after_ms = stage_latency(s);
            rec.pipe_latency_ms = max_stage_latency();
            res.log.push_back(rec);
        }
        return true;
    }

    // Ensure `n` free chiplets in stage s, borrowing from the donor when short.
    void borrow(int s, std::int64_t n, MatchResult& res) {
        while (free_chiplets(s) < n && can_donate_to(s)) donate(s, iteration_, res);
    }

    const WorkloadGraph& g_;
    const McmSpec& mcm_;
    const CostProfile& profile_;
    MatchOptions opt_;
    std::array<StageState, kStageCount> stages_;
    std::array<std::vector<std::size_t>, kStageCount> pending_shards_;
    std::vector<Unit> units_;
    double lat_base_ = 0.0;
    int iteration_ = 0;
};

}  // namespace

Schedule initial_allocation(const WorkloadGraph& graph, const McmSpec& mcm) {
    MatchOptions opt;
    opt.max_rounds = 0;
    return Matcher(graph, mcm, CostProfile::analytical(), opt).materialize();
}

MatchResult throughput_match(const WorkloadGraph& graph, const McmSpec& mcm, const CostProfile& profile,
                             const MatchOptions& options) {
    Matcher m(graph, mcm, profile, options);
    MatchResult res = m.run();
    res.schedule = place(res.schedule, graph, mcm);
    return res;
}

// ---------------------------------------------------------------------------
// Placement

namespace {

struct Traffic {
    std::size_t a;  // virtual chiplet
    std::size_t b;
    double bytes;
};

}  // namespace

double placement_nop_energy(const Schedule& schedule, const WorkloadGraph& graph, const McmSpec& mcm) {
    double energy = 0.0;
    for (const auto& e : graph.edges()) {
        auto pu = schedule.assignment.find(e.producer);
        auto pv = schedule.assignment.find(e.consumer);
        if (pu == schedule.assignment.end() || pv == schedule.assignment.end()) continue;
        const auto& src = pu->second.chiplets;
        const auto& dst = pv->second.chiplets;
        if (src.empty() || dst.empty()) continue;
        const double share = static_cast<double>(e.shape.byte_size()) / static_cast<double>(src.size() * dst.size());
        for (const auto& a : src)
            for (const auto& b : dst) energy += share * 8.0 * mcm.energy_per_bit * manhattan(a, b);
    }
    return energy;
}

Schedule place(const Schedule& schedule, const WorkloadGraph& graph, const McmSpec& mcm) {
    // Virtual chiplets: currently used positions; everything on one moves together.
    std::map<Position, std::size_t> vid;
    std::vector<Position> vpos;
    for (const auto& [id, pl] : schedule.assignment)
        for (const auto& p : pl.chiplets) {
            if (!mcm.contains(p)) throw CapacityError("layer " + id + " placed outside the grid at " + to_string(p));
            if (!vid.count(p)) {
                vid.emplace(p, vpos.size());
                vpos.push_back(p);
            }
        }

    std::vector<Traffic> traffic;
    std::vector<double> volume(vpos.size(), 0.0);
    for (const auto& e : graph.edges()) {
        auto pu = schedule.assignment.find(e.producer);
        auto pv = schedule.assignment.find(e.consumer);
        if (pu == schedule.assignment.end() || pv == schedule.assignment.end()) continue;
        const auto& src = pu->second.chiplets;
        const auto& dst = pv->second.chiplets;
        if (src.empty() || dst.empty()) continue;
        const double share = static_cast<double>(e.shape.byte_size()) / static_cast<double>(src.size() * dst.size());
        for (const auto& a : src)
            for (const auto& b : dst) {
                const auto va = vid.at(a), vb = vid.at(b);
                if (va == vb) continue;
                traffic.push_back({va, vb, share});
                volume[va] += share;
                volume[vb] += share;
            }
    }
    std::vector<std::vector<std::size_t>> touching(vpos.size());
    for (std::size_t t = 0; t < traffic.size(); ++t) {
        touching[traffic[t].a].push_back(t);
        touching[traffic[t].b].push_back(t);
    }

    std::vector<Position> placed_at(vpos.size());
    std::vector<char> placed(vpos.size(), 0);
    std::map<Position, Position> remap;

    for (int s = 0; s < kStageCount; ++s) {
        auto region = schedule.stage_regions[s];
        std::sort(region.begin(), region.end());
        std::vector<std::size_t> members;
        for (const auto& p : region)
            if (auto it = vid.find(p); it != vid.end()) members.push_back(it->second);
        // Virtual chiplets outside every region keep their position.
        std::stable_sort(members.begin(), members.end(), [&](auto a, auto b) {
            if (volume[a] != volume[b]) return volume[a] > volume[b];
            return vpos[a] < vpos[b];
        });
        std::vector<char> taken(region.size(), 0);
        for (auto v : members) {
            std::size_t best = region.size();
            double best_cost = std::numeric_limits<double>::infinity();
            for (std::size_t q = 0; q < region.size(); ++q) {
                if (taken[q]) continue;
                double cost = 0.0;
                for (auto t : touching[v]) {
                    const auto other = traffic[t].a == v ? traffic[t].b : traffic[t].a;
                    if (!placed[other]) continue;
                    cost += traffic[t].bytes * manhattan(region[q], placed_at[other]);
                }
                if (best == region.size() || cost < best_cost - 1e-12 * std::max(1.0, best_cost)) {
                    best_cost = cost;
                    best = q;
                }
            }
            if (best == region.size()) throw CapacityError("placement overflows the stage region");
            taken[best] = 1;
            placed[v] = 1;
            placed_at[v] = region[best];
            remap[vpos[v]] = region[best];
        }
    }
    for (std::size_t v = 0; v < vpos.size(); ++v)
        if (!placed[v]) {
            placed_at[v] = vpos[v];
            remap[vpos[v]] = vpos[v];
        }

    // Pairwise exchange inside each region until no swap or move lowers bytes x hops.
    auto total = [&]() {
        double c = 0.0;
        for (const auto& t : traffic) c += t.bytes * manhattan(placed_at[t.a], placed_at[t.b]);
        return c;
    };
    double current = total();
    for (bool improved = true; improved;) {
        improved = false;
        for (int s = 0; s < kStageCount; ++s) {
            const auto& region = schedule.stage_regions[s];
            std::map<Position, std::size_t> occupant;
            for (std::size_t v = 0; v < vpos.size(); ++v)
                if (placed[v] && std::find(region.begin(), region.end(), placed_at[v]) != region.end())
                    occupant[placed_at[v]] = v;
            std::vector<Position> slots = region;
            std::sort(slots.begin(), slots.end());
            for (std::size_t i = 0; i < slots.size(); ++i)
                for (std::size_t j = i + 1; j < slots.size(); ++j) {
                    auto a = occupant.find(slots[i]), b = occupant.find(slots[j]);
                    if (a == occupant.end() && b == occupant.end()) continue;
                    const auto swap_in = [&] {
                        if (a != occupant.end()) placed_at[a->second] = slots[j];
                        if (b != occupant.end()) placed_at[b->second] = slots[i];
                    };
                    const auto swap_back = [&] {
                        if (a != occupant.end()) placed_at[a->second] = slots[i];
                        if (b != occupant.end()) placed_at[b->second] = slots[j];
                    };
                    swap_in();
                    const double c = total();
                    if (c < current - 1e-12 * std::max(1.0, current)) {
                        current = c;
                        improved = true;
                        const auto va = a != occupant.end() ? std::optional(a->second) : std::nullopt;
                        const auto vb = b != occupant.end() ? std::optional(b->second) : std::nullopt;
                        occupant.erase(slots[i]);
                        occupant.erase(slots[j]);
                        if (va) occupant[slots[j]] = *va;
                        if (vb) occupant[slots[i]] = *vb;
                    } else {
                        swap_back();
                    }
                }
        }
    }
    for (std::size_t v = 0; v < vpos.size(); ++v) remap[vpos[v]] = placed_at[v];

    Schedule out = schedule;
    for (auto& [id, pl] : out.assignment)
        for (auto& p : pl.chiplets) p = remap.at(p);
    return out;
}

Schedule random_placement(const Schedule& schedule, std::mt19937_64& rng) {
    std::map<Position, Position> remap;
    for (const auto& region_in : schedule.stage_regions) {
        auto region = region_in;
        std::sort(region.begin(), region.end());
        std::vector<Position> used;
        for (const auto& [id, pl] : schedule.assignment)
            for (const auto& p : pl.chiplets)
                if (std::binary_search(region.begin(), region.end(), p)) used.push_back(p);
        std::sort(used.begin(), used.end());
        used.erase(std::unique(used.begin(), used.end()), used.end());
        for (std::size_t i = region.size(); i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(region[i - 1], region[pick(rng)]);
        }
        for (std::size_t i = 0; i < used.size(); ++i) remap[used[i]] = region[i];
    }
    Schedule out = schedule;
    for (auto& [id, pl] : out.assignment)
        for (auto& p : pl.chiplets)
            if (auto it = remap.find(p); it != remap.end()) p = it->second;
    return out;
}

std::string decision_log_csv(const std::vector<DecisionRecord>& log) {
    std::ostringstream out;
    out << "iteration,action,stage,layer,k_before,k_after,unit_latency_ms,stage_before_ms,stage_after_ms,pipe_latency_ms\n";
    for (const auto& r : log)
        out << r.iteration << ',' << r.action << ',' << to_string(r.stage) << ',' << r.layer << ',' << r.k_before << ','
            << r.k_after << ',' << r.unit_latency_ms << ',' << r.stage_before_ms << ',' << r.stage_after_ms << ','
            << r.pipe_latency_ms << "\n";
    return out.str();
}

}  // namespace mcm
