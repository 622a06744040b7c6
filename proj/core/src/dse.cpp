#include "mcm/dse.hpp"

#include <algorithm>
#include <cmath>
#include <bit>
#include <limits>

#include "mcm/errors.hpp"

namespace mcm {

std::string_view to_string(DseSpace s) {
    switch (s) {
        case DseSpace::Auto: return "auto";
        case DseSpace::Exhaustive: return "exhaustive";
        case DseSpace::Contiguous: return "contiguous";
    }
    return "?";
}

bool ScoredConfig::feasible() const { return score != -std::numeric_limits<double>::infinity(); }

std::vector<std::string> trunk_layers(const WorkloadGraph& graph) {
    std::vector<char> in_trunk(graph.size(), 0);
    for (const auto& st : graph.stages())
        if (st.stage_id == StageId::Trunks)
            for (const auto& m : st.model_instances)
                for (const auto& id : m.layer_ids) in_trunk[graph.index_of(id)] = 1;
    std::vector<std::string> out;
    for (auto i : graph.topological_order())
        if (in_trunk[i]) out.push_back(graph.layer(i).id);
    return out;
}

namespace {

std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Saturating arithmetic for space counts.
constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) { return (a && b > kMax / a) ? kMax : a * b; }
std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) { return a > kMax - b ? kMax : a + b; }

// Combinations of k out of n in lexicographic order.
template <typename F>
void for_each_combination(int n, int k, F&& f) {
    if (k < 0 || k > n) return;
    std::vector<int> c(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) c[i] = i;
    while (true) {
        f(c);
        int i = k - 1;
        while (i >= 0 && c[i] == n - k + i) --i;
        if (i < 0) return;
        ++c[i];
        for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
    }
}

struct TrunkModel {
    std::vector<int> layers;  // local indices in model order
};

struct Space {
    std::vector<std::string> ids;  // local layer ids, evaluation order
    std::vector<TrunkModel> models;
};

Space trunk_space(const WorkloadGraph& graph) {
    Space s;
    s.ids = trunk_layers(graph);
    std::map<std::string, int> local;
    for (std::size_t i = 0; i < s.ids.size(); ++i) local[s.ids[i]] = static_cast<int>(i);
    for (const auto& st : graph.stages())
        if (st.stage_id == StageId::Trunks)
            for (const auto& m : st.model_instances) {
                TrunkModel tm;
                for (const auto& id : m.layer_ids) tm.layers.push_back(local.at(id));
                if (!tm.layers.empty()) s.models.push_back(std::move(tm));
            }
    return s;
}

std::uint64_t contiguous_count(const Space& sp, int region, int w) {
    // ways[m]: segmentations with m runs in total.
    std::vector<std::uint64_t> ways(static_cast<std::size_t>(region) + 1, 0);
    ways[0] = 1;
    for (const auto& m : sp.models) {
        const int n = static_cast<int>(m.layers.size());
        std::vector<std::uint64_t> next(ways.size(), 0);
        for (int have = 0; have <= region; ++have) {
            if (!ways[have]) continue;
            for (int segs = 1; segs <= n && have + segs <= region; ++segs)
                next[have + segs] = sat_add(next[have + segs], sat_mul(ways[have], choose(n - 1, segs - 1)));
        }
        ways = std::move(next);
    }
    std::uint64_t total = 0;
    for (int m = 0; m <= region; ++m) total = sat_add(total, sat_mul(ways[m], choose(m, w)));
    return total;
}

std::uint64_t exhaustive_count(const Space& sp, int region, int w) {
    std::uint64_t t = choose(region, w);
    for (std::size_t i = 0; i < sp.ids.size(); ++i) t = sat_mul(t, static_cast<std::uint64_t>(region));
    return t;
}

DseSpace resolve(DseSpace s, const Space& sp, int region, int w, std::uint64_t cap) {
    if (s != DseSpace::Auto) return s;
    return exhaustive_count(sp, region, w) <= cap ? DseSpace::Exhaustive : DseSpace::Contiguous;
}

// Visits (slot per layer, WS flag per slot); slots index the region vector.
template <typename F>
void generate(const Space& sp, const std::vector<Position>& region, int w, DseSpace space, F&& visit) {
    const int R = static_cast<int>(region.size());
    const int L = static_cast<int>(sp.ids.size());
    std::vector<int> slot(static_cast<std::size_t>(L), 0);
    std::vector<char> ws(static_cast<std::size_t>(R), 0);

    if (space == DseSpace::Exhaustive) {
        for_each_combination(R, w, [&](const std::vector<int>& c) {
            std::fill(ws.begin(), ws.end(), 0);
            for (int i : c) ws[i] = 1;
            std::fill(slot.begin(), slot.end(), 0);
            while (true) {
                visit(slot, ws);
                int i = L - 1;
                while (i >= 0 && slot[i] == R - 1) slot[i--] = 0;
                if (i < 0) break;
                ++slot[i];
            }
        });
        return;
    }

    const auto walk = serpentine(region);
    std::vector<int> walk_slot;
    for (const auto& p : walk) walk_slot.push_back(static_cast<int>(std::find(region.begin(), region.end(), p) - region.begin()));

    // Runs as (model, first, last) in model-order positions.
    std::vector<std::vector<int>> runs;
    auto leaf = [&]() {
        const int m = static_cast<int>(runs.size());
        for (std::size_t r = 0; r < runs.size(); ++r)
            for (int l : runs[r]) slot[l] = walk_slot[r];
        for_each_combination(m, w, [&](const std::vector<int>& c) {
            std::fill(ws.begin(), ws.end(), 0);
            for (int i : c) ws[walk_slot[i]] = 1;
            visit(slot, ws);
        });
    };
    std::function<void(std::size_t)> rec = [&](std::size_t mi) {
        if (mi == sp.models.size()) {
            leaf();
            return;
        }
        const auto& layers = sp.models[mi].layers;
        const int n = static_cast<int>(layers.size());
        const std::uint32_t masks = 1u << (n - 1);
        for (std::uint32_t mask = 0; mask < masks; ++mask) {
            const int segs = std::popcount(mask) + 1;
            if (static_cast<int>(runs.size()) + segs > R) continue;
            const auto base = runs.size();
            runs.emplace_back();
            for (int i = 0; i < n; ++i) {
                if (i > 0 && (mask >> (i - 1) & 1u)) runs.emplace_back();
                runs.back().push_back(layers[i]);
            }
            rec(mi + 1);
            runs.resize(base);
        }
    };
    rec(0);
}

class TrunkEval {
public:
    TrunkEval(const WorkloadGraph& g, const Space& sp, const std::vector<Position>& region, const McmSpec& mcm,
              const CostProfile& profile)
        : region_(region), mcm_(mcm) {
        const int L = static_cast<int>(sp.ids.size());
        std::map<std::string, int> local;
        for (int i = 0; i < L; ++i) local[sp.ids[i]] = i;
        cost_.resize(static_cast<std::size_t>(L));
        ref_.resize(static_cast<std::size_t>(L));
        in_.resize(static_cast<std::size_t>(L));
        for (int i = 0; i < L; ++i) {
            const auto gi = g.index_of(sp.ids[i]);
            for (std::size_t s = 0; s < region.size(); ++s) {
                const auto pe = mcm.at(region[s]).pe_count;
                for (int d = 0; d < 2; ++d) {
                    const auto df = static_cast<Dataflow>(d);
                    cost_[i].push_back(chiplet_cost(g, gi, ChipletSpec{pe, df}, profile));
                }
            }
            for (int d = 0; d < 2; ++d) ref_[i][d] = unit_cost(g, gi, static_cast<Dataflow>(d), profile).latency_ms;
        }
        for (const auto& e : g.edges()) {
            auto u = local.find(e.producer), v = local.find(e.consumer);
            if (u == local.end() || v == local.end()) continue;
            in_[v->second].push_back({u->second, static_cast<double>(e.shape.byte_size())});
        }
        for (const auto& p : region) capacity_ += static_cast<double>(mcm.at(p).pe_count);
        ref_pe_ = static_cast<double>(profile.reference_pe_count());
    }

    ScoredConfig run(const std::vector<int>& slot, const std::vector<char>& ws, double l_cstr) {
        const std::size_t R = region_.size();
        compute_.assign(R, 0.0);
        nop_.assign(R, 0.0);
        free_.assign(R, 0.0);
        finish_.assign(slot.size(), 0.0);
        double energy = 0.0, work = 0.0, e2e = 0.0;
        for (std::size_t l = 0; l < slot.size(); ++l) {
            const int s = slot[l];
            double ready = 0.0;
            for (const auto& [u, bytes] : in_[l]) {
                const int h = manhattan(region_[slot[u]], region_[s]);
                const double lat = (h * bytes / mcm_.nop_bandwidth + h * mcm_.hop_latency) * 1e3;
                energy += bytes * 8.0 * mcm_.energy_per_bit * h;
                nop_[s] += lat;
                ready = std::max(ready, finish_[u] + lat);
            }
            const auto& c = cost_[l][static_cast<std::size_t>(s) * 2 + (ws[s] ? 1 : 0)];
            compute_[s] += c.latency_ms;
            energy += c.energy_j;
            work += ref_[l][ws[s] ? 1 : 0] * ref_pe_;
            const double start = std::max(ready, free_[s]);
            free_[s] = finish_[l] = start + c.latency_ms;
            e2e = std::max(e2e, finish_[l]);
        }
        ScoredConfig out;
        double pipe = 0.0;
        for (std::size_t s = 0; s < R; ++s) {
            pipe = std::max(pipe, compute_[s] + nop_[s]);
            out.max_chiplet_ms = std::max(out.max_chiplet_ms, compute_[s]);
        }
        auto& m = out.metrics;
        m.pipe_latency_ms = pipe;
        m.e2e_latency_ms = std::max(e2e, pipe);
        m.energy_j = energy;
        m.edp = energy * pipe;
        m.utilization = pipe > 0 ? std::min(1.0, work / (capacity_ * pipe)) : 0.0;
        out.score = out.max_chiplet_ms > l_cstr ? -std::numeric_limits<double>::infinity()
                                                : -(m.energy_j * m.e2e_latency_ms);
        return out;
    }

private:
    std::vector<Position> region_;
    const McmSpec& mcm_;
    std::vector<std::vector<CostEntry>> cost_;  // [layer][slot * 2 + dataflow]
    std::vector<std::array<double, 2>> ref_;
    std::vector<std::vector<std::pair<int, double>>> in_;
    double capacity_ = 0.0, ref_pe_ = 256.0;
    std::vector<double> compute_, nop_, free_, finish_;
};

HetConfig to_config(const Space& sp, const std::vector<Position>& region, const std::vector<int>& slot,
                    const std::vector<char>& ws) {
    HetConfig c;
    for (std::size_t s = 0; s < region.size(); ++s)
        if (ws[s]) c.ws_positions.push_back(region[s]);
    std::sort(c.ws_positions.begin(), c.ws_positions.end());
    for (std::size_t l = 0; l < sp.ids.size(); ++l) c.layer_assignment[sp.ids[l]] = region[slot[l]];
    return c;
}

void check_region(const std::vector<Position>& region, int ws_count) {
    if (ws_count < 0 || ws_count > static_cast<int>(region.size()))
        throw DomainError("ws_count " + std::to_string(ws_count) + " does not fit a region of " +
                          std::to_string(region.size()) + " chiplets");
}

std::vector<Position> sorted(std::vector<Position> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

std::vector<std::vector<Position>> dataflow_placements(const std::vector<Position>& region_in, int ws_count) {
    check_region(region_in, ws_count);
    const auto region = sorted(region_in);
    std::vector<std::vector<Position>> out;
    for_each_combination(static_cast<int>(region.size()), ws_count, [&](const std::vector<int>& c) {
        std::vector<Position> p;
        for (int i : c) p.push_back(region[i]);
        out.push_back(std::move(p));
    });
    return out;
}

std::vector<Position> serpentine(const std::vector<Position>& region) {
    auto v = region;
    std::sort(v.begin(), v.end(), [](const Position& a, const Position& b) {
        if (a.y != b.y) return a.y < b.y;
        return (a.y % 2 == 0) ? a.x < b.x : a.x > b.x;
    });
    return v;
}

std::uint64_t count_configs(const std::vector<Position>& region, int ws_count, const WorkloadGraph& graph,
                            DseSpace space) {
    check_region(region, ws_count);
    const auto sp = trunk_space(graph);
    const int R = static_cast<int>(region.size());
    space = resolve(space, sp, R, ws_count, DseOptions{}.cap);
    return space == DseSpace::Exhaustive ? exhaustive_count(sp, R, ws_count) : contiguous_count(sp, R, ws_count);
}

void enumerate_configs(const std::vector<Position>& region_in, int ws_count, const WorkloadGraph& graph,
                       const std::function<void(const HetConfig&)>& visit, DseSpace space) {
    check_region(region_in, ws_count);
    const auto region = sorted(region_in);
    const auto sp = trunk_space(graph);
    space = resolve(space, sp, static_cast<int>(region.size()), ws_count, DseOptions{}.cap);
    generate(sp, region, ws_count, space,
             [&](const std::vector<int>& slot, const std::vector<char>& ws) { visit(to_config(sp, region, slot, ws)); });
}

ScoredConfig score(const HetConfig& config, double l_cstr, const WorkloadGraph& graph, const McmSpec& mcm,
                   const CostProfile& profile) {
    const auto sp = trunk_space(graph);
    std::vector<Position> region;
    for (const auto& [id, p] : config.layer_assignment) region.push_back(p);
    for (const auto& p : config.ws_positions) region.push_back(p);
    std::sort(region.begin(), region.end());
    region.erase(std::unique(region.begin(), region.end()), region.end());
    for (const auto& p : region)
        if (!mcm.contains(p)) throw DomainError("position " + to_string(p) + " is outside the grid");

    std::vector<int> slot;
    for (const auto& id : sp.ids) {
        auto it = config.layer_assignment.find(id);
        if (it == config.layer_assignment.end()) throw EvaluationError("trunk layer " + id + " is not assigned");
        slot.push_back(static_cast<int>(std::lower_bound(region.begin(), region.end(), it->second) - region.begin()));
    }
    std::vector<char> ws(region.size(), 0);
    for (const auto& p : config.ws_positions)
        ws[std::lower_bound(region.begin(), region.end(), p) - region.begin()] = 1;
    TrunkEval ev(graph, sp, region, mcm, profile);
    auto out = ev.run(slot, ws, l_cstr);
    out.config = config;
    return out;
}

namespace {

double pct(double v, double ref) { return ref != 0 ? (v - ref) / ref * 100.0 : 0.0; }

DseEntry search_one(const Space& sp, const std::vector<Position>& region, int w, double l_cstr, TrunkEval& ev,
                    const DseOptions& opt) {
    DseEntry e;
    e.ws_count = w;
    const int R = static_cast<int>(region.size());
    e.space = resolve(opt.space, sp, R, w, opt.cap);
    const auto n = e.space == DseSpace::Exhaustive ? exhaustive_count(sp, R, w) : contiguous_count(sp, R, w);
    if (n > opt.cap) throw CapExceededError(n, opt.cap);

    std::vector<int> best_slot;
    std::vector<char> best_ws;
    generate(sp, region, w, e.space, [&](const std::vector<int>& slot, const std::vector<char>& ws) {
        ++e.explored;
        auto s = ev.run(slot, ws, l_cstr);
        if (!s.feasible()) return;
        ++e.feasible;
        if (!e.best || s.score > e.best->score) {
            e.best = std::move(s);
            best_slot = slot;
            best_ws = ws;
        }
    });
    if (e.best) e.best->config = to_config(sp, region, best_slot, best_ws);
    return e;
}

}  // namespace

DseReport search(const std::vector<Position>& region_in, const std::vector<int>& ws_counts, double l_cstr,
                 const WorkloadGraph& graph, const McmSpec& mcm, const CostProfile& profile, const DseOptions& options) {
    if (!(l_cstr > 0)) throw ConfigError("l_cstr must be positive");
    for (int w : ws_counts) check_region(region_in, w);
    DseReport rep;
    rep.region = sorted(region_in);
    rep.l_cstr_ms = l_cstr;
    const auto sp = trunk_space(graph);
    if (sp.ids.empty()) throw ConfigError("workload has no trunk layers to explore");
    TrunkEval ev(graph, sp, rep.region, mcm, profile);

    std::map<int, DseEntry> done;
    auto run = [&](int w) -> const DseEntry& {
        auto it = done.find(w);
        if (it == done.end()) it = done.emplace(w, search_one(sp, rep.region, w, l_cstr, ev, options)).first;
        return it->second;
    };
    rep.os_only = run(0).best;
    for (int w : ws_counts) {
        DseEntry e = run(w);
        if (e.best && rep.os_only) {
            const auto& a = e.best->metrics;
            const auto& b = rep.os_only->metrics;
            e.delta = DseDelta{pct(a.e2e_latency_ms, b.e2e_latency_ms), pct(a.pipe_latency_ms, b.pipe_latency_ms),
                               pct(a.energy_j, b.energy_j), pct(e.best->edp(), rep.os_only->edp())};
        }
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

}  // namespace mcm
