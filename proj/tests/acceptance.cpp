// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "mcm/ablation.hpp"
#include "mcm/autopilot.hpp"
#include "mcm/baseline.hpp"
#include "mcm/dse.hpp"
#include "mcm/presets.hpp"
#include "mcm/scheduler.hpp"
#include "support/random_graph.hpp"
#include "support/two_layer_oracle.hpp"

using namespace mcm;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

const DecisionRecord* find(const std::vector<DecisionRecord>& log, const std::string& action, const std::string& layer,
                           std::int64_t k_after = -1) {
    for (const auto& d : log)
        if (d.action == action && d.layer == layer && (k_after < 0 || d.k_after == k_after)) return &d;
    return nullptr;
}

std::vector<Position> trunk_region(const McmSpec& m) { return stage_regions(m)[static_cast<int>(StageId::Trunks)]; }

void nop_cost(Outcome& o) {
    const auto m = McmSpec::uniform(6, 6);
    const auto t = transfer_cost(409600, {0, 0}, {1, 0}, m);
    const double us = t.latency_s * 1e6, uj = t.energy_j * 1e6;
    o.detail << "409600 B x 1 hop: " << us << " us, " << uj << " uJ";
    o.require(near(us, 4.131, 5e-4), "latency 4.131 us");
    o.require(near(uj, 6.685, 5e-4), "energy 6.685 uJ");

    std::mt19937_64 rng(1);
    std::uniform_int_distribution<std::int64_t> bytes(1, 1 << 22);
    std::uniform_int_distribution<int> x(0, 5), hop(0, 10);
    bool linear = true, triangle = true;
    for (int i = 0; i < 1000; ++i) {
        const auto a = bytes(rng), b = bytes(rng);
        const int k = hop(rng);
        const auto ta = transfer_cost_hops(a, k, m), tb = transfer_cost_hops(b, k, m);
        const auto tab = transfer_cost_hops(a + b, k, m), t1 = transfer_cost_hops(a, 1, m);
        linear = linear && near(tab.energy_j, ta.energy_j + tb.energy_j, 1e-9 * tab.energy_j + 1e-30) &&
                 near(ta.energy_j, k * t1.energy_j, 1e-9 * ta.energy_j + 1e-30) &&
                 near(tab.latency_s, ta.latency_s + tb.latency_s - k * m.hop_latency, 1e-9 * tab.latency_s + 1e-30);
        const Position p{x(rng), x(rng)}, q{x(rng), x(rng)}, r{x(rng), x(rng)};
        triangle = triangle && transfer_cost(a, p, r, m).energy_j <=
                                   (transfer_cost(a, p, q, m).energy_j + transfer_cost(a, q, r, m).energy_j) * (1 + 1e-12);
    }
    o.require(linear, "linearity");
    o.require(triangle, "triangle inequality");
}

void match_36(Outcome& o) {
    const auto g = build_autopilot_pipeline();
    const auto m = resolve_mcm("simba-6x6");
    const auto p = resolve_profile("autopilot-paper");
    const auto r = throughput_match(g, m, p);
    const auto* t_ffn = find(r.log, "shard", "T_FFN", 6);
    const auto* t_qkv = find(r.log, "shard", "T_QKV", 2);
    std::int64_t s_ffn = 1;
    for (const auto& d : r.log)
        if (d.layer == "S_FFN") s_ffn = std::max(s_ffn, d.k_after);
    const double pipe = evaluate(r.schedule, g, m, p).pipe_latency_ms;
    o.detail << "T_FFN k=6 at " << (t_ffn ? t_ffn->unit_latency_ms : 0) << " ms, S_FFN k=" << s_ffn
             << ", pipe " << pipe << " ms";
    o.require(t_ffn && near(t_ffn->unit_latency_ms, 81.7, 1e-6), "T_FFN -> 6 at 81.7 ms");
    o.require(t_qkv != nullptr, "T_QKV -> 2");
    o.require(s_ffn >= 4, "S_FFN >= 4");
    o.require(pipe >= 78 && pipe <= 88, "pipe in [78, 88]");
}

void match_72(Outcome& o) {
    const auto g = build_autopilot_pipeline();
    const auto m = resolve_mcm("simba-2x6x6");
    const auto p = resolve_profile("autopilot-paper");
    const auto r = throughput_match(g, m, p);
    auto at = [&](const DecisionRecord* d) { return d ? static_cast<long>(d - r.log.data()) : -1L; };
    const auto qkv4 = at(find(r.log, "shard", "T_QKV", 4));
    const auto* ffn = find(r.log, "shard", "T_FFN", 12);
    const auto fe = at(find(r.log, "split", "FE_BFPN_0"));
    const auto s_qkv = at(find(r.log, "shard", "S_QKV", 2));
    const double pipe = evaluate(r.schedule, g, m, p).pipe_latency_ms;
    o.detail << "log order T_QKV4@" << qkv4 << " T_FFN12@" << at(ffn) << " FEsplit@" << fe << " S_QKV2@" << s_qkv
             << ", pipe " << pipe << " ms";
    o.require(qkv4 >= 0 && ffn && fe >= 0 && s_qkv >= 0, "all four moves present");
    o.require(ffn && ffn->k_after - ffn->k_before == 6, "T_FFN gains 6");
    o.require(qkv4 < at(ffn) && at(ffn) < fe && fe < s_qkv, "move order");
    o.require(std::abs(pipe - 41.1) <= 0.05 * 41.1, "pipe within 5% of 41.1");
}

void monolithic(Outcome& o) {
    const auto g = resolve_workload("autopilot-fusion");
    const auto p = resolve_profile("autopilot-paper");
    std::vector<Arrangement> list;
    for (const char* a : {"36x256", "1x9216", "2x4608", "4x2304"}) list.push_back(parse_arrangement(a));
    const auto rows = compare_arrangements(g, list, p, PipelineMode::Layerwise);
    const auto& mcm = rows[0].metrics;
    const auto& mono = rows[1].metrics;
    const double ratio = mcm.utilization / mono.utilization;
    // Extra energy the chiplet package spends over the monolithic die.
    const double excess = (mcm.energy_j / mono.energy_j - 1.0) * 100.0;
    bool min_edp = true;
    for (std::size_t i = 1; i < rows.size(); ++i) min_edp = min_edp && mcm.edp < rows[i].metrics.edp;
    o.detail << "utilization ratio " << ratio << ", energy excess " << excess << "%, 36x256 EDP " << mcm.edp;
    o.require(ratio >= 2.4 && ratio <= 3.2, "utilization ratio in [2.4, 3.2]");
    o.require(near(excess, 10.9, 2.0), "energy excess 10.9 +- 2");
    o.require(min_edp, "36x256 has the lowest EDP");
}

void dse(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();

    // Exhaustive two-layer case checked against the hand oracle.
    int matched = 0, total = 0;
    {
        const auto g = testing::two_layer_trunk();
        const auto p = testing::two_layer_profile();
        const auto m = McmSpec::uniform(2, 1);
        const std::vector<Position> region = {{0, 0}, {1, 0}};
        for (int w = 0; w <= 2; ++w)
            enumerate_configs(
                region, w, g,
                [&](const HetConfig& c) {
                    ++total;
                    auto on = [&](const Position& q) {
                        return std::find(c.ws_positions.begin(), c.ws_positions.end(), q) != c.ws_positions.end();
                    };
                    const double want = testing::oracle_score(c.layer_assignment.at("a") == Position{1, 0},
                                                              c.layer_assignment.at("b") == Position{1, 0},
                                                              on({0, 0}), on({1, 0}), 100.0);
                    const double got = score(c, 100.0, g, m, p).score;
                    matched += near(got, want, 1e-12 * std::abs(want));
                },
                DseSpace::Exhaustive);
    }

    const auto g = build_autopilot_pipeline();
    const auto m = resolve_mcm("simba-6x6");
    const auto p = resolve_profile("autopilot-paper");
    const auto rep = search(trunk_region(m), {0, 2, 4}, 85.0, g, m, p);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto& os = rep.entries[0];
    const auto& h2 = rep.entries[1];
    const auto& h4 = rep.entries[2];
    if (!(os.best && h2.best && h4.best)) {
        o.require(false, "every configuration has a feasible optimum");
        return;
    }
    const double de2 = -h2.delta->energy_pct, de4 = -h4.delta->energy_pct;
    o.detail << "EDP OS " << os.best->edp() << " Het2 " << h2.best->edp() << " Het4 " << h4.best->edp()
             << ", energy saving " << de2 << "% / " << de4 << "%, oracle " << matched << "/" << total << ", " << secs
             << " s";
    o.require(h2.best->edp() < h4.best->edp() && h4.best->edp() < os.best->edp(), "EDP Het2 < Het4 < OS");
    o.require(near(de2, 1.1, 2.0), "Het2 energy saving 1.1 +- 2");
    o.require(near(de4, 6.2, 2.0), "Het4 energy saving 6.2 +- 2");
    o.require(total == 16 && matched == 16, "16-case oracle");
}

void profile_shares(Outcome& o) {
    const auto g = build_autopilot_pipeline();
    const auto p = resolve_profile("autopilot-paper");
    const double ratio = mean_ws_os_latency_ratio(g, p);
    const auto t = stage_totals(g, p, Dataflow::OutputStationary);
    const double s = t[static_cast<int>(StageId::SpatialFuse)].fraction_of_total * 100;
    const double tf = t[static_cast<int>(StageId::TemporalFuse)].fraction_of_total * 100;
    o.detail << "WS/OS ratio " << ratio << ", T share " << tf << "%, S share " << s << "%";
    o.require(std::abs(ratio - 6.85) <= 0.05 * 6.85, "ratio 6.85 +- 5%");
    o.require(tf >= 52 && tf <= 54, "T share in [52, 54]%");
    o.require(s >= 25 && s <= 28, "S share in [25, 28]%");
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void properties(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto m = McmSpec::uniform(4, 4);
    const auto p = CostProfile::analytical();
    EvaluateOptions compute_only;
    compute_only.include_nop = false;
    std::mt19937_64 rng(7), shuffle(77);
    int terminate = 0, monotone = 0, conserve = 0, deterministic = 0, greedy = 0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        const auto g = testing::random_pipeline(rng);
        const auto r = throughput_match(g, m, p);
        terminate += r.iterations <= m.count();

        bool mono = true;
        double pipe = std::numeric_limits<double>::infinity();
        for (const auto& d : r.log) {
            mono = mono && (d.action == "donate" || d.stage_after_ms < d.stage_before_ms) &&
                   d.pipe_latency_ms <= pipe * (1 + 1e-12);
            pipe = d.pipe_latency_ms;
        }
        monotone += mono;

        const double before = evaluate_detailed(initial_allocation(g, m), g, m, p, compute_only).compute_energy_j;
        const double after = evaluate_detailed(r.schedule, g, m, p, compute_only).compute_energy_j;
        conserve += near(before, after, 1e-9 * before);

        bool same = true;
        for (int run = 0; run < 4; ++run) same = same && throughput_match(g, m, p).schedule == r.schedule;
        deterministic += same;

        std::vector<double> rand;
        for (int k = 0; k < 100; ++k) rand.push_back(placement_nop_energy(random_placement(r.schedule, shuffle), g, m));
        greedy += placement_nop_energy(r.schedule, g, m) <= median(rand) * (1 + 1e-12);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.detail << n << " graphs: terminate " << terminate << ", monotone " << monotone << ", energy " << conserve
             << ", deterministic " << deterministic << ", greedy<=median " << greedy << ", " << secs << " s";
    o.require(terminate == n, "termination");
    o.require(monotone == n, "monotone decrease");
    o.require(conserve == n, "energy conservation");
    o.require(deterministic == n, "determinism");
    o.require(greedy == n, "greedy placement vs random median");
}

void ablations(Outcome& o) {
    const auto occ = occupancy_study({2, 4, 8, 16}, CostProfile::analytical());
    const double share = occ.back().final_layer_share * 100;
    const auto lane = lane_fraction_study(build_autopilot_pipeline(), resolve_profile("autopilot-paper"), {1.0});
    const double crossing = lane.crossing ? *lane.crossing * 100 : -1;
    o.detail << "16x final-layer share " << share << "%, lane crossing " << crossing << "%";
    o.require(share >= 70, "final share >= 70%");
    o.require(crossing >= 60 && crossing <= 100, "lane crossing in [60, 100]%");
}

}  // namespace

int main() {
    struct Criterion {
        std::string name;
        std::function<void(Outcome&)> run;
        double limit_s;
    };
    const std::vector<Criterion> criteria = {
        {"NoP transfer cost", nop_cost, 1},
        {"throughput matching, 36 chiplets", match_36, 5},
        {"throughput matching, 72 chiplets", match_72, 10},
        {"MCM vs monolithic", monolithic, 10},
        {"heterogeneous dataflow search", dse, 60},
        {"dataflow profile", profile_shares, 1},
        {"scheduler properties", properties, 120},
        {"trunk ablations", ablations, 10},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(secs < c.limit_s, "runtime limit");
        failed += !o.pass;
        std::printf("%s %zu %-34s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", i + 1, c.name.c_str(), secs,
                    o.detail.str().c_str());
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed ? 1 : 0;
}
