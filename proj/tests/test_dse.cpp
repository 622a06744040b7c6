#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "mcm/autopilot.hpp"
#include "mcm/dse.hpp"
#include "mcm/errors.hpp"
#include "mcm/presets.hpp"
#include "mcm/scheduler.hpp"
#include "support/two_layer_oracle.hpp"

using namespace mcm;
using namespace mcm::testing;

namespace {

McmSpec two_chiplets() { return McmSpec::uniform(2, 1); }

std::vector<Position> trunk_region(const McmSpec& m) { return stage_regions(m)[static_cast<int>(StageId::Trunks)]; }

}  // namespace

TEST_CASE("dataflow placement enumeration") {
    const auto region = trunk_region(McmSpec::uniform(6, 6));
    CHECK(dataflow_placements(region, 0).size() == 1);
    CHECK(dataflow_placements(region, 2).size() == 36);
    CHECK(dataflow_placements(region, 9).size() == 1);
    const auto two = dataflow_placements(region, 2);
    CHECK(std::is_sorted(two.begin(), two.end()));
    CHECK_THROWS_AS(dataflow_placements(region, 10), DomainError);
    CHECK_THROWS_AS(dataflow_placements(region, -1), DomainError);
}

TEST_CASE("two layers on two chiplets: all 16 configurations") {
    const auto g = two_layer_trunk();
    const auto p = two_layer_profile();
    const auto m = two_chiplets();
    const std::vector<Position> region = {{0, 0}, {1, 0}};

    for (double l_cstr : {100.0, 25.0}) {
        std::map<int, double> best_oracle;
        int total = 0;
        for (int w = 0; w <= 2; ++w) {
            CHECK(count_configs(region, w, g, DseSpace::Exhaustive) == (w == 1 ? 8u : 4u));
            best_oracle[w] = -kInf;
            enumerate_configs(
                region, w, g,
                [&](const HetConfig& c) {
                    ++total;
                    const bool a1 = c.layer_assignment.at("a") == Position{1, 0};
                    const bool b1 = c.layer_assignment.at("b") == Position{1, 0};
                    const bool ws0 = std::count(c.ws_positions.begin(), c.ws_positions.end(), Position{0, 0}) > 0;
                    const bool ws1 = std::count(c.ws_positions.begin(), c.ws_positions.end(), Position{1, 0}) > 0;
                    const double want = oracle_score(a1, b1, ws0, ws1, l_cstr);
                    const double got = score(c, l_cstr, g, m, p).score;
                    if (std::isinf(want))
                        CHECK(std::isinf(got));
                    else
                        CHECK(got == doctest::Approx(want).epsilon(1e-12));
                    best_oracle[w] = std::max(best_oracle[w], want);
                },
                DseSpace::Exhaustive);
        }
        CHECK(total == 16);

        DseOptions opt;
        opt.space = DseSpace::Exhaustive;
        const auto rep = search(region, {0, 1, 2}, l_cstr, g, m, p, opt);
        REQUIRE(rep.entries.size() == 3);
        for (const auto& e : rep.entries) {
            if (std::isinf(best_oracle[e.ws_count])) {
                CHECK_FALSE(e.best);
                continue;
            }
            REQUIRE(e.best);
            CHECK(e.best->score == doctest::Approx(best_oracle[e.ws_count]).epsilon(1e-12));
        }
    }
}

TEST_CASE("tighter constraints never improve the optimum") {
    const auto g = build_autopilot_pipeline();
    const auto m = resolve_mcm("simba-6x6");
    const auto p = resolve_profile("autopilot-paper");
    const auto region = trunk_region(m);
    double prev_score = -kInf;
    std::uint64_t prev_feasible = 0;
    for (double l : {42.0, 45.0, 60.0, 85.0, 200.0}) {
        const auto rep = search(region, {0}, l, g, m, p);
        const auto& e = rep.entries[0];
        CHECK(e.feasible >= prev_feasible);
        prev_feasible = e.feasible;
        if (e.best) {
            CHECK(e.best->score >= prev_score);
            CHECK(e.best->max_chiplet_ms <= l);
            prev_score = e.best->score;
        }
    }
    CHECK_THROWS_AS(search(region, {0}, 0.0, g, m, p), ConfigError);
}

TEST_CASE("optimised trunk mapping on 36 chiplets") {
    const auto g = build_autopilot_pipeline();
    const auto m = resolve_mcm("simba-6x6");
    const auto p = resolve_profile("autopilot-paper");
    const auto region = trunk_region(m);
    const auto rep = search(region, {0, 2, 4}, 85.0, g, m, p);
    REQUIRE(rep.os_only);
    REQUIRE(rep.entries.size() == 3);
    const auto& os = rep.entries[0];
    const auto& het2 = rep.entries[1];
    const auto& het4 = rep.entries[2];
    REQUIRE(het2.best);
    REQUIRE(het4.best);

    CHECK(os.delta->edp_pct == 0.0);
    CHECK(os.delta->energy_pct == 0.0);
    CHECK(het2.best->edp() < het4.best->edp());
    CHECK(het4.best->edp() < rep.os_only->edp());
    CHECK(std::abs(-het2.delta->energy_pct - 1.1) <= 2.0);
    CHECK(std::abs(-het4.delta->energy_pct - 6.2) <= 2.0);

    // Every WS chiplet of the best two-WS mapping hosts detection layers only.
    for (const auto& ws : het2.best->config.ws_positions) {
        int hosted = 0;
        for (const auto& [id, pos] : het2.best->config.layer_assignment)
            if (pos == ws) {
                ++hosted;
                CHECK(id.rfind("DET_", 0) == 0);
            }
        CHECK(hosted > 0);
    }

    // Scoring the reported configuration again gives the same numbers.
    const auto again = score(het4.best->config, 85.0, g, m, p);
    CHECK(again.score == doctest::Approx(het4.best->score).epsilon(1e-12));
}

TEST_CASE("random contiguous mappings do not beat the search") {
    const auto g = build_autopilot_pipeline();
    const auto m = resolve_mcm("simba-6x6");
    const auto p = resolve_profile("autopilot-paper");
    const auto region = trunk_region(m);
    const auto walk = serpentine(region);
    const auto rep = search(region, {0, 2, 4}, 85.0, g, m, p);

    std::vector<std::vector<std::string>> models;
    for (const auto& mi : g.stage(StageId::Trunks)->model_instances) models.push_back(mi.layer_ids);

    std::mt19937_64 rng(2024);
    for (const auto& e : rep.entries) {
        REQUIRE(e.best);
        int checked = 0;
        while (checked < 1000) {
            // Run index per layer: each model starts a new run, cuts add more.
            std::vector<std::vector<std::size_t>> runs_of;
            std::size_t run = 0;
            for (const auto& ids : models) {
                auto& r = runs_of.emplace_back();
                for (std::size_t i = 0; i < ids.size(); ++i) {
                    if (i > 0 && std::bernoulli_distribution(0.3)(rng)) ++run;
                    r.push_back(run);
                }
                ++run;
            }
            if (run > walk.size()) continue;
            HetConfig c;
            for (std::size_t mi = 0; mi < models.size(); ++mi)
                for (std::size_t i = 0; i < models[mi].size(); ++i) c.layer_assignment[models[mi][i]] = walk[runs_of[mi][i]];
            std::vector<Position> used(walk.begin(), walk.begin() + static_cast<std::ptrdiff_t>(run));
            if (static_cast<int>(used.size()) < e.ws_count) continue;
            std::shuffle(used.begin(), used.end(), rng);
            c.ws_positions.assign(used.begin(), used.begin() + e.ws_count);
            std::sort(c.ws_positions.begin(), c.ws_positions.end());
            const auto s = score(c, 85.0, g, m, p);
            CHECK(s.score <= e.best->score);
            ++checked;
        }
    }
}

TEST_CASE("a chiplet over the latency constraint is infeasible") {
    const auto g = build_autopilot_pipeline();
    const auto m = resolve_mcm("simba-6x6");
    const auto p = resolve_profile("autopilot-paper");
    const auto walk = serpentine(trunk_region(m));
    HetConfig c;
    std::size_t next = 0;
    for (const auto& mi : g.stage(StageId::Trunks)->model_instances) {
        const bool detection = mi.layer_ids.front().rfind("DET_", 0) == 0;
        // Both detection heads share walk[0]: 2 x (3 x 5 + 30) = 90 ms.
        const Position at = detection ? walk[0] : walk[++next];
        for (const auto& id : mi.layer_ids) c.layer_assignment[id] = at;
    }
    const auto s = score(c, 85.0, g, m, p);
    CHECK(s.max_chiplet_ms == doctest::Approx(90.0));
    CHECK_FALSE(s.feasible());
    CHECK(s.score == -kInf);
    CHECK(score(c, 95.0, g, m, p).feasible());
}

TEST_CASE("search guards and determinism") {
    const auto g = build_autopilot_pipeline();
    const auto m = resolve_mcm("simba-6x6");
    const auto p = resolve_profile("autopilot-paper");
    const auto region = trunk_region(m);

    DseOptions small;
    small.cap = 100;
    CHECK_THROWS_AS(search(region, {2}, 85.0, g, m, p, small), CapExceededError);
    DseOptions full;
    full.space = DseSpace::Exhaustive;
    CHECK_THROWS_AS(search(region, {0}, 85.0, g, m, p, full), CapExceededError);
    CHECK(count_configs(region, 0, g, DseSpace::Auto) == 31180u);

    AutopilotParams ap;
    ap.trunk_set.clear();
    CHECK_THROWS_AS(search(region, {0}, 85.0, build_autopilot_pipeline(ap), m, p), ConfigError);

    const auto a = search(region, {2}, 85.0, g, m, p);
    const auto b = search(region, {2}, 85.0, g, m, p);
    CHECK(a.entries[0].best->config == b.entries[0].best->config);
    CHECK(a.entries[0].best->score == b.entries[0].best->score);
}
