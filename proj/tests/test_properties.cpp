#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "mcm/errors.hpp"
#include "mcm/scheduler.hpp"
#include "support/random_graph.hpp"

using namespace mcm;
using mcm::testing::random_pipeline;

namespace {

constexpr int kGraphs = 200;

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double median_random_nop(const Schedule& s, const WorkloadGraph& g, const McmSpec& m, std::mt19937_64& rng) {
    std::vector<double> e;
    for (int i = 0; i < 100; ++i) e.push_back(placement_nop_energy(random_placement(s, rng), g, m));
    return median(e);
}

}  // namespace

TEST_CASE("matching terminates within the chiplet budget") {
    const auto m = McmSpec::uniform(4, 4);
    const auto p = CostProfile::analytical();
    std::mt19937_64 rng(1);
    for (int i = 0; i < kGraphs; ++i) {
        const auto g = random_pipeline(rng);
        REQUIRE(validate(g).empty());
        const auto r = throughput_match(g, m, p);
        CHECK(r.iterations <= m.count());
    }
}

TEST_CASE("every move lowers its stage and never raises the pipe") {
    const auto m = McmSpec::uniform(4, 4);
    const auto p = CostProfile::analytical();
    std::mt19937_64 rng(2);
    for (int i = 0; i < kGraphs; ++i) {
        const auto g = random_pipeline(rng);
        const auto r = throughput_match(g, m, p);
        double pipe = std::numeric_limits<double>::infinity();
        for (const auto& d : r.log) {
            if (d.action != "donate") CHECK(d.stage_after_ms < d.stage_before_ms);
            CHECK(d.pipe_latency_ms <= pipe * (1 + 1e-12));
            pipe = d.pipe_latency_ms;
        }
    }
}

TEST_CASE("sharding conserves compute energy") {
    const auto m = McmSpec::uniform(4, 4);
    const auto p = CostProfile::analytical();
    EvaluateOptions compute_only;
    compute_only.include_nop = false;
    std::mt19937_64 rng(3);
    int sharded = 0;
    for (int i = 0; i < kGraphs; ++i) {
        const auto g = random_pipeline(rng);
        const auto base = initial_allocation(g, m);
        // Independent total: every compute layer once, at its unit cost.
        double oracle = 0;
        for (std::size_t li = 0; li < g.size(); ++li)
            if (is_compute(g.layer(li).kind)) oracle += unit_cost(g, li, Dataflow::OutputStationary, p).energy_j;
        const auto e0 = evaluate_detailed(base, g, m, p, compute_only);
        CHECK(e0.compute_energy_j == doctest::Approx(oracle).epsilon(1e-9));

        auto s = base;
        std::set<Position> used;
        for (const auto& [id, pl] : s.assignment) used.insert(pl.chiplets.begin(), pl.chiplets.end());
        for (int st = 0; st < kStageCount; ++st) {
            const auto* spec = g.stage(static_cast<StageId>(st));
            if (!spec) continue;
            std::vector<Position> free;
            for (const auto& q : s.stage_regions[st])
                if (!used.count(q)) free.push_back(q);
            for (const auto& grp : spec->concurrency_groups) {
                const auto& id = grp.member_layer_ids.front();
                std::vector<std::int64_t> ks;
                for (std::int64_t k = 2; k <= grp.replication; ++k)
                    if (grp.replication % k == 0 && static_cast<std::size_t>(k - 1) <= free.size()) ks.push_back(k);
                if (ks.empty()) continue;
                const auto k = ks[std::uniform_int_distribution<std::size_t>(0, ks.size() - 1)(rng)];
                auto chips = s.assignment.at(id).chiplets;
                for (std::int64_t j = 1; j < k; ++j) {
                    chips.push_back(free.back());
                    free.pop_back();
                }
                s.assign(id, chips);
                ++sharded;
            }
        }
        const auto e1 = evaluate_detailed(s, g, m, p, compute_only);
        CHECK(e1.compute_energy_j == doctest::Approx(oracle).epsilon(1e-9));
    }
    CHECK(sharded > 0);
}

TEST_CASE("matching is deterministic") {
    const auto m = McmSpec::uniform(4, 4);
    const auto p = CostProfile::analytical();
    std::mt19937_64 rng(4);
    for (int i = 0; i < kGraphs; ++i) {
        const auto g = random_pipeline(rng);
        const auto first = throughput_match(g, m, p);
        const auto first_eval = evaluate(first.schedule, g, m, p);
        for (int run = 0; run < 4; ++run) {
            const auto again = throughput_match(g, m, p);
            CHECK(again.schedule == first.schedule);
            CHECK(again.log.size() == first.log.size());
            CHECK(evaluate(again.schedule, g, m, p).energy_j == first_eval.energy_j);
        }
    }
}

TEST_CASE("greedy placement beats the median random placement") {
    const auto m = McmSpec::uniform(4, 4);
    const auto p = CostProfile::analytical();
    std::mt19937_64 rng(5), shuffle(55);
    for (int i = 0; i < kGraphs; ++i) {
        const auto g = random_pipeline(rng);
        const auto r = throughput_match(g, m, p);
        const double greedy = placement_nop_energy(r.schedule, g, m);
        CHECK(greedy <= median_random_nop(r.schedule, g, m, shuffle) * (1 + 1e-12));
    }
}

TEST_CASE("greedy placement of a five-layer DAG in a 3x3 region") {
    WorkloadGraph g;
    std::mt19937_64 rng(6);
    auto& st = g.add_stage(StageId::FeBfpn);
    for (int i = 0; i < 5; ++i) {
        const std::string id = "d" + std::to_string(i);
        g.add_layer(mcm::testing::random_conv(id, rng));
        st.model_instances.push_back({"m" + std::to_string(i), {id}});
    }
    for (auto [a, b] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 3}, {2, 3}, {3, 4}, {0, 4}})
        g.add_edge("d" + std::to_string(a), "d" + std::to_string(b), TensorShape{1, 64 * (a + 1), 8, 8});
    const auto m = McmSpec::uniform(6, 6);
    const auto s = place(initial_allocation(g, m), g, m);
    std::set<Position> distinct;
    for (const auto& [id, pl] : s.assignment) distinct.insert(pl.chiplets.front());
    CHECK(distinct.size() == 5);
    std::mt19937_64 shuffle(66);
    CHECK(placement_nop_energy(s, g, m) <= median_random_nop(s, g, m, shuffle));
}
