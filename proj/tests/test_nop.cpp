#include <doctest.h>

#include <random>

#include "mcm/errors.hpp"
#include "mcm/nop.hpp"
#include "mcm/presets.hpp"

using namespace mcm;

TEST_CASE("reference transfer: 409,600 bytes over one hop") {
    const auto m = McmSpec::uniform(6, 6);
    const auto t = transfer_cost(409600, {0, 0}, {1, 0}, m);
    // 409600 B / 100 GB/s + 35 ns; 409600 * 8 bit * 2.04 pJ.
    CHECK(t.latency_s * 1e6 == doctest::Approx(4.131).epsilon(1e-9));
    CHECK(t.energy_j * 1e6 == doctest::Approx(6.684672).epsilon(1e-9));
    CHECK(t.hops == 1);
}

TEST_CASE("zero-hop transfers are free") {
    const auto m = McmSpec::uniform(2, 2);
    const auto t = transfer_cost(1 << 20, {1, 1}, {1, 1}, m);
    CHECK(t.latency_s == 0.0);
    CHECK(t.energy_j == 0.0);
}

TEST_CASE("hop counts and grid bounds") {
    const auto m = McmSpec::uniform(6, 6);
    CHECK(hops({0, 0}, {5, 5}, m) == 10);
    CHECK(hops({2, 3}, {2, 3}, m) == 0);
    CHECK_THROWS_AS(hops({0, 0}, {6, 0}, m), DomainError);
    CHECK_THROWS_AS(transfer_cost(1, {-1, 0}, {0, 0}, m), DomainError);
}

TEST_CASE("linearity in bytes and hops") {
    const auto m = McmSpec::uniform(8, 8);
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> bytes(1, 1 << 22);
    std::uniform_int_distribution<int> h(0, 14);
    for (int i = 0; i < 500; ++i) {
        const auto a = bytes(rng), b = bytes(rng);
        const int k = h(rng);
        const auto ta = transfer_cost_hops(a, k, m), tb = transfer_cost_hops(b, k, m), tab = transfer_cost_hops(a + b, k, m);
        CHECK(tab.energy_j == doctest::Approx(ta.energy_j + tb.energy_j).epsilon(1e-12));
        // Latency is affine in bytes: the per-hop router delay is paid once.
        CHECK(tab.latency_s == doctest::Approx(ta.latency_s + tb.latency_s - k * m.hop_latency).epsilon(1e-12));
        const auto t1 = transfer_cost_hops(a, 1, m);
        CHECK(ta.energy_j == doctest::Approx(k * t1.energy_j).epsilon(1e-12));
        CHECK(ta.latency_s == doctest::Approx(k * t1.latency_s).epsilon(1e-12));
    }
}

TEST_CASE("triangle inequality") {
    const auto m = McmSpec::uniform(12, 6);
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> x(0, 11), y(0, 5);
    for (int i = 0; i < 1000; ++i) {
        const Position a{x(rng), y(rng)}, b{x(rng), y(rng)}, c{x(rng), y(rng)};
        CHECK(hops(a, c, m) <= hops(a, b, m) + hops(b, c, m));
        const auto direct = transfer_cost(4096, a, c, m);
        const auto via = transfer_cost(4096, a, b, m).energy_j + transfer_cost(4096, b, c, m).energy_j;
        CHECK(direct.energy_j <= via * (1 + 1e-12));
    }
}

TEST_CASE("gather uses parallel links") {
    const auto m = McmSpec::uniform(4, 4);
    const std::vector<GatherSource> src = {{{0, 0}, 1000}, {{3, 3}, 500}, {{1, 1}, 2000}};
    const auto g = gather_cost(src, {1, 1}, m);
    double energy = 0, latency = 0;
    for (const auto& s : src) {
        const auto t = transfer_cost(s.bytes, s.position, {1, 1}, m);
        energy += t.energy_j;
        latency = std::max(latency, t.latency_s);
    }
    CHECK(g.energy_j == doctest::Approx(energy));
    CHECK(g.latency_s == doctest::Approx(latency));
    CHECK(g.hops == 4);
}

TEST_CASE("MCM JSON round trip and strictness") {
    auto m = McmSpec::uniform(4, 2, 512);
    m.name = "het";
    m.at({1, 1}).dataflow = Dataflow::WeightStationary;
    m.at({3, 0}).pe_count = 1024;
    CHECK(mcm_from_json(mcm_to_json(m)) == m);

    auto text = mcm_to_json(m);
    text.insert(text.find('{') + 1, "\"colour\": \"red\",");
    CHECK_THROWS_AS(mcm_from_json(text), ConfigError);
    CHECK_THROWS_AS(mcm_from_json("[]"), ConfigError);
}

TEST_CASE("bundled MCM presets") {
    const auto a = resolve_mcm("simba-6x6");
    CHECK(a.count() == 36);
    CHECK(a.check().empty());
    CHECK(a.energy_per_bit == 2.04e-12);
    const auto b = resolve_mcm("simba-2x6x6");
    CHECK(b.count() == 72);
    CHECK_THROWS_AS(resolve_mcm("no-such-package"), ConfigError);
}

TEST_CASE("MCM invariants") {
    McmSpec m = McmSpec::uniform(2, 2);
    m.chiplets.pop_back();
    CHECK_FALSE(m.check().empty());
    McmSpec n = McmSpec::uniform(2, 2);
    n.nop_bandwidth = 0;
    CHECK_FALSE(n.check().empty());
}
