#include <doctest.h>

#include "mcm/ablation.hpp"
#include "mcm/autopilot.hpp"
#include "mcm/errors.hpp"
#include "mcm/presets.hpp"

using namespace mcm;

namespace {

// MACs recomputed from the raw descriptor fields.
double macs_from_fields(const LayerDescriptor& l) {
    if (!l.kernel) return 0;
    const auto& k = *l.kernel;
    const auto& o = l.output_shape;
    return static_cast<double>(k.r * k.s) * k.in_channels * k.out_channels * o.height * o.width * o.batch;
}

}  // namespace

TEST_CASE("occupancy final-layer share matches a MAC oracle") {
    const auto pts = occupancy_study({2, 4, 8, 16}, CostProfile::analytical());
    REQUIRE(pts.size() == 4);
    for (const auto& pt : pts) {
        const auto g = build_occupancy_trunk(pt.upscale);
        double total = 0, last = 0;
        for (const auto i : g.topological_order()) {
            const double m = macs_from_fields(g.layer(i));
            total += m;
            if (m > 0) last = m;
        }
        CHECK(pt.final_layer_share == doctest::Approx(last / total));
        CHECK(static_cast<double>(pt.total_macs) == total);
    }
    CHECK(pts.back().final_layer_share >= 0.70);
    CHECK(pts[1].latency_ms / pts[0].latency_ms >= 3.0);
}

TEST_CASE("lane fraction sweep") {
    const auto g = build_autopilot_pipeline();
    const auto p = resolve_profile("autopilot-paper");
    const auto s = lane_fraction_study(g, p, {0.6, 1.0});
    CHECK(s.serial_ms == doctest::Approx(82.45));
    CHECK_FALSE(s.points[0].exceeds);
    CHECK(s.points[1].exceeds);
    REQUIRE(s.crossing);
    CHECK(*s.crossing == doctest::Approx(82.0 / 82.45));
    CHECK_THROWS_AS(lane_fraction_study(g, p, {-0.1}), DomainError);

    AutopilotParams ap;
    ap.trunk_set = {"detection"};
    CHECK_THROWS_AS(lane_fraction_study(build_autopilot_pipeline(ap), p, {1.0}), ConfigError);
}
