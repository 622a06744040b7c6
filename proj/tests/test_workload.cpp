#include <doctest.h>

#include <algorithm>
#include <set>

#include "mcm/autopilot.hpp"
#include "mcm/errors.hpp"
#include "mcm/graph_io.hpp"
#include "mcm/workload.hpp"

using namespace mcm;

namespace {

// Direct loop count of multiply-accumulates for a dense convolution.
std::int64_t conv_macs_by_loops(std::int64_t b, std::int64_t cin, std::int64_t cout, std::int64_t h, std::int64_t w,
                                std::int64_t r, std::int64_t s) {
    std::int64_t n = 0;
    for (std::int64_t i0 = 0; i0 < b; ++i0)
        for (std::int64_t co = 0; co < cout; ++co)
            for (std::int64_t y = 0; y < h; ++y)
                for (std::int64_t x = 0; x < w; ++x)
                    for (std::int64_t ci = 0; ci < cin; ++ci)
                        for (std::int64_t ky = 0; ky < r; ++ky)
                            for (std::int64_t kx = 0; kx < s; ++kx) ++n;
    return n;
}

LayerDescriptor conv(const std::string& id, std::int64_t c, std::int64_t h, std::int64_t w) {
    LayerDescriptor l;
    l.id = id;
    l.kind = LayerKind::Conv;
    l.input_shapes = {TensorShape{1, c, h, w}};
    l.output_shape = TensorShape{1, c, h, w};
    l.kernel = Kernel{3, 3, 1, c, c};
    return l;
}

WorkloadGraph chain3() {
    WorkloadGraph g;
    for (const char* id : {"a", "b", "c"}) g.add_layer(conv(id, 4, 5, 6));
    g.add_edge("a", "b");
    g.add_edge("b", "c");
    auto& st = g.add_stage(StageId::FeBfpn);
    st.model_instances.push_back({"m", {"a", "b", "c"}});
    return g;
}

bool has_rule(const std::vector<Violation>& v, const std::string& rule) {
    return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.rule == rule; });
}

}  // namespace

TEST_CASE("tensor shape sizes") {
    TensorShape t{2, 3, 4, 5, 2};
    CHECK(t.elements() == 120);
    CHECK(t.byte_size() == 240);
    CHECK(t.valid());
    CHECK_FALSE(TensorShape{1, 0, 1, 1}.valid());
}

TEST_CASE("MAC counts match loop oracles") {
    LayerDescriptor l;
    l.kind = LayerKind::Conv;
    l.output_shape = TensorShape{2, 5, 3, 4};
    l.kernel = Kernel{3, 2, 1, 6, 5};
    CHECK(mac_count(l) == conv_macs_by_loops(2, 6, 5, 3, 4, 3, 2));

    LayerDescriptor fc;
    fc.kind = LayerKind::FullyConnected;
    fc.output_shape = TensorShape{3, 7, 1, 1};
    fc.kernel = Kernel{1, 1, 1, 11, 7};
    CHECK(mac_count(fc) == 3 * 11 * 7);

    LayerDescriptor attn;
    attn.kind = LayerKind::AttentionScore;
    attn.seq_len = 10;
    attn.model_dim = 8;
    attn.output_shape = TensorShape{1, 8, 10, 1};
    // Q K^T then A V: two seq x kv x d products.
    CHECK(mac_count(attn) == 2 * 10 * 10 * 8);

    LayerDescriptor qkv;
    qkv.kind = LayerKind::QkvProjection;
    qkv.seq_len = 10;
    qkv.model_dim = 8;
    qkv.output_shape = TensorShape{1, 24, 10, 1};
    CHECK(mac_count(qkv) == 10 * 8 * 24);

    LayerDescriptor up;
    up.kind = LayerKind::Upsample;
    CHECK(mac_count(up) == 0);
    CHECK_FALSE(is_compute(LayerKind::Concat));
}

TEST_CASE("enum names round trip") {
    for (auto k : {LayerKind::Conv, LayerKind::Deconv, LayerKind::FullyConnected, LayerKind::MatMul,
                   LayerKind::QkvProjection, LayerKind::AttentionScore, LayerKind::Ffn, LayerKind::Concat,
                   LayerKind::Upsample})
        CHECK(parse_layer_kind(to_string(k)) == k);
    for (int s = 0; s < kStageCount; ++s) CHECK(parse_stage_id(to_string(static_cast<StageId>(s))) == static_cast<StageId>(s));
    CHECK_THROWS_AS(parse_layer_kind("Pool"), ConfigError);
}

TEST_CASE("topological order respects every edge") {
    const auto g = build_autopilot_pipeline();
    const auto order = g.topological_order();
    REQUIRE(order.size() == g.size());
    std::vector<std::size_t> rank(g.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
    for (const auto& e : g.edges()) CHECK(rank[g.index_of(e.producer)] < rank[g.index_of(e.consumer)]);
}

TEST_CASE("autopilot preset structure") {
    const auto g = build_autopilot_pipeline();
    CHECK(validate(g).empty());
    REQUIRE(g.stages().size() == 4);
    CHECK(g.stage(StageId::FeBfpn)->model_instances.size() == 8);
    CHECK(g.stage(StageId::Trunks)->model_instances.size() == 3);
    CHECK(g.layer("S_QKV").kind == LayerKind::QkvProjection);
    CHECK(g.group_of("S_FFN")->replication == 8);
    CHECK(g.group_of("T_FFN")->replication == 12);
    CHECK(g.stage_of("LANE_SA1") == StageId::Trunks);

    // Every FE camera feeds the spatial fusion stage.
    std::set<std::string> feeders;
    for (const auto& e : g.edges())
        if (e.consumer == "S_QKV") feeders.insert(e.producer);
    CHECK(feeders.size() == 8);
    CHECK(fe_multiscale_ids(0).size() == 4);

    AutopilotParams p;
    p.trunk_set.clear();
    const auto fusion = build_autopilot_pipeline(p);
    CHECK(fusion.stages().size() == 3);
    CHECK(validate(fusion).empty());
}

TEST_CASE("autopilot parameter errors") {
    AutopilotParams p;
    p.num_cameras = 0;
    CHECK_THROWS_AS(build_autopilot_pipeline(p), ConfigError);
    AutopilotParams q;
    q.trunk_set = {"parking"};
    CHECK_THROWS_AS(build_autopilot_pipeline(q), ConfigError);
    CHECK_THROWS_AS(build_occupancy_trunk(3), ConfigError);
}

TEST_CASE("occupancy trunk grows by powers of two") {
    for (std::int64_t u : {2, 4, 8, 16}) {
        const auto g = build_occupancy_trunk(u);
        std::size_t deconvs = 0;
        for (const auto& l : g.layers()) deconvs += l.kind == LayerKind::Deconv;
        std::size_t expected = 0;
        for (auto v = u; v > 1; v /= 2) ++expected;
        CHECK(deconvs == expected);
        CHECK(validate(g).empty());
    }
}

TEST_CASE("validation reports structural violations") {
    SUBCASE("cycle") {
        auto g = chain3();
        g.add_edge("c", "a");
        CHECK(has_rule(validate(g), "acyclic"));
        CHECK(g.topological_order().empty());
    }
    SUBCASE("unknown endpoint") {
        auto g = chain3();
        g.add_edge("c", "zz", TensorShape{});
        CHECK(has_rule(validate(g), "edge endpoint"));
    }
    SUBCASE("shape mismatch") {
        auto g = chain3();
        g.add_edge("a", "c", TensorShape{1, 1, 1, 1});
        CHECK(has_rule(validate(g), "shape mismatch"));
    }
    SUBCASE("orphan layer") {
        auto g = chain3();
        g.add_layer(conv("d", 2, 2, 2));
        CHECK(has_rule(validate(g), "stage partition"));
    }
    SUBCASE("missing kernel") {
        auto g = chain3();
        auto l = conv("k", 2, 2, 2);
        l.kernel.reset();
        g.add_layer(l);
        g.mutable_stages()[0].model_instances[0].layer_ids.push_back("k");
        CHECK(has_rule(validate(g), "kernel required"));
    }
    SUBCASE("stage order") {
        auto g = chain3();
        g.add_layer(conv("s", 4, 5, 6));
        g.add_stage(StageId::SpatialFuse).model_instances.push_back({"sm", {"s"}});
        g.add_edge("s", "a");
        CHECK(has_rule(validate(g), "stage order"));
    }
    CHECK(validate(chain3()).empty());
}

TEST_CASE("duplicate layer ids are rejected") {
    WorkloadGraph g;
    g.add_layer(conv("a", 1, 1, 1));
    CHECK_THROWS_AS(g.add_layer(conv("a", 1, 1, 1)), ConfigError);
    CHECK_THROWS_AS(g.index_of("missing"), ConfigError);
}

TEST_CASE("graph JSON round trip is lossless") {
    const auto g = build_autopilot_pipeline();
    const auto back = graph_from_json(graph_to_json(g));
    CHECK(back == g);
    CHECK(graph_to_json(back) == graph_to_json(g));
}

TEST_CASE("graph JSON parsing is strict") {
    auto text = graph_to_json(chain3());
    SUBCASE("unknown top-level field") {
        auto bad = text;
        bad.insert(bad.find('{') + 1, "\"extra\": 1,");
        CHECK_THROWS_AS(graph_from_json(bad), ConfigError);
    }
    SUBCASE("wrong schema version") {
        auto bad = text;
        const auto pos = bad.find("\"schema_version\": 1");
        REQUIRE(pos != std::string::npos);
        bad.replace(pos, 19, "\"schema_version\": 9");
        CHECK_THROWS_AS(graph_from_json(bad), ConfigError);
    }
    SUBCASE("not JSON") { CHECK_THROWS_AS(graph_from_json("{"), ConfigError); }
}
