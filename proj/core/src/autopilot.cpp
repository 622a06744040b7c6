#include "mcm/autopilot.hpp"

#include <utility>

#include "mcm/errors.hpp"

namespace mcm {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

TensorShape shape(std::int64_t b, std::int64_t c, std::int64_t h, std::int64_t w) {
    return TensorShape{b, c, h, w, 1};
}

// Appends layers to the graph and to the current model instance.
class ModelBuilder {
public:
    ModelBuilder(WorkloadGraph& g, StageId stage, std::string model) : g_(g), stage_(stage) {
        model_.name = std::move(model);
    }

    const std::string& add(LayerDescriptor l) {
        model_.layer_ids.push_back(l.id);
        g_.add_layer(std::move(l));
        return model_.layer_ids.back();
    }

    const std::string& conv(std::string id, const TensorShape& in, std::int64_t cout, std::int64_t k,
                            std::int64_t stride, std::int64_t oh, std::int64_t ow,
                            LayerKind kind = LayerKind::Conv) {
        LayerDescriptor l;
        l.id = std::move(id);
        l.kind = kind;
        l.input_shapes = {in};
        l.output_shape = shape(in.batch, cout, oh, ow);
        l.kernel = Kernel{k, k, stride, in.channels, cout};
        return add(std::move(l));
    }

    const std::string& resize(std::string id, const TensorShape& in, std::int64_t oh, std::int64_t ow) {
        LayerDescriptor l;
        l.id = std::move(id);
        l.kind = LayerKind::Upsample;
        l.input_shapes = {in};
        l.output_shape = shape(in.batch, in.channels, oh, ow);
        return add(std::move(l));
    }

    void finish() {
        for (auto& st : g_.mutable_stages())
            if (st.stage_id == stage_) {
                st.model_instances.push_back(std::move(model_));
                return;
            }
        g_.add_stage(stage_).model_instances.push_back(std::move(model_));
    }

private:
    WorkloadGraph& g_;
    StageId stage_;
    ModelInstance model_;
};

void require_positive(std::int64_t v, const char* field) {
    if (v < 1) throw ConfigError(std::string("autopilot parameter '") + field + "' must be >= 1");
}

std::string fe_id(std::int64_t cam, const std::string& suffix) { return "FE" + std::to_string(cam) + "_" + suffix; }

// ResNet-18 (widths x4) + BFPN for one camera. Returns the output layer id.
std::string build_camera(WorkloadGraph& g, const AutopilotParams& p, std::int64_t cam) {
    ModelBuilder mb(g, StageId::FeBfpn, "FE_BFPN_" + std::to_string(cam));
    const std::int64_t widths[4] = {256, 512, 1024, 2048};
    std::int64_t h = ceil_div(p.image_h, 4), w = ceil_div(p.image_w, 4);

    // Stem: 7x7/2 conv with the 3x3/2 max-pool folded in.
    const TensorShape image = shape(1, 3, p.image_h, p.image_w);
    std::string prev = mb.conv(fe_id(cam, "CONV1"), image, widths[0], 7, 4, h, w);

    std::string scale_out[4];
    for (int s = 0; s < 4; ++s) {
        const std::int64_t stride = s == 0 ? 1 : 2;
        const std::int64_t oh = s == 0 ? h : ceil_div(h, 2), ow = s == 0 ? w : ceil_div(w, 2);
        const std::string tag = "L" + std::to_string(s + 1);
        const TensorShape in = g.layer(prev).output_shape;

        // Block 1, with a 1x1 projection shortcut when the shape changes.
        auto c1 = mb.conv(fe_id(cam, tag + "_B1_C1"), in, widths[s], 3, stride, oh, ow);
        g.add_edge(prev, c1);
        std::string shortcut = prev;
        if (s > 0) {
            shortcut = mb.conv(fe_id(cam, tag + "_B1_DS"), in, widths[s], 1, 2, oh, ow);
            g.add_edge(prev, shortcut);
        }
        auto c2 = mb.conv(fe_id(cam, tag + "_B1_C2"), g.layer(c1).output_shape, widths[s], 3, 1, oh, ow);
        g.add_edge(c1, c2);
        g.add_edge(shortcut, c2);

        auto c3 = mb.conv(fe_id(cam, tag + "_B2_C1"), g.layer(c2).output_shape, widths[s], 3, 1, oh, ow);
        g.add_edge(c2, c3);
        auto c4 = mb.conv(fe_id(cam, tag + "_B2_C2"), g.layer(c3).output_shape, widths[s], 3, 1, oh, ow);
        g.add_edge(c3, c4);
        g.add_edge(c2, c4);

        scale_out[s] = c4;
        prev = c4;
        h = oh;
        w = ow;
    }

    // BFPN: lateral 1x1 projections to grid_c, then top-down and bottom-up passes.
    const std::int64_t C = p.grid_c;
    std::string level[4];
    for (int s = 0; s < 4; ++s) {
        const TensorShape in = g.layer(scale_out[s]).output_shape;
        level[s] = mb.conv(fe_id(cam, "BF_LAT" + std::to_string(s + 1)), in, C, 1, 1, in.height, in.width);
        g.add_edge(scale_out[s], level[s]);
    }
    for (std::int64_t b = 1; b <= p.bfpn_blocks; ++b) {
        const std::string blk = "BF" + std::to_string(b) + "_";
        std::string td[4];
        td[3] = level[3];
        for (int s = 2; s >= 0; --s) {
            const TensorShape target = g.layer(level[s]).output_shape;
            auto rs = mb.resize(fe_id(cam, blk + "TD" + std::to_string(s + 1) + "_RS"), g.layer(td[s + 1]).output_shape,
                                target.height, target.width);
            g.add_edge(td[s + 1], rs);
            td[s] = mb.conv(fe_id(cam, blk + "TD" + std::to_string(s + 1)), target, C, 3, 1, target.height, target.width);
            g.add_edge(level[s], td[s]);
            g.add_edge(rs, td[s]);
        }
        std::string out[4];
        out[0] = td[0];
        for (int s = 1; s < 4; ++s) {
            const TensorShape target = g.layer(level[s]).output_shape;
            auto rs = mb.resize(fe_id(cam, blk + "BU" + std::to_string(s + 1) + "_RS"), g.layer(out[s - 1]).output_shape,
                                target.height, target.width);
            g.add_edge(out[s - 1], rs);
            out[s] = mb.conv(fe_id(cam, blk + "BU" + std::to_string(s + 1)), target, C, 3, 1, target.height, target.width);
            g.add_edge(level[s], out[s]);
            if (s < 3) g.add_edge(td[s], out[s]);
            g.add_edge(rs, out[s]);
        }
        for (int s = 0; s < 4; ++s) level[s] = out[s];
    }

    // Resize every scale onto the BEV grid, concatenate, project back to grid_c.
    LayerDescriptor cat;
    cat.id = fe_id(cam, "OUT_CAT");
    cat.kind = LayerKind::Concat;
    std::vector<std::string> resized;
    for (int s = 0; s < 4; ++s) {
        auto rs = mb.resize(fe_id(cam, "OUT_RS" + std::to_string(s + 1)), g.layer(level[s]).output_shape, p.grid_h, p.grid_w);
        g.add_edge(level[s], rs);
        resized.push_back(rs);
        cat.input_shapes.push_back(g.layer(rs).output_shape);
    }
    cat.output_shape = shape(1, 4 * C, p.grid_h, p.grid_w);
    const std::string cat_id = mb.add(cat);
    for (const auto& rs : resized) g.add_edge(rs, cat_id);
    auto out = mb.conv(fe_id(cam, "OUT"), g.layer(cat_id).output_shape, C, 1, 1, p.grid_h, p.grid_w);
    g.add_edge(cat_id, out);
    mb.finish();
    return out;
}

LayerDescriptor seq_layer(std::string id, LayerKind kind, TensorShape in, TensorShape out, std::int64_t seq,
                          std::int64_t dim) {
    LayerDescriptor l;
    l.id = std::move(id);
    l.kind = kind;
    l.input_shapes = {in};
    l.output_shape = out;
    l.seq_len = seq;
    l.model_dim = dim;
    return l;
}

// QKV projection -> attention score -> FFN, each one replica of a concurrency group.
std::string build_fusion(WorkloadGraph& g, StageId stage, const std::string& prefix, const std::string& model_name,
                         const std::vector<std::string>& inputs, std::int64_t replicas, std::int64_t in_c,
                         std::int64_t out_c, const AutopilotParams& p) {
    const std::int64_t cells = p.grid_h * p.grid_w;
    ModelBuilder mb(g, stage, model_name);
    const TensorShape in = shape(1, in_c, p.grid_h, p.grid_w);

    auto qkv = mb.add(seq_layer(prefix + "_QKV", LayerKind::QkvProjection, in, shape(replicas, 3 * in_c, p.grid_h, p.grid_w),
                                cells, in_c));
    for (const auto& src : inputs) g.add_edge(src, qkv);

    auto attn_l = seq_layer(prefix + "_ATTN", LayerKind::AttentionScore, g.layer(qkv).output_shape,
                            shape(replicas, in_c, p.grid_h, p.grid_w), cells, in_c);
    auto attn = mb.add(attn_l);
    g.add_edge(qkv, attn);

    auto ffn_l = seq_layer(prefix + "_FFN", LayerKind::Ffn, g.layer(attn).output_shape, shape(1, out_c, p.grid_h, p.grid_w),
                           cells, in_c);
    ffn_l.hidden_dim = 4 * in_c;
    auto ffn = mb.add(ffn_l);
    g.add_edge(attn, ffn);
    mb.finish();

    for (auto& st : g.mutable_stages())
        if (st.stage_id == stage)
            for (const auto& id : {qkv, attn, ffn})
                st.concurrency_groups.push_back(ConcurrencyGroup{{id}, replicas, true, ShardAxis::Replica});
    return ffn;
}

void build_occupancy(WorkloadGraph& g, const std::string& src, std::int64_t layers, const AutopilotParams& p) {
    ModelBuilder mb(g, StageId::Trunks, "occupancy");
    TensorShape cur = g.has_layer(src) ? g.layer(src).output_shape : shape(1, p.temporal_channels, p.grid_h, p.grid_w);
    std::string prev = src;
    for (std::int64_t i = 1; i <= layers; ++i) {
        auto id = mb.conv("OCC_UP" + std::to_string(i), cur, p.temporal_channels, 3, 2, cur.height * 2, cur.width * 2,
                          LayerKind::Deconv);
        if (!prev.empty()) g.add_edge(prev, id);
        prev = id;
        cur = g.layer(id).output_shape;
    }
    mb.finish();
}

void build_lane(WorkloadGraph& g, const std::string& src, const AutopilotParams& p) {
    ModelBuilder mb(g, StageId::Trunks, "lane");
    const std::int64_t cells = p.grid_h * p.grid_w;
    const std::int64_t d = p.temporal_channels;
    const TensorShape feat = g.layer(src).output_shape;
    for (int lvl = 1; lvl <= 3; ++lvl) {
        const std::string n = std::to_string(lvl);
        auto sa = mb.add(seq_layer("LANE_SA" + n, LayerKind::AttentionScore, feat, feat, cells, d));
        g.add_edge(src, sa);
        auto ca_l = seq_layer("LANE_CA" + n, LayerKind::AttentionScore, feat, feat, cells, d);
        ca_l.input_shapes.push_back(feat);
        auto ca = mb.add(ca_l);
        g.add_edge(sa, ca);
        g.add_edge(src, ca);
        auto cls_l = seq_layer("LANE_CLS" + n, LayerKind::MatMul, feat, shape(1, 64, p.grid_h, p.grid_w), cells, d);
        auto cls = mb.add(cls_l);
        g.add_edge(ca, cls);
    }
    mb.finish();
}

void build_detection(WorkloadGraph& g, const std::string& src) {
    ModelBuilder mb(g, StageId::Trunks, "detection");
    const TensorShape feat = g.layer(src).output_shape;
    for (const char* head : {"CLS", "BOX"}) {
        const std::string base = std::string("DET_") + head + "_";
        std::string prev = src;
        for (int i = 1; i <= 3; ++i) {
            auto c = mb.conv(base + "C" + std::to_string(i), feat, feat.channels, 3, 1, feat.height, feat.width);
            g.add_edge(prev, c);
            prev = c;
        }
        LayerDescriptor fc;
        fc.id = base + "FC";
        fc.kind = LayerKind::FullyConnected;
        fc.input_shapes = {feat};
        fc.output_shape = shape(1, 256, 1, 1);
        fc.kernel = Kernel{1, 1, 1, feat.channels * feat.height * feat.width, 256};
        auto fc_id = mb.add(fc);
        g.add_edge(prev, fc_id);
    }
    mb.finish();
}

}  // namespace

std::vector<std::string> fe_multiscale_ids(std::int64_t camera) {
    std::vector<std::string> ids;
    for (int s = 1; s <= 4; ++s) ids.push_back(fe_id(camera, "L" + std::to_string(s) + "_B2_C2"));
    return ids;
}

WorkloadGraph build_autopilot_pipeline(const AutopilotParams& p) {
    require_positive(p.num_cameras, "num_cameras");
    require_positive(p.grid_h, "grid_h");
    require_positive(p.grid_w, "grid_w");
    require_positive(p.grid_c, "grid_c");
    require_positive(p.temporal_depth, "temporal_depth");
    require_positive(p.temporal_channels, "temporal_channels");
    require_positive(p.image_h, "image_h");
    require_positive(p.image_w, "image_w");
    require_positive(p.bfpn_blocks, "bfpn_blocks");

    WorkloadGraph g;
    g.add_stage(StageId::FeBfpn);
    std::vector<std::string> fe_outputs;
    for (std::int64_t cam = 0; cam < p.num_cameras; ++cam) fe_outputs.push_back(build_camera(g, p, cam));

    g.add_stage(StageId::SpatialFuse);
    auto s_out = build_fusion(g, StageId::SpatialFuse, "S", "s_fuse", fe_outputs, p.num_cameras, p.grid_c, p.grid_c, p);

    g.add_stage(StageId::TemporalFuse);
    auto t_out = build_fusion(g, StageId::TemporalFuse, "T", "t_fuse", {s_out}, p.temporal_depth, p.grid_c,
                              p.temporal_channels, p);

    if (!p.trunk_set.empty()) {
        g.add_stage(StageId::Trunks);
        for (const auto& t : p.trunk_set) {
            if (t == "occupancy") build_occupancy(g, t_out, 4, p);
            else if (t == "lane") build_lane(g, t_out, p);
            else if (t == "detection") build_detection(g, t_out);
            else throw ConfigError("autopilot parameter 'trunk_set' has unknown trunk '" + t + "'");
        }
    }
    return g;
}

WorkloadGraph build_occupancy_trunk(std::int64_t upscale, const AutopilotParams& p) {
    if (upscale < 2 || (upscale & (upscale - 1)) != 0)
        throw ConfigError("occupancy upscale must be a power of two >= 2");
    std::int64_t layers = 0;
    for (std::int64_t u = upscale; u > 1; u >>= 1) ++layers;
    WorkloadGraph g;
    g.add_stage(StageId::Trunks);
    build_occupancy(g, "", layers, p);
    return g;
}

}  // namespace mcm
