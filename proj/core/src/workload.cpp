#include "mcm/workload.hpp"

#include <algorithm>
#include <array>
#include <queue>

#include "mcm/errors.hpp"

namespace mcm {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 9> kKindNames{{
    {LayerKind::Conv, "Conv"},
    {LayerKind::Deconv, "Deconv"},
    {LayerKind::FullyConnected, "FullyConnected"},
    {LayerKind::MatMul, "MatMul"},
    {LayerKind::QkvProjection, "QkvProjection"},
    {LayerKind::AttentionScore, "AttentionScore"},
    {LayerKind::Ffn, "Ffn"},
    {LayerKind::Concat, "Concat"},
    {LayerKind::Upsample, "Upsample"},
}};

constexpr std::array<std::pair<StageId, std::string_view>, 4> kStageNames{{
    {StageId::FeBfpn, "FeBfpn"},
    {StageId::SpatialFuse, "SpatialFuse"},
    {StageId::TemporalFuse, "TemporalFuse"},
    {StageId::Trunks, "Trunks"},
}};

constexpr std::array<std::pair<ShardAxis, std::string_view>, 3> kAxisNames{{
    {ShardAxis::Replica, "Replica"},
    {ShardAxis::OutputChannel, "OutputChannel"},
    {ShardAxis::SpatialTile, "SpatialTile"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E value) {
    for (const auto& [v, n] : table)
        if (v == value) return n;
    return "?";
}

template <typename E, std::size_t N>
E parse_name(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view text,
             const char* what) {
    for (const auto& [v, n] : table)
        if (n == text) return v;
    throw ConfigError(std::string("unknown ") + what + " '" + std::string(text) + "'");
}

std::int64_t attention_kv(const LayerDescriptor& l) { return l.kv_len.value_or(l.seq_len.value_or(1)); }
std::int64_t ffn_hidden(const LayerDescriptor& l) { return l.hidden_dim.value_or(4 * l.model_dim.value_or(1)); }

}  // namespace

bool TensorShape::valid() const {
    return batch >= 1 && channels >= 1 && height >= 1 && width >= 1 && bytes_per_element >= 1;
}

std::string_view to_string(LayerKind kind) { return name_of(kKindNames, kind); }
LayerKind parse_layer_kind(std::string_view text) { return parse_name(kKindNames, text, "layer kind"); }
std::string_view to_string(StageId stage) { return name_of(kStageNames, stage); }
StageId parse_stage_id(std::string_view text) { return parse_name(kStageNames, text, "stage"); }
std::string_view to_string(ShardAxis axis) { return name_of(kAxisNames, axis); }
ShardAxis parse_shard_axis(std::string_view text) { return parse_name(kAxisNames, text, "shard axis"); }

bool is_compute(LayerKind kind) { return kind != LayerKind::Concat && kind != LayerKind::Upsample; }

// ---------------------------------------------------------------------------
// WorkloadGraph

void WorkloadGraph::add_layer(LayerDescriptor layer) {
    if (index_.count(layer.id)) throw ConfigError("duplicate layer id '" + layer.id + "'");
    index_.emplace(layer.id, layers_.size());
    layers_.push_back(std::move(layer));
    invalidate();
}

void WorkloadGraph::add_edge(std::string producer, std::string consumer, TensorShape shape, bool slice) {
    edges_.push_back(Edge{std::move(producer), std::move(consumer), shape, slice});
    invalidate();
}

void WorkloadGraph::add_edge(const std::string& producer, const std::string& consumer) {
    add_edge(producer, consumer, layer(producer).output_shape, false);
}

StageSpec& WorkloadGraph::add_stage(StageId id) {
    stages_.push_back(StageSpec{id, {}, {}});
    return stages_.back();
}

bool WorkloadGraph::has_layer(std::string_view id) const { return index_.count(std::string(id)) > 0; }

std::size_t WorkloadGraph::index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw ConfigError("unknown layer id '" + std::string(id) + "'");
    return it->second;
}

const LayerDescriptor& WorkloadGraph::layer(std::string_view id) const { return layers_[index_of(id)]; }

std::optional<StageId> WorkloadGraph::stage_of(std::string_view id) const {
    for (const auto& st : stages_)
        for (const auto& m : st.model_instances)
            if (std::find(m.layer_ids.begin(), m.layer_ids.end(), id) != m.layer_ids.end()) return st.stage_id;
    return std::nullopt;
}

const StageSpec* WorkloadGraph::stage(StageId id) const {
    for (const auto& st : stages_)
        if (st.stage_id == id) return &st;
    return nullptr;
}

const ConcurrencyGroup* WorkloadGraph::group_of(std::string_view id) const {
    for (const auto& st : stages_)
        for (const auto& g : st.concurrency_groups)
            if (std::find(g.member_layer_ids.begin(), g.member_layer_ids.end(), id) != g.member_layer_ids.end())
                return &g;
    return nullptr;
}

void WorkloadGraph::build_adjacency() const {
    if (adjacency_valid_) return;
    preds_.assign(layers_.size(), {});
    succs_.assign(layers_.size(), {});
    for (const auto& e : edges_) {
        auto p = index_.find(e.producer);
        auto c = index_.find(e.consumer);
        if (p == index_.end() || c == index_.end()) continue;
        succs_[p->second].push_back(c->second);
        preds_[c->second].push_back(p->second);
    }
    adjacency_valid_ = true;
}

const std::vector<std::vector<std::size_t>>& WorkloadGraph::predecessors() const {
    build_adjacency();
    return preds_;
}

const std::vector<std::vector<std::size_t>>& WorkloadGraph::successors() const {
    build_adjacency();
    return succs_;
}

std::vector<std::size_t> WorkloadGraph::topological_order() const {
    build_adjacency();
    std::vector<std::size_t> indeg(layers_.size(), 0);
    for (std::size_t i = 0; i < layers_.size(); ++i) indeg[i] = preds_[i].size();
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < layers_.size(); ++i)
        if (indeg[i] == 0) ready.push(i);
    std::vector<std::size_t> order;
    order.reserve(layers_.size());
    while (!ready.empty()) {
        auto i = ready.top();
        ready.pop();
        order.push_back(i);
        for (auto s : succs_[i])
            if (--indeg[s] == 0) ready.push(s);
    }
    if (order.size() != layers_.size()) return {};
    return order;
}

bool WorkloadGraph::operator==(const WorkloadGraph& other) const {
    return layers_ == other.layers_ && edges_ == other.edges_ && stages_ == other.stages_;
}

// ---------------------------------------------------------------------------
// Accounting

std::int64_t mac_count(const LayerDescriptor& l) {
    const auto& out = l.output_shape;
    switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::Deconv: {
            const Kernel k = l.kernel.value_or(Kernel{});
            return k.r * k.s * k.in_channels * k.out_channels * out.height * out.width * out.batch;
        }
        case LayerKind::FullyConnected: {
            // Free dims are the output batch and spatial extent.
            const Kernel k = l.kernel.value_or(Kernel{});
            return out.batch * out.height * out.width * k.in_channels * k.out_channels;
        }
        // Sequence kinds fold any batch into seq_len.
        case LayerKind::MatMul:
            return l.seq_len.value_or(1) * l.model_dim.value_or(1) * out.channels;
        case LayerKind::QkvProjection: {
            const auto d = l.model_dim.value_or(1);
            return l.seq_len.value_or(1) * d * 3 * d;
        }
        case LayerKind::AttentionScore: {
            // Q.K^T and A.V, each seq x kv x d.
            const auto d = l.model_dim.value_or(1);
            return 2 * l.seq_len.value_or(1) * attention_kv(l) * d;
        }
        case LayerKind::Ffn: {
            const auto d = l.model_dim.value_or(1);
            const auto h = ffn_hidden(l);
            return l.seq_len.value_or(1) * (d * h + h * out.channels);
        }
        case LayerKind::Concat:
        case LayerKind::Upsample:
            return 0;
    }
    return 0;
}

std::int64_t output_bytes(const LayerDescriptor& layer) { return layer.output_shape.byte_size(); }

std::int64_t input_bytes(const LayerDescriptor& layer) {
    std::int64_t total = 0;
    for (const auto& s : layer.input_shapes) total += s.byte_size();
    return total;
}

std::int64_t weight_bytes(const LayerDescriptor& l) {
    const std::int64_t bpe = l.output_shape.bytes_per_element;
    switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::Deconv:
        case LayerKind::FullyConnected: {
            const Kernel k = l.kernel.value_or(Kernel{});
            return k.r * k.s * k.in_channels * k.out_channels * bpe;
        }
        case LayerKind::MatMul:
            return l.model_dim.value_or(1) * l.output_shape.channels * bpe;
        case LayerKind::QkvProjection: {
            const auto d = l.model_dim.value_or(1);
            return 3 * d * d * bpe;
        }
        case LayerKind::Ffn: {
            const auto d = l.model_dim.value_or(1);
            const auto h = ffn_hidden(l);
            return (d * h + h * l.output_shape.channels) * bpe;
        }
        default:
            return 0;
    }
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Violation> validate(const WorkloadGraph& graph) {
    std::vector<Violation> out;
    auto add = [&](std::string rule, std::string subject, std::string msg) {
        out.push_back({std::move(rule), std::move(subject), std::move(msg)});
    };

    for (const auto& l : graph.layers()) {
        if (!l.output_shape.valid()) add("shape dims", l.id, "output shape has a dimension < 1");
        for (const auto& s : l.input_shapes)
            if (!s.valid()) add("shape dims", l.id, "input shape has a dimension < 1");
        const bool needs_kernel = l.kind == LayerKind::Conv || l.kind == LayerKind::Deconv ||
                                  l.kind == LayerKind::FullyConnected;
        const bool needs_seq = l.kind == LayerKind::MatMul || l.kind == LayerKind::QkvProjection ||
                               l.kind == LayerKind::AttentionScore || l.kind == LayerKind::Ffn;
        if (needs_kernel && !l.kernel) add("kernel required", l.id, std::string(to_string(l.kind)) + " needs kernel fields");
        if (needs_seq && (!l.seq_len || !l.model_dim))
            add("attention geometry", l.id, std::string(to_string(l.kind)) + " needs seq_len and model_dim");
        if (is_compute(l.kind) && mac_count(l) <= 0) add("positive work", l.id, "compute layer has no MACs");
    }

    // Stage partition: every layer in exactly one stage.
    std::unordered_map<std::string, int> owners;
    std::unordered_map<std::string, StageId> owner_stage;
    for (const auto& st : graph.stages()) {
        for (const auto& m : st.model_instances)
            for (const auto& id : m.layer_ids) {
                if (!graph.has_layer(id)) add("unknown layer", id, "stage references an undefined layer");
                ++owners[id];
                owner_stage[id] = st.stage_id;
            }
        for (const auto& g : st.concurrency_groups) {
            if (g.replication < 1) add("replication", st.model_instances.empty() ? "" : st.model_instances[0].name,
                                       "concurrency group replication < 1");
            for (const auto& id : g.member_layer_ids) {
                auto it = owner_stage.find(id);
                if (it == owner_stage.end() || it->second != st.stage_id)
                    add("group stage", id, "concurrency group member outside its stage");
            }
        }
    }
    for (const auto& l : graph.layers()) {
        auto it = owners.find(l.id);
        if (it == owners.end()) add("stage partition", l.id, "layer belongs to no stage");
        else if (it->second > 1) add("stage partition", l.id, "layer belongs to more than one stage");
    }

    // Edges: endpoints, shapes, stage order.
    for (const auto& e : graph.edges()) {
        const std::string subject = e.producer + "->" + e.consumer;
        if (!graph.has_layer(e.producer) || !graph.has_layer(e.consumer)) {
            add("edge endpoint", subject, "edge references an undefined layer");
            continue;
        }
        const auto& prod = graph.layer(e.producer).output_shape;
        if (e.slice) {
            if (e.shape.byte_size() > prod.byte_size() || !e.shape.valid())
                add("shape mismatch", subject, "declared slice larger than producer output");
        } else if (!(e.shape == prod)) {
            add("shape mismatch", subject, "transferred shape differs from producer output shape");
        }
        auto ps = owner_stage.find(e.producer);
        auto cs = owner_stage.find(e.consumer);
        if (ps != owner_stage.end() && cs != owner_stage.end() &&
            static_cast<int>(ps->second) > static_cast<int>(cs->second))
            add("stage order", subject, "edge runs against the stage order");
    }

    if (graph.topological_order().empty() && graph.size() > 0) add("acyclic", "graph", "graph contains a cycle");
    return out;
}

}  // namespace mcm
