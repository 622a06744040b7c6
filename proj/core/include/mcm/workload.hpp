#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mcm {

struct TensorShape {
    std::int64_t batch = 1;
    std::int64_t channels = 1;
    std::int64_t height = 1;
    std::int64_t width = 1;
    std::int64_t bytes_per_element = 1;

    std::int64_t elements() const { return batch * channels * height * width; }
    std::int64_t byte_size() const { return elements() * bytes_per_element; }
    bool valid() const;
    bool operator==(const TensorShape&) const = default;
};

enum class LayerKind {
    Conv,
    Deconv,
    FullyConnected,
    MatMul,
    QkvProjection,
    AttentionScore,
    Ffn,
    Concat,
    Upsample,
};

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

// Concat and Upsample move data but do no multiply-accumulate work.
bool is_compute(LayerKind kind);

struct Kernel {
    std::int64_t r = 1;
    std::int64_t s = 1;
    std::int64_t stride = 1;
    std::int64_t in_channels = 1;
    std::int64_t out_channels = 1;
    bool operator==(const Kernel&) const = default;
};

struct LayerDescriptor {
    std::string id;
    LayerKind kind = LayerKind::Conv;
    std::vector<TensorShape> input_shapes;
    TensorShape output_shape;
    std::optional<Kernel> kernel;
    // Attention / matmul geometry. kv_len defaults to seq_len, hidden_dim to 4*model_dim.
    std::optional<std::int64_t> seq_len;
    std::optional<std::int64_t> model_dim;
    std::optional<std::int64_t> kv_len;
    std::optional<std::int64_t> hidden_dim;

    bool operator==(const LayerDescriptor&) const = default;
};

enum class ShardAxis { Replica, OutputChannel, SpatialTile };

std::string_view to_string(ShardAxis axis);
ShardAxis parse_shard_axis(std::string_view text);

struct ConcurrencyGroup {
    std::vector<std::string> member_layer_ids;
    std::int64_t replication = 1;
    bool shardable = false;
    ShardAxis shard_axis = ShardAxis::Replica;
    bool operator==(const ConcurrencyGroup&) const = default;
};

enum class StageId { FeBfpn = 0, SpatialFuse = 1, TemporalFuse = 2, Trunks = 3 };

inline constexpr int kStageCount = 4;
std::string_view to_string(StageId stage);
StageId parse_stage_id(std::string_view text);

struct ModelInstance {
    std::string name;
    std::vector<std::string> layer_ids;
    bool operator==(const ModelInstance&) const = default;
};

struct StageSpec {
    StageId stage_id = StageId::FeBfpn;
    std::vector<ModelInstance> model_instances;
    std::vector<ConcurrencyGroup> concurrency_groups;
    bool operator==(const StageSpec&) const = default;
};

struct Edge {
    std::string producer;
    std::string consumer;
    TensorShape shape;
    // Consumer reads only a declared slice of the producer output.
    bool slice = false;
    bool operator==(const Edge&) const = default;
};

// Layer-level DAG grouped into stages. Layers are owned by the graph; stages
// reference them by id through their model instances.
class WorkloadGraph {
public:
    WorkloadGraph() = default;

    void add_layer(LayerDescriptor layer);
    void add_edge(std::string producer, std::string consumer, TensorShape shape, bool slice = false);
    void add_edge(const std::string& producer, const std::string& consumer);
    StageSpec& add_stage(StageId id);

    const std::vector<LayerDescriptor>& layers() const { return layers_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<StageSpec>& stages() const { return stages_; }
    std::vector<StageSpec>& mutable_stages() { return stages_; }

    bool has_layer(std::string_view id) const;
    std::size_t index_of(std::string_view id) const;  // throws ConfigError
    const LayerDescriptor& layer(std::string_view id) const;
    const LayerDescriptor& layer(std::size_t index) const { return layers_[index]; }
    std::size_t size() const { return layers_.size(); }

    // Stage owning a layer, or nullopt for an orphan layer.
    std::optional<StageId> stage_of(std::string_view id) const;
    const StageSpec* stage(StageId id) const;
    const ConcurrencyGroup* group_of(std::string_view id) const;

    // Index-based adjacency, rebuilt on demand.
    const std::vector<std::vector<std::size_t>>& predecessors() const;
    const std::vector<std::vector<std::size_t>>& successors() const;

    // Kahn order with insertion-index tie-break; empty when cyclic.
    std::vector<std::size_t> topological_order() const;

    bool operator==(const WorkloadGraph& other) const;

private:
    void invalidate() { adjacency_valid_ = false; }
    void build_adjacency() const;

    std::vector<LayerDescriptor> layers_;
    std::vector<Edge> edges_;
    std::vector<StageSpec> stages_;
    std::unordered_map<std::string, std::size_t> index_;

    mutable bool adjacency_valid_ = false;
    mutable std::vector<std::vector<std::size_t>> preds_;
    mutable std::vector<std::vector<std::size_t>> succs_;
};

std::int64_t mac_count(const LayerDescriptor& layer);
std::int64_t output_bytes(const LayerDescriptor& layer);
std::int64_t input_bytes(const LayerDescriptor& layer);
std::int64_t weight_bytes(const LayerDescriptor& layer);

struct Violation {
    std::string rule;     // e.g. "acyclic", "shape mismatch"
    std::string subject;  // layer id or "producer->consumer"
    std::string message;
};

std::vector<Violation> validate(const WorkloadGraph& graph);

}  // namespace mcm
