#include "mcm/graph_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mcm/errors.hpp"

namespace mcm {

using nlohmann::json;

namespace {

json shape_json(const TensorShape& s) {
    return json{{"batch", s.batch}, {"channels", s.channels}, {"height", s.height}, {"width", s.width},
                {"bytes_per_element", s.bytes_per_element}};
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": field '" + key + "' has the wrong type");
    }
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(where + ": unknown field '" + it.key() + "'");
    }
}

TensorShape parse_shape(const json& j, const std::string& where) {
    reject_unknown(j, {"batch", "channels", "height", "width", "bytes_per_element"}, where);
    TensorShape s;
    s.batch = field<std::int64_t>(j, "batch", where);
    s.channels = field<std::int64_t>(j, "channels", where);
    s.height = field<std::int64_t>(j, "height", where);
    s.width = field<std::int64_t>(j, "width", where);
    s.bytes_per_element = j.value("bytes_per_element", std::int64_t{1});
    return s;
}

json layer_json(const LayerDescriptor& l) {
    json j{{"id", l.id}, {"kind", std::string(to_string(l.kind))}, {"output_shape", shape_json(l.output_shape)}};
    json ins = json::array();
    for (const auto& s : l.input_shapes) ins.push_back(shape_json(s));
    j["input_shapes"] = ins;
    if (l.kernel)
        j["kernel"] = json{{"r", l.kernel->r}, {"s", l.kernel->s}, {"stride", l.kernel->stride},
                           {"in_channels", l.kernel->in_channels}, {"out_channels", l.kernel->out_channels}};
    if (l.seq_len) j["seq_len"] = *l.seq_len;
    if (l.model_dim) j["model_dim"] = *l.model_dim;
    if (l.kv_len) j["kv_len"] = *l.kv_len;
    if (l.hidden_dim) j["hidden_dim"] = *l.hidden_dim;
    return j;
}

LayerDescriptor parse_layer(const json& j) {
    const std::string where = "layer " + j.value("id", std::string("?"));
    reject_unknown(j, {"id", "kind", "input_shapes", "output_shape", "kernel", "seq_len", "model_dim", "kv_len", "hidden_dim"},
                   where);
    LayerDescriptor l;
    l.id = field<std::string>(j, "id", where);
    l.kind = parse_layer_kind(field<std::string>(j, "kind", where));
    l.output_shape = parse_shape(j.at("output_shape"), where + " output_shape");
    if (j.contains("input_shapes"))
        for (const auto& s : j.at("input_shapes")) l.input_shapes.push_back(parse_shape(s, where + " input_shapes"));
    if (j.contains("kernel")) {
        const auto& k = j.at("kernel");
        reject_unknown(k, {"r", "s", "stride", "in_channels", "out_channels"}, where + " kernel");
        l.kernel = Kernel{field<std::int64_t>(k, "r", where), field<std::int64_t>(k, "s", where),
                          field<std::int64_t>(k, "stride", where), field<std::int64_t>(k, "in_channels", where),
                          field<std::int64_t>(k, "out_channels", where)};
    }
    if (j.contains("seq_len")) l.seq_len = field<std::int64_t>(j, "seq_len", where);
    if (j.contains("model_dim")) l.model_dim = field<std::int64_t>(j, "model_dim", where);
    if (j.contains("kv_len")) l.kv_len = field<std::int64_t>(j, "kv_len", where);
    if (j.contains("hidden_dim")) l.hidden_dim = field<std::int64_t>(j, "hidden_dim", where);
    return l;
}

}  // namespace

std::string graph_to_json(const WorkloadGraph& graph, int indent) {
    json stages = json::array();
    std::unordered_map<std::string, bool> emitted;
    for (const auto& st : graph.stages()) {
        json models = json::array();
        for (const auto& m : st.model_instances) {
            json layers = json::array();
            for (const auto& id : m.layer_ids) {
                layers.push_back(layer_json(graph.layer(id)));
                emitted[id] = true;
            }
            models.push_back(json{{"name", m.name}, {"layers", layers}});
        }
        json groups = json::array();
        for (const auto& g : st.concurrency_groups)
            groups.push_back(json{{"members", g.member_layer_ids}, {"replication", g.replication},
                                  {"shardable", g.shardable}, {"shard_axis", std::string(to_string(g.shard_axis))}});
        stages.push_back(json{{"stage", std::string(to_string(st.stage_id))}, {"models", models},
                              {"concurrency_groups", groups}});
    }
    json orphans = json::array();
    for (const auto& l : graph.layers())
        if (!emitted.count(l.id)) orphans.push_back(layer_json(l));

    json edges = json::array();
    for (const auto& e : graph.edges()) {
        json je{{"from", e.producer}, {"to", e.consumer}, {"shape", shape_json(e.shape)}};
        if (e.slice) je["slice"] = true;
        edges.push_back(je);
    }

    // Layer order is preserved through "layer_order" so indices survive the round trip.
    json order = json::array();
    for (const auto& l : graph.layers()) order.push_back(l.id);

    json root{{"schema_version", kGraphSchemaVersion}, {"stages", stages}, {"edges", edges}, {"layer_order", order}};
    if (!orphans.empty()) root["unstaged_layers"] = orphans;
    return root.dump(indent);
}

WorkloadGraph graph_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("workload json: ") + e.what());
    }
    reject_unknown(root, {"schema_version", "stages", "edges", "layer_order", "unstaged_layers"}, "workload");
    const int version = field<int>(root, "schema_version", "workload");
    if (version != kGraphSchemaVersion)
        throw ConfigError("workload: unsupported schema_version " + std::to_string(version));

    std::unordered_map<std::string, LayerDescriptor> pool;
    std::vector<std::string> seen_order;
    std::vector<StageSpec> stages;
    for (const auto& js : field<json>(root, "stages", "workload")) {
        reject_unknown(js, {"stage", "models", "concurrency_groups"}, "stage");
        StageSpec st;
        st.stage_id = parse_stage_id(field<std::string>(js, "stage", "stage"));
        for (const auto& jm : js.value("models", json::array())) {
            reject_unknown(jm, {"name", "layers"}, "model");
            ModelInstance m;
            m.name = field<std::string>(jm, "name", "model");
            for (const auto& jl : jm.value("layers", json::array())) {
                auto l = parse_layer(jl);
                m.layer_ids.push_back(l.id);
                seen_order.push_back(l.id);
                pool.emplace(l.id, std::move(l));
            }
            st.model_instances.push_back(std::move(m));
        }
        for (const auto& jg : js.value("concurrency_groups", json::array())) {
            reject_unknown(jg, {"members", "replication", "shardable", "shard_axis"}, "concurrency group");
            ConcurrencyGroup g;
            g.member_layer_ids = field<std::vector<std::string>>(jg, "members", "concurrency group");
            g.replication = field<std::int64_t>(jg, "replication", "concurrency group");
            g.shardable = jg.value("shardable", false);
            g.shard_axis = parse_shard_axis(jg.value("shard_axis", std::string("Replica")));
            st.concurrency_groups.push_back(std::move(g));
        }
        stages.push_back(std::move(st));
    }
    for (const auto& jl : root.value("unstaged_layers", json::array())) {
        auto l = parse_layer(jl);
        seen_order.push_back(l.id);
        pool.emplace(l.id, std::move(l));
    }

    std::vector<std::string> order = root.contains("layer_order")
                                         ? field<std::vector<std::string>>(root, "layer_order", "workload")
                                         : seen_order;
    WorkloadGraph g;
    for (const auto& id : order) {
        auto it = pool.find(id);
        if (it == pool.end()) throw ConfigError("workload: layer_order names undefined layer '" + id + "'");
        g.add_layer(it->second);
    }
    if (g.size() != pool.size()) throw ConfigError("workload: layer_order does not list every layer");
    for (auto& st : stages) g.mutable_stages().push_back(std::move(st));

    for (const auto& je : field<json>(root, "edges", "workload")) {
        reject_unknown(je, {"from", "to", "shape", "slice"}, "edge");
        const auto from = field<std::string>(je, "from", "edge");
        const auto to = field<std::string>(je, "to", "edge");
        TensorShape s = je.contains("shape") ? parse_shape(je.at("shape"), "edge " + from + "->" + to)
                                             : (g.has_layer(from) ? g.layer(from).output_shape : TensorShape{});
        g.add_edge(from, to, s, je.value("slice", false));
    }
    return g;
}

void save_graph(const WorkloadGraph& graph, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << graph_to_json(graph) << "\n";
}

WorkloadGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return graph_from_json(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace mcm
