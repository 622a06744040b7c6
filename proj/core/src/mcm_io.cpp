#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mcm/errors.hpp"
#include "mcm/nop.hpp"

namespace mcm {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw ConfigError(where + ": unknown field '" + it.key() + "'");
    }
}

ChipletSpec parse_chiplet(const json& j, const ChipletSpec& base) {
    ChipletSpec c = base;
    if (j.contains("pe_count")) c.pe_count = j.at("pe_count").get<std::int64_t>();
    if (j.contains("dataflow")) c.dataflow = parse_dataflow(j.at("dataflow").get<std::string>());
    return c;
}

}  // namespace

std::string mcm_to_json(const McmSpec& m) {
    // Chiplets equal to the first one are folded into "default_chiplet".
    const ChipletSpec base = m.chiplets.empty() ? ChipletSpec{} : m.chiplets.front();
    json overrides = json::array();
    for (std::size_t i = 0; i < m.chiplets.size(); ++i) {
        if (m.chiplets[i] == base) continue;
        const auto p = m.position(i);
        overrides.push_back(json{{"x", p.x}, {"y", p.y}, {"pe_count", m.chiplets[i].pe_count},
                                 {"dataflow", std::string(to_string(m.chiplets[i].dataflow))}});
    }
    json root{{"schema_version", kMcmSchemaVersion},
              {"name", m.name},
              {"grid_w", m.grid_w},
              {"grid_h", m.grid_h},
              {"default_chiplet", {{"pe_count", base.pe_count}, {"dataflow", std::string(to_string(base.dataflow))}}},
              {"chiplets", overrides},
              {"nop", {{"bandwidth_bytes_per_s", m.nop_bandwidth},
                       {"hop_latency_s", m.hop_latency},
                       {"energy_per_bit_j", m.energy_per_bit}}}};
    return root.dump(2);
}

McmSpec mcm_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("mcm json: ") + e.what());
    }
    try {
        reject_unknown(root, {"schema_version", "name", "grid_w", "grid_h", "default_chiplet", "chiplets", "nop"}, "mcm");
        if (!root.contains("schema_version") || root.at("schema_version").get<int>() != kMcmSchemaVersion)
            throw ConfigError("mcm: missing or unsupported schema_version");
        McmSpec m;
        m.name = root.value("name", std::string("mcm"));
        m.grid_w = root.at("grid_w").get<int>();
        m.grid_h = root.at("grid_h").get<int>();
        if (m.grid_w < 1 || m.grid_h < 1) throw ConfigError("mcm: grid dimensions must be >= 1");
        ChipletSpec base;
        if (root.contains("default_chiplet")) {
            reject_unknown(root.at("default_chiplet"), {"pe_count", "dataflow"}, "mcm default_chiplet");
            base = parse_chiplet(root.at("default_chiplet"), base);
        }
        m.chiplets.assign(static_cast<std::size_t>(m.grid_w * m.grid_h), base);
        for (const auto& jc : root.value("chiplets", json::array())) {
            reject_unknown(jc, {"x", "y", "pe_count", "dataflow"}, "mcm chiplet");
            Position p{jc.at("x").get<int>(), jc.at("y").get<int>()};
            if (!m.contains(p)) throw ConfigError("mcm: chiplet override at " + to_string(p) + " outside the grid");
            m.at(p) = parse_chiplet(jc, base);
        }
        if (root.contains("nop")) {
            const auto& n = root.at("nop");
            reject_unknown(n, {"bandwidth_bytes_per_s", "hop_latency_s", "energy_per_bit_j"}, "mcm nop");
            m.nop_bandwidth = n.value("bandwidth_bytes_per_s", m.nop_bandwidth);
            m.hop_latency = n.value("hop_latency_s", m.hop_latency);
            m.energy_per_bit = n.value("energy_per_bit_j", m.energy_per_bit);
        }
        if (auto err = m.check(); !err.empty()) throw ConfigError("mcm: " + err);
        return m;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("mcm: ") + e.what());
    }
}

McmSpec load_mcm(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read mcm file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return mcm_from_json(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void save_mcm(const McmSpec& mcm, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << mcm_to_json(mcm) << "\n";
}

}  // namespace mcm
