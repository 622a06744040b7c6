#include <charconv>
#include <fstream>
#include <sstream>

#include "mcm/cost.hpp"
#include "mcm/errors.hpp"

namespace mcm {

namespace {

constexpr std::string_view kHeader = "layer_id,dataflow,latency_ms,energy_j,provenance";

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
        if (i == line.size() || line[i] == ',') {
            parts.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    return parts;
}

double parse_number(std::string_view s, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(where + ": bad number '" + std::string(s) + "'");
    return v;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

CostProfile parse_profile_csv(const std::string& text, const std::string& name) {
    CostProfile profile = CostProfile::fixture(name);
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    bool version_seen = false, header_seen = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string where = name + ":" + std::to_string(line_no);
        auto line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '#') {
            auto body = trim(line.substr(1));
            if (body.rfind("schema_version=", 0) == 0) {
                const auto v = parse_number(body.substr(15), where);
                if (v != kProfileSchemaVersion)
                    throw ConfigError(where + ": unsupported schema_version " + std::string(body.substr(15)));
                version_seen = true;
            }
            continue;
        }
        if (!header_seen) {
            if (line != kHeader)
                throw ConfigError(where + ": expected header '" + std::string(kHeader) + "', got '" + std::string(line) + "'");
            header_seen = true;
            continue;
        }
        auto f = split(line);
        if (f.size() != 5)
            throw ConfigError(where + ": expected 5 fields, got " + std::to_string(f.size()));
        if (f[0].empty()) throw ConfigError(where + ": empty layer_id");
        const Dataflow df = [&] {
            try {
                return parse_dataflow(f[1]);
            } catch (const ConfigError& e) {
                throw ConfigError(where + ": " + e.what());
            }
        }();
        CostEntry c{parse_number(f[2], where), parse_number(f[3], where)};
        if (c.latency_ms < 0 || c.energy_j < 0) throw ConfigError(where + ": negative cost");
        const Provenance prov = [&] {
            try {
                return parse_provenance(f[4]);
            } catch (const ConfigError& e) {
                throw ConfigError(where + ": " + e.what());
            }
        }();
        if (profile.find(f[0], df)) throw ConfigError(where + ": duplicate entry for " + std::string(f[0]));
        profile.set(std::string(f[0]), df, c, prov);
    }
    if (!version_seen) throw ConfigError(name + ": missing '# schema_version=1' line");
    if (!header_seen) throw ConfigError(name + ": missing header line");
    return profile;
}

std::string profile_to_csv(const CostProfile& profile) {
    std::ostringstream out;
    out << "# schema_version=" << kProfileSchemaVersion << "\n";
    out << kHeader << "\n";
    for (const auto& [key, row] : profile.rows())
        out << key.first << ',' << to_string(key.second) << ',' << format_number(row.cost.latency_ms) << ','
            << format_number(row.cost.energy_j) << ',' << to_string(row.provenance) << "\n";
    return out.str();
}

CostProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read profile " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_profile_csv(ss.str(), path.stem().string());
}

void save_profile(const CostProfile& profile, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write profile " + path.string());
    out << profile_to_csv(profile);
}

}  // namespace mcm
