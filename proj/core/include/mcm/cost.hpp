#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcm/workload.hpp"

namespace mcm {

enum class Dataflow { OutputStationary, WeightStationary };

std::string_view to_string(Dataflow df);       // "OS" / "WS"
Dataflow parse_dataflow(std::string_view text);  // accepts OS, WS and the long names

struct CostEntry {
    double latency_ms = 0.0;
    double energy_j = 0.0;
    bool operator==(const CostEntry&) const = default;
};

enum class Provenance { Paper, Synthetic, Measured };
std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

struct AnalyticalParams {
    std::int64_t pe_count = 256;
    double frequency_hz = 2.0e9;
    std::int64_t macs_per_pe_per_cycle = 1;
    // Calibrated so the OS/WS latency ratio is about 6.85 on the Autopilot preset.
    double os_utilization = 0.90;
    double ws_utilization = 0.90 / 6.85;
    double energy_per_mac_os = 1.2e-12;
    double energy_per_mac_ws = 1.0e-12;
    double energy_per_byte_dram = 20.0e-12;
    // Charge a weight refetch per extra shard. Off: the scaling law conserves energy.
    bool charge_weight_refetch = false;
};

enum class ProfileSource { FixtureFile, Analytical };

class CostProfile {
public:
    struct Row {
        CostEntry cost;
        Provenance provenance = Provenance::Synthetic;
    };
    using Key = std::pair<std::string, Dataflow>;

    static CostProfile fixture(std::string name = "fixture");
    static CostProfile analytical(AnalyticalParams params = {});

    ProfileSource source() const { return source_; }
    const std::string& name() const { return name_; }
    const AnalyticalParams& params() const { return params_; }
    // PE count the entries were produced for (256 for the bundled fixture).
    std::int64_t reference_pe_count() const { return params_.pe_count; }

    void set(const std::string& layer_id, Dataflow df, CostEntry cost, Provenance prov = Provenance::Synthetic);
    const Row* find(std::string_view layer_id, Dataflow df) const;
    bool covers(Dataflow df) const;
    const std::map<Key, Row>& rows() const { return rows_; }

private:
    ProfileSource source_ = ProfileSource::FixtureFile;
    std::string name_;
    AnalyticalParams params_;
    std::map<Key, Row> rows_;
};

// Formula cost of one replica of a layer.
CostEntry analytical_cost(const LayerDescriptor& layer, Dataflow df, const AnalyticalParams& params);

// Per-layer cost: table entry verbatim for fixtures, formula for analytical profiles.
// Non-compute layers absent from a fixture cost nothing.
CostEntry layer_cost(const LayerDescriptor& layer, Dataflow df, const CostProfile& profile);

// Cost of the scheduler-visible unit: analytical costs are multiplied by the
// layer's concurrency-group replication; fixture entries already describe the unit.
CostEntry unit_cost(const WorkloadGraph& graph, std::size_t layer_index, Dataflow df, const CostProfile& profile);

// Ideal sharding law: latency / k, energy conserved.
CostEntry shard_cost(const CostEntry& entry, std::int64_t k);

struct Affinity {
    std::string layer_id;
    double delta_latency_ms = 0.0;  // OS - WS; negative means OS-affine
    double delta_energy_j = 0.0;
};

std::vector<Affinity> dataflow_affinity(const WorkloadGraph& graph, const CostProfile& profile);

// How the replicated FE+BFPN models count in stage totals.
enum class FeScope { SingleCamera, AllCameras };

struct StageTotal {
    StageId stage = StageId::FeBfpn;
    double latency_ms = 0.0;
    double energy_j = 0.0;
    double fraction_of_total = 0.0;  // latency share
    double energy_fraction = 0.0;
};

std::vector<StageTotal> stage_totals(const WorkloadGraph& graph, const CostProfile& profile, Dataflow df,
                                     FeScope scope = FeScope::SingleCamera);

// Mean over compute layers of latency(WS) / latency(OS).
double mean_ws_os_latency_ratio(const WorkloadGraph& graph, const CostProfile& profile);

// Profile file: "# schema_version=1" then CSV rows
// layer_id,dataflow,latency_ms,energy_j,provenance.
inline constexpr int kProfileSchemaVersion = 1;
CostProfile parse_profile_csv(const std::string& text, const std::string& name = "fixture");
std::string profile_to_csv(const CostProfile& profile);
CostProfile load_profile(const std::filesystem::path& path);
void save_profile(const CostProfile& profile, const std::filesystem::path& path);

}  // namespace mcm
