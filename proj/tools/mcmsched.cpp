// mcmsched: command-line front end for the multi-chiplet scheduling toolkit.
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcm/ablation.hpp"
#include "mcm/baseline.hpp"
#include "mcm/dse.hpp"
#include "mcm/errors.hpp"
#include "mcm/presets.hpp"
#include "mcm/scheduler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mcm;

namespace {

enum Exit : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,
    kConfig = 3,
    kCapacity = 4,
    kCapExceeded = 5,
    kInvalid = 6,
};

struct Options {
    std::string workload = "autopilot";
    std::string mcm = "simba-6x6";
    std::string profile = "autopilot-paper";
    std::string mode = "layerwise";
    double l_cstr = 85.0;
    std::string out;
    std::uint64_t seed = 1;
    std::vector<std::string> baselines = {"36x256", "1x9216", "2x4608", "4x2304"};
    std::string study = "occupancy";
    std::vector<int> ws_counts = {0, 2, 4};
    std::uint64_t cap = DseOptions{}.cap;
};

// Fixed-width text table.
class Table {
public:
    explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
    void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
    void print(std::ostream& os) const {
        std::vector<std::size_t> w(rows_[0].size(), 0);
        for (const auto& r : rows_)
            for (std::size_t c = 0; c < r.size(); ++c) w[c] = std::max(w[c], r[c].size());
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            for (std::size_t c = 0; c < rows_[i].size(); ++c)
                os << (c ? "  " : "") << std::setw(static_cast<int>(w[c])) << rows_[i][c];
            os << "\n";
            if (i == 0) {
                for (std::size_t c = 0; c < w.size(); ++c) os << (c ? "  " : "") << std::string(w[c], '-');
                os << "\n";
            }
        }
    }
    std::string csv() const {
        std::ostringstream os;
        for (const auto& r : rows_) {
            for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
            os << "\n";
        }
        return os.str();
    }

private:
    std::vector<std::vector<std::string>> rows_;
};

std::string num(double v, int precision = 4) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    std::ostringstream os;
    os << std::setprecision(precision) << std::fixed << v;
    return os.str();
}

void write_file(const Options& o, const std::string& name, const std::string& text) {
    if (o.out.empty()) return;
    fs::create_directories(o.out);
    std::ofstream f(fs::path(o.out) / name);
    if (!f) throw ConfigError("cannot write " + (fs::path(o.out) / name).string());
    f << text;
}

void write_json(const Options& o, const std::string& name, json j) {
    j["schema_version"] = 1;
    write_file(o, name, j.dump(2) + "\n");
}

json metrics_json(const PipelineMetrics& m) {
    return {{"e2e_latency_ms", m.e2e_latency_ms},
            {"pipe_latency_ms", m.pipe_latency_ms},
            {"energy_j", m.energy_j},
            {"edp_j_ms", m.edp},
            {"utilization", m.utilization}};
}

// ---------------------------------------------------------------------------

int cmd_profile(const Options& o) {
    const auto g = resolve_workload(o.workload);
    const auto p = resolve_profile(o.profile);
    const auto os = stage_totals(g, p, Dataflow::OutputStationary);
    const auto ws = stage_totals(g, p, Dataflow::WeightStationary);

    Table t({"stage", "os_ms", "os_share", "os_j", "ws_ms", "ws_j"});
    json stages = json::array();
    for (std::size_t i = 0; i < os.size(); ++i) {
        const auto name = std::string(to_string(os[i].stage));
        t.add({name, num(os[i].latency_ms, 2), num(os[i].fraction_of_total * 100, 1) + "%", num(os[i].energy_j),
               num(ws[i].latency_ms, 2), num(ws[i].energy_j)});
        stages.push_back({{"stage", name},
                          {"os_latency_ms", os[i].latency_ms},
                          {"os_fraction", os[i].fraction_of_total},
                          {"os_energy_j", os[i].energy_j},
                          {"ws_latency_ms", ws[i].latency_ms},
                          {"ws_energy_j", ws[i].energy_j}});
    }
    const double ratio = mean_ws_os_latency_ratio(g, p);
    std::cout << "Stage totals (FE+BFPN counted for one camera)\n";
    t.print(std::cout);
    std::cout << "\nmean WS/OS latency ratio: " << num(ratio, 3) << "\n";

    Table aff({"layer", "d_latency_ms", "d_energy_j", "affine"});
    for (const auto& a : dataflow_affinity(g, p))
        aff.add({a.layer_id, num(a.delta_latency_ms, 6), num(a.delta_energy_j, 9),
                 a.delta_latency_ms < 0 ? "OS" : "WS"});
    write_file(o, "stage_totals.csv", t.csv());
    write_file(o, "affinity.csv", aff.csv());
    write_json(o, "profile.json", {{"profile", p.name()}, {"mean_ws_os_latency_ratio", ratio}, {"stages", stages}});
    return kOk;
}

int cmd_schedule(const Options& o) {
    const auto g = resolve_workload(o.workload);
    const auto m = resolve_mcm(o.mcm);
    const auto p = resolve_profile(o.profile);
    auto r = throughput_match(g, m, p);
    r.schedule.mode = parse_pipeline_mode(o.mode);
    const auto ev = evaluate_detailed(r.schedule, g, m, p);

    Table log({"iter", "action", "stage", "layer", "k", "unit_ms", "stage_ms", "pipe_ms"});
    for (const auto& d : r.log)
        log.add({std::to_string(d.iteration), d.action, std::string(to_string(d.stage)), d.layer,
                 std::to_string(d.k_before) + "->" + std::to_string(d.k_after), num(d.unit_latency_ms, 2),
                 num(d.stage_before_ms, 2) + "->" + num(d.stage_after_ms, 2), num(d.pipe_latency_ms, 2)});
    std::cout << "Decision log (Lat_base " << num(r.lat_base_ms, 2) << " ms, " << to_string(r.schedule.mode)
              << " pipelining)\n";
    log.print(std::cout);
    std::cout << (r.exhausted ? "stopped: no further move reduces the bottleneck\n" : "stopped: stages matched\n");
    std::cout << "\nPlacement\n" << placement_map(r.schedule, g, m) << "\n";

    const auto& mt = ev.metrics;
    Table met({"metric", "value"});
    met.add({"pipe_latency_ms", num(mt.pipe_latency_ms, 3)});
    met.add({"e2e_latency_ms", num(mt.e2e_latency_ms, 3)});
    met.add({"energy_j", num(mt.energy_j, 5)});
    met.add({"nop_energy_j", num(ev.nop_energy_j, 6)});
    met.add({"edp_j_ms", num(mt.edp, 4)});
    met.add({"utilization", num(mt.utilization * 100, 2) + "%"});
    met.print(std::cout);

    // Greedy placement against the median of random placements with the same grouping.
    std::mt19937_64 rng(o.seed);
    std::vector<double> samples;
    for (int i = 0; i < 100; ++i) samples.push_back(placement_nop_energy(random_placement(r.schedule, rng), g, m));
    std::nth_element(samples.begin(), samples.begin() + 50, samples.end());
    const double greedy = placement_nop_energy(r.schedule, g, m), median = samples[50];
    std::cout << "\nNoP energy: greedy " << num(greedy * 1e6, 3) << " uJ, random median " << num(median * 1e6, 3)
              << " uJ (seed " << o.seed << ")\n";

    write_file(o, "decision_log.csv", decision_log_csv(r.log));
    write_file(o, "placement.txt", placement_map(r.schedule, g, m));
    json assignment = json::object();
    for (const auto& [id, pl] : r.schedule.assignment) {
        json pos = json::array();
        for (const auto& q : pl.chiplets) pos.push_back({q.x, q.y});
        assignment[id] = {{"chiplets", pos}, {"shard_factor", pl.shard_factor},
                          {"shard_axis", std::string(to_string(pl.shard_axis))}};
    }
    write_json(o, "schedule.json",
               {{"mcm", m.name},
                {"mode", std::string(to_string(r.schedule.mode))},
                {"lat_base_ms", r.lat_base_ms},
                {"iterations", r.iterations},
                {"exhausted", r.exhausted},
                {"metrics", metrics_json(mt)},
                {"nop_energy_j", ev.nop_energy_j},
                {"placement_check", {{"seed", o.seed}, {"greedy_j", greedy}, {"random_median_j", median}}},
                {"assignment", assignment}});
    return kOk;
}

// Both pipelining modes unless --mode names one.
int cmd_compare(const Options& o, const std::string& only_mode) {
    const auto g = resolve_workload(o.workload);
    const auto p = resolve_profile(o.profile);
    std::vector<PipelineMode> modes = {PipelineMode::Stagewise, PipelineMode::Layerwise};
    if (!only_mode.empty()) modes = {parse_pipeline_mode(only_mode)};
    std::vector<Arrangement> list;
    for (const auto& b : o.baselines) list.push_back(parse_arrangement(b));

    Table t({"arrangement", "mode", "scheduler", "e2e_ms", "pipe_ms", "energy_j", "edp_j_ms", "util"});
    json rows = json::array();
    for (const auto mode : modes) {
        const std::string mode_name(to_string(mode));
        for (const auto& r : compare_arrangements(g, list, p, mode)) {
            const auto& m = r.metrics;
            t.add({r.arrangement.label(), mode_name, r.matched ? "matched" : "baseline", num(m.e2e_latency_ms, 2),
                   num(m.pipe_latency_ms, 2), num(m.energy_j, 4), num(m.edp, 2), num(m.utilization * 100, 2) + "%"});
            json j = metrics_json(m);
            j["arrangement"] = r.arrangement.label();
            j["mode"] = mode_name;
            j["matched"] = r.matched;
            rows.push_back(j);
        }
    }
    t.print(std::cout);
    write_file(o, "compare.csv", t.csv());
    write_json(o, "compare.json", {{"workload", o.workload}, {"rows", rows}});
    return kOk;
}

int cmd_ablate(const Options& o) {
    const auto p = resolve_profile(o.profile);
    if (o.study == "occupancy") {
        Table t({"upscale", "layers", "macs", "final_share", "latency_ms"});
        json rows = json::array();
        for (const auto& pt : occupancy_study({2, 4, 8, 16}, CostProfile::analytical())) {
            t.add({std::to_string(pt.upscale) + "x", std::to_string(pt.layers), std::to_string(pt.total_macs),
                   num(pt.final_layer_share * 100, 1) + "%", num(pt.latency_ms, 2)});
            rows.push_back({{"upscale", pt.upscale},
                            {"layers", pt.layers},
                            {"macs", pt.total_macs},
                            {"final_layer_share", pt.final_layer_share},
                            {"latency_ms", pt.latency_ms}});
        }
        std::cout << "Occupancy upscaling (analytical cost model)\n";
        t.print(std::cout);
        write_file(o, "ablate_occupancy.csv", t.csv());
        write_json(o, "ablate_occupancy.json", {{"rows", rows}});
        return kOk;
    }
    if (o.study == "lane") {
        const auto g = resolve_workload(o.workload);
        std::vector<double> fractions;
        for (int i = 1; i <= 10; ++i) fractions.push_back(i / 10.0);
        const auto s = lane_fraction_study(g, p, fractions);
        Table t({"fraction", "latency_ms", "exceeds"});
        json rows = json::array();
        for (const auto& pt : s.points) {
            t.add({num(pt.fraction * 100, 0) + "%", num(pt.latency_ms, 2), pt.exceeds ? "yes" : "no"});
            rows.push_back({{"fraction", pt.fraction}, {"latency_ms", pt.latency_ms}, {"exceeds", pt.exceeds}});
        }
        std::cout << "Lane trunk compute fraction vs " << num(s.threshold_ms, 1) << " ms\n";
        t.print(std::cout);
        if (s.crossing)
            std::cout << "threshold crossed at " << num(*s.crossing * 100, 1) << "% of the lane compute\n";
        else
            std::cout << "threshold not crossed\n";
        write_file(o, "ablate_lane.csv", t.csv());
        json j = {{"serial_ms", s.serial_ms}, {"threshold_ms", s.threshold_ms}, {"rows", rows}};
        j["crossing"] = s.crossing ? json(*s.crossing) : json(nullptr);
        write_json(o, "ablate_lane.json", j);
        return kOk;
    }
    throw ConfigError("unknown study '" + o.study + "': expected occupancy or lane");
}

int cmd_dse(const Options& o) {
    const auto g = resolve_workload(o.workload);
    const auto m = resolve_mcm(o.mcm);
    const auto p = resolve_profile(o.profile);
    const auto region = stage_regions(m)[static_cast<int>(StageId::Trunks)];
    DseOptions opt;
    opt.cap = o.cap;
    const auto rep = search(region, o.ws_counts, o.l_cstr, g, m, p, opt);

    Table t({"config", "space", "explored", "feasible", "e2e_ms", "pipe_ms", "energy_j", "edp_j_ms", "d_energy",
             "d_edp"});
    json rows = json::array();
    bool any = false;
    for (const auto& e : rep.entries) {
        const std::string label = e.ws_count == 0 ? "OS" : "Het(" + std::to_string(e.ws_count) + ")";
        json j = {{"ws_count", e.ws_count},
                  {"space", std::string(to_string(e.space))},
                  {"explored", e.explored},
                  {"feasible", e.feasible}};
        if (!e.best) {
            t.add({label, std::string(to_string(e.space)), std::to_string(e.explored), "0", "-", "-", "-", "-", "-",
                   "-"});
            j["best"] = nullptr;
            rows.push_back(j);
            continue;
        }
        any = true;
        const auto& b = *e.best;
        t.add({label, std::string(to_string(e.space)), std::to_string(e.explored), std::to_string(e.feasible),
               num(b.metrics.e2e_latency_ms, 2), num(b.metrics.pipe_latency_ms, 2), num(b.metrics.energy_j, 4),
               num(b.edp(), 3), e.delta ? num(e.delta->energy_pct, 2) + "%" : "-",
               e.delta ? num(e.delta->edp_pct, 2) + "%" : "-"});
        json ws = json::array(), assign = json::object();
        for (const auto& q : b.config.ws_positions) ws.push_back({q.x, q.y});
        for (const auto& [id, q] : b.config.layer_assignment) assign[id] = {q.x, q.y};
        json best = metrics_json(b.metrics);
        best["score_edp_j_ms"] = b.edp();
        best["ws_positions"] = ws;
        best["layer_assignment"] = assign;
        j["best"] = best;
        if (e.delta)
            j["delta_pct"] = {{"e2e", e.delta->e2e_pct},
                              {"pipe", e.delta->pipe_pct},
                              {"energy", e.delta->energy_pct},
                              {"edp", e.delta->edp_pct}};
        rows.push_back(j);
    }
    std::cout << "Trunks quadrant DSE, L_cstr " << num(o.l_cstr, 3) << " ms (EDP = energy x E2E)\n";
    t.print(std::cout);
    if (!any) std::cout << "no configuration satisfies the latency constraint\n";
    write_file(o, "dse.csv", t.csv());
    write_json(o, "dse.json", {{"l_cstr_ms", o.l_cstr}, {"rows", rows}});
    return kOk;
}

int cmd_validate(const Options& o, bool mcm_given, bool profile_given) {
    bool ok = true;
    const auto g = resolve_workload(o.workload);
    const auto violations = validate(g);
    std::cout << "workload: " << g.size() << " layers, " << g.edges().size() << " edges, "
              << (violations.empty() ? "valid" : std::to_string(violations.size()) + " violation(s)") << "\n";
    for (const auto& v : violations) std::cout << "  [" << v.rule << "] " << v.subject << ": " << v.message << "\n";
    ok = ok && violations.empty();
    if (mcm_given) {
        const auto m = resolve_mcm(o.mcm);
        const auto err = m.check();
        std::cout << "mcm: " << m.name << " " << m.grid_w << "x" << m.grid_h << ", " << (err.empty() ? "valid" : err)
                  << "\n";
        ok = ok && err.empty();
    }
    if (profile_given) {
        const auto p = resolve_profile(o.profile);
        std::size_t missing = 0;
        if (p.source() == ProfileSource::FixtureFile)
            for (std::size_t i = 0; i < g.size(); ++i) {
                const auto& l = g.layer(i);
                if (!is_compute(l.kind)) continue;
                for (auto df : {Dataflow::OutputStationary, Dataflow::WeightStationary})
                    if (!p.find(l.id, df)) {
                        if (missing++ < 10)
                            std::cout << "  missing cost entry (" << l.id << ", " << to_string(df) << ")\n";
                    }
            }
        std::cout << "profile: " << p.name() << ", " << (missing ? std::to_string(missing) + " missing entries" : "covers workload")
                  << "\n";
        ok = ok && missing == 0;
    }
    return ok ? kOk : kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Throughput-matched scheduling of perception pipelines on multi-chiplet NPUs"};
    app.require_subcommand(1);
    Options o;

    auto add_profile = [&](CLI::App* c) {
        return c->add_option("--profile", o.profile, "Cost profile file, preset or 'analytical'")->capture_default_str();
    };
    auto add_mcm = [&](CLI::App* c) {
        return c->add_option("--mcm", o.mcm, "MCM description file or preset")->capture_default_str();
    };
    auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out, "Directory for CSV and JSON outputs"); };

    auto* profile = app.add_subcommand("profile", "Stage totals, WS/OS ratio and per-layer dataflow affinity");
    profile->add_option("--workload", o.workload, "Workload graph file or preset")->capture_default_str();
    add_profile(profile);
    add_out(profile);

    auto* schedule = app.add_subcommand("schedule", "Throughput-matching scheduler with NoP-aware placement");
    schedule->add_option("--workload", o.workload, "Workload graph file or preset")->capture_default_str();
    add_mcm(schedule);
    add_profile(schedule);
    schedule->add_option("--mode", o.mode, "Pipelining mode: stagewise or layerwise")->capture_default_str();
    schedule->add_option("--seed", o.seed, "Seed for the random-placement comparison")->capture_default_str();
    add_out(schedule);

    std::string compare_workload = "autopilot-fusion";
    auto* compare = app.add_subcommand("compare", "Compare chiplet arrangements and monolithic baselines");
    compare->add_option("--workload", compare_workload, "Workload graph file or preset")->capture_default_str();
    add_profile(compare);
    std::string compare_mode;
    compare->add_option("--mode", compare_mode, "Pipelining mode: stagewise or layerwise (default: both)");
    compare->add_option("--baselines", o.baselines, "Arrangements NxP, e.g. 36x256 1x9216")
        ->delimiter(',')
        ->capture_default_str();
    add_out(compare);

    auto* ablate = app.add_subcommand("ablate", "Occupancy upscaling or lane compute-fraction study");
    ablate->add_option("--study", o.study, "occupancy or lane")
        ->check(CLI::IsMember({"occupancy", "lane"}))
        ->capture_default_str();
    ablate->add_option("--workload", o.workload, "Workload graph file or preset")->capture_default_str();
    add_profile(ablate);
    add_out(ablate);

    auto* dse = app.add_subcommand("dse", "Brute-force heterogeneous OS/WS search over the trunks quadrant");
    dse->add_option("--workload", o.workload, "Workload graph file or preset")->capture_default_str();
    add_mcm(dse);
    add_profile(dse);
    dse->add_option("--lcstr", o.l_cstr, "Per-chiplet latency constraint in ms")->capture_default_str();
    dse->add_option("--ws-counts", o.ws_counts, "Numbers of WS chiplets to explore")
        ->delimiter(',')
        ->capture_default_str();
    dse->add_option("--cap", o.cap, "Refuse spaces larger than this many configurations")->capture_default_str();
    add_out(dse);

    auto* validate_cmd = app.add_subcommand("validate", "Parse and check workload, MCM and profile inputs");
    validate_cmd->add_option("--workload", o.workload, "Workload graph file or preset")->capture_default_str();
    auto* vm = add_mcm(validate_cmd);
    auto* vp = add_profile(validate_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (o.l_cstr <= 0) throw ConfigError("--lcstr must be positive");
        if (*profile) return cmd_profile(o);
        if (*schedule) return cmd_schedule(o);
        if (*compare) {
            o.workload = compare_workload;
            return cmd_compare(o, compare_mode);
        }
        if (*ablate) return cmd_ablate(o);
        if (*dse) return cmd_dse(o);
        if (*validate_cmd) return cmd_validate(o, vm->count() > 0, vp->count() > 0);
    } catch (const CapExceededError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kCapExceeded;
    } catch (const CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kCapacity;
    } catch (const EvaluationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
