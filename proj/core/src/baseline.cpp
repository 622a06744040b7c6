#include "mcm/baseline.hpp"

#include <charconv>

#include "mcm/errors.hpp"
#include "mcm/scheduler.hpp"

namespace mcm {

Schedule baseline_schedule(const WorkloadGraph& graph, int n, std::int64_t pes, const CostProfile& profile,
                           PipelineMode mode, const ScalingParams& scaling) {
    if (n < 1) throw ConfigError("baseline needs at least one chiplet");
    if (pes < 1) throw ConfigError("baseline chiplets need at least one PE");
    Schedule sch;
    sch.mode = mode;
    const auto order = graph.topological_order();
    if (order.empty() && graph.size() > 0) throw EvaluationError("workload graph is cyclic");

    if (mode == PipelineMode::Stagewise) {
        for (auto i : order) {
            const auto st = graph.stage_of(graph.layer(i).id);
            const int s = st ? static_cast<int>(*st) : 0;
            sch.assign(graph.layer(i).id, {Position{s % n, 0}});
        }
        return sch;
    }

    // Layerwise: cut the topological order into n runs near multiples of total / n.
    const ChipletSpec spec{pes, Dataflow::OutputStationary};
    std::vector<double> lat(graph.size(), 0.0);
    double total = 0.0;
    for (auto i : order) {
        lat[i] = chiplet_cost(graph, i, spec, profile, scaling).latency_ms;
        total += lat[i];
    }
    double acc = 0.0;
    int chip = 0;
    for (auto i : order) {
        const double mid = acc + lat[i] / 2.0;
        while (chip + 1 < n && mid > total * (chip + 1) / n) ++chip;
        sch.assign(graph.layer(i).id, {Position{chip, 0}});
        acc += lat[i];
    }
    return sch;
}

PipelineMetrics baseline(const WorkloadGraph& graph, int n, std::int64_t pes, const CostProfile& profile,
                         PipelineMode mode, const EvaluateOptions& options) {
    const auto sch = baseline_schedule(graph, n, pes, profile, mode, options.scaling);
    return evaluate(sch, graph, McmSpec::uniform(n, 1, pes), profile, options);
}

std::string Arrangement::label() const { return std::to_string(n_chiplets) + "x" + std::to_string(pes_per_chiplet); }

Arrangement parse_arrangement(std::string_view t) {
    const auto x = t.find('x');
    Arrangement a;
    auto num = [&](std::string_view s, auto& out) {
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc{} && p == s.data() + s.size() && out > 0;
    };
    if (x == std::string_view::npos || !num(t.substr(0, x), a.n_chiplets) || !num(t.substr(x + 1), a.pes_per_chiplet))
        throw ConfigError("arrangement '" + std::string(t) + "' is not of the form NxP");
    return a;
}

namespace {

bool grid_for(int n, int& w, int& h) {
    const auto shape = array_shape(n);
    h = static_cast<int>(shape.rows);
    w = static_cast<int>(shape.cols);
    return n >= 4 && ((w % 2 == 0 && h % 2 == 0) || w % 4 == 0 || h % 4 == 0);
}

}  // namespace

ArrangementResult run_arrangement(const WorkloadGraph& graph, const Arrangement& a, const CostProfile& profile,
                                  PipelineMode mode, const EvaluateOptions& options) {
    ArrangementResult r;
    r.arrangement = a;
    int w = 0, h = 0;
    if (a.pes_per_chiplet == profile.reference_pe_count() && grid_for(a.n_chiplets, w, h)) {
        const auto mcm = McmSpec::uniform(w, h, a.pes_per_chiplet);
        auto match = throughput_match(graph, mcm, profile);
        match.schedule.mode = mode;
        r.matched = true;
        r.metrics = evaluate(match.schedule, graph, mcm, profile, options);
        return r;
    }
    r.metrics = baseline(graph, a.n_chiplets, a.pes_per_chiplet, profile, mode, options);
    return r;
}

std::vector<ArrangementResult> compare_arrangements(const WorkloadGraph& graph, const std::vector<Arrangement>& list,
                                                    const CostProfile& profile, PipelineMode mode,
                                                    const EvaluateOptions& options) {
    std::vector<ArrangementResult> out;
    for (const auto& a : list) out.push_back(run_arrangement(graph, a, profile, mode, options));
    return out;
}

}  // namespace mcm
