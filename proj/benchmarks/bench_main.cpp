#include <benchmark/benchmark.h>

#include "mcm/baseline.hpp"
#include "mcm/dse.hpp"
#include "mcm/presets.hpp"
#include "mcm/scheduler.hpp"

namespace {

using namespace mcm;

struct Inputs {
    WorkloadGraph graph = resolve_workload("autopilot");
    WorkloadGraph fusion = resolve_workload("autopilot-fusion");
    CostProfile profile = resolve_profile("autopilot-paper");
    McmSpec mcm36 = resolve_mcm("simba-6x6");
    McmSpec mcm72 = resolve_mcm("simba-2x6x6");
};

const Inputs& inputs() {
    static const Inputs in;
    return in;
}

void BM_ThroughputMatch(benchmark::State& state) {
    const auto& in = inputs();
    const auto& mcm = state.range(0) == 36 ? in.mcm36 : in.mcm72;
    for (auto _ : state) benchmark::DoNotOptimize(throughput_match(in.graph, mcm, in.profile));
}
BENCHMARK(BM_ThroughputMatch)->Arg(36)->Arg(72)->Unit(benchmark::kMicrosecond);

void BM_Evaluate(benchmark::State& state) {
    const auto& in = inputs();
    const auto sched = throughput_match(in.graph, in.mcm36, in.profile).schedule;
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(sched, in.graph, in.mcm36, in.profile));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMicrosecond);

void BM_Place(benchmark::State& state) {
    const auto& in = inputs();
    const auto sched = throughput_match(in.graph, in.mcm72, in.profile).schedule;
    for (auto _ : state) benchmark::DoNotOptimize(place(sched, in.graph, in.mcm72));
}
BENCHMARK(BM_Place)->Unit(benchmark::kMicrosecond);

void BM_CompareArrangements(benchmark::State& state) {
    const auto& in = inputs();
    std::vector<Arrangement> list;
    for (const char* a : {"36x256", "1x9216", "2x4608", "4x2304"}) list.push_back(parse_arrangement(a));
    for (auto _ : state)
        benchmark::DoNotOptimize(compare_arrangements(in.fusion, list, in.profile, PipelineMode::Layerwise));
}
BENCHMARK(BM_CompareArrangements)->Unit(benchmark::kMicrosecond);

void BM_DseSearch(benchmark::State& state) {
    const auto& in = inputs();
    const auto region = stage_regions(in.mcm36)[static_cast<int>(StageId::Trunks)];
    const int ws = static_cast<int>(state.range(0));
    std::uint64_t explored = 0;
    for (auto _ : state) {
        const auto rep = search(region, {ws}, 85.0, in.graph, in.mcm36, in.profile);
        explored = rep.entries.front().explored;
        benchmark::DoNotOptimize(rep);
    }
    state.counters["configs"] = static_cast<double>(explored);
    state.counters["configs_per_s"] =
        benchmark::Counter(static_cast<double>(explored) * static_cast<double>(state.iterations()),
                           benchmark::Counter::kIsRate);
}
BENCHMARK(BM_DseSearch)->Arg(0)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
