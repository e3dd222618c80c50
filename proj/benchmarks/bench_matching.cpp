// Matching and extraction throughput on synthetic August Lock traffic.
//
// Logs hold `range(0)` scheduled activities drawn round-robin from the five
// signatures, with chatter and confusers mixed in.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "athena/act_extract.hpp"
#include "athena/eval_harness.hpp"
#include "athena/io.hpp"
#include "athena/sig_match.hpp"

namespace {

using namespace athena;

const SignatureSet& signatures() {
  static const SignatureSet sigs = load_signatures(ATHENA_SIGNATURE_DIR);
  return sigs;
}

TrafficLog synthetic_log(std::size_t activities) {
  const auto& sigs = signatures();
  std::vector<std::string> plan;
  for (std::size_t i = 0; i < activities; ++i) {
    plan.push_back(sigs[i % sigs.size()].activity_name());
  }
  NoiseModel noise;
  noise.chatter_per_minute = 2.0;
  noise.confusers_per_activity = 1.0;
  const auto schedule = make_schedule(sigs, plan, 42);
  return filter_background(synthesize(sigs, schedule, noise, 42).log, default_rules()).foreground;
}

void BM_SigMatch(benchmark::State& state) {
  const TrafficLog log = synthetic_log(static_cast<std::size_t>(state.range(0)));
  const Signature& sig = *signatures().find("manual_unlocking");
  const auto eps = tolerance_vector(sig, static_cast<double>(state.range(1)));
  for (auto _ : state) {
    MatchDag dag = sig_match(log, sig, eps);
    benchmark::DoNotOptimize(dag);
  }
  state.counters["packets"] = static_cast<double>(log.size());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(log.size()));
}
BENCHMARK(BM_SigMatch)->ArgsProduct({{10, 100, 1000}, {3, 11, 30}})->Unit(benchmark::kMicrosecond);

void BM_EarliestMatch(benchmark::State& state) {
  const TrafficLog log = synthetic_log(static_cast<std::size_t>(state.range(0)));
  const Signature& sig = *signatures().find("manual_unlocking");
  const MatchDag dag = sig_match(log, sig, tolerance_vector(sig, 11.0));
  for (auto _ : state) benchmark::DoNotOptimize(earliest_match(dag));
  state.counters["vertices"] = static_cast<double>(dag.vertex_count());
}
BENCHMARK(BM_EarliestMatch)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_ActExtract(benchmark::State& state) {
  const TrafficLog log = synthetic_log(static_cast<std::size_t>(state.range(0)));
  const auto tolerances = tolerance_set(signatures(), 11.0);
  ExtractOptions options;
  options.concurrent = state.range(1) != 0;
  for (auto _ : state) {
    auto result = act_extract(log, signatures(), tolerances, options);
    benchmark::DoNotOptimize(result);
  }
  state.counters["packets"] = static_cast<double>(log.size());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(log.size()));
}
BENCHMARK(BM_ActExtract)->ArgsProduct({{10, 100, 300}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
