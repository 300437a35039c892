#include <benchmark/benchmark.h>

#include "lhfi/sampler.hpp"
#include "lhfi/validation.hpp"

namespace {

using namespace lhfi;

struct Fixture {
  Dataset ds;
  ModelConfig config;
  GibbsSampler sampler;
  ChainStreams streams;

  Fixture(int n, int p, int k, Variant v)
      : ds([&] {
          SyntheticSpec spec;
          spec.n = n;
          spec.p = p;
          spec.k = k;
          spec.variant = v;
          spec.seed = 1;
          spec.priors = make_desk_config(v, p).priors;
          return generate_synthetic(spec).dataset;
        }()),
        config([&] {
          ModelConfig c = make_desk_config(v, p);
          return c;
        }()),
        sampler(ds, config),
        streams(ChainStreams::make(7, 0)) {
    sampler.init_state(streams.init);
    for (int warm = 0; warm < 50; ++warm) sampler.sweep(streams, 0.5, 0.2);
  }
};

void BM_SweepPaperScaleB(benchmark::State& state) {
  Fixture f(125, 15, 4, Variant::B);
  for (auto _ : state) f.sampler.sweep(f.streams, 0.5, 0.2);
}
BENCHMARK(BM_SweepPaperScaleB)->Unit(benchmark::kMillisecond);

void BM_SweepDeskScaleB(benchmark::State& state) {
  Fixture f(30, 5, 2, Variant::B);
  for (auto _ : state) f.sampler.sweep(f.streams, 0.5, 0.2);
}
BENCHMARK(BM_SweepDeskScaleB)->Unit(benchmark::kMicrosecond);

void BM_HFieldSweep(benchmark::State& state) {
  Fixture f(static_cast<int>(state.range(0)), 5, 2, Variant::A);
  for (auto _ : state) f.sampler.step_h(f.streams.h);
}
BENCHMARK(BM_HFieldSweep)->Arg(30)->Arg(60)->Arg(125)->Unit(benchmark::kMicrosecond);

void BM_PhiStep(benchmark::State& state) {
  Fixture f(125, 5, 2, Variant::A);
  for (auto _ : state) f.sampler.step_phi(f.streams.phi, 0.5);
}
BENCHMARK(BM_PhiStep)->Unit(benchmark::kMicrosecond);

void BM_LogJointPaperScale(benchmark::State& state) {
  Fixture f(125, 15, 4, Variant::B);
  for (auto _ : state)
    benchmark::DoNotOptimize(log_joint(f.sampler.state(), f.ds, f.config).total());
}
BENCHMARK(BM_LogJointPaperScale)->Unit(benchmark::kMicrosecond);

void BM_GewekeReplica(benchmark::State& state) {
  // one successive-conditional replica at desk scale
  Fixture f(4, 2, 1, Variant::B);
  RngStream data(3, 3);
  for (auto _ : state) {
    f.sampler.sweep(f.streams, 0.6, 0.6);
    benchmark::DoNotOptimize(f.sampler.state().H(1));
  }
}
BENCHMARK(BM_GewekeReplica)->Unit(benchmark::kMicrosecond);

}  // namespace
