#include <benchmark/benchmark.h>

#include <map>
#include <memory>

#include "etalab/covariance.hpp"
#include "etalab/estimators.hpp"
#include "etalab/risk.hpp"
#include "etalab/trips.hpp"

using namespace etalab;

namespace {

struct World {
  RoadNetwork net;
  CovarianceModel cov;
  TripDataset ds;
  std::vector<Route> queries;
};

// One world per (p, N), built on first use.
const World& world(int p, int n_trips) {
  static std::map<std::pair<int, int>, std::unique_ptr<World>> cache;
  auto& slot = cache[{p, n_trips}];
  if (!slot) {
    auto net = RoadNetwork::build_grid(p);
    auto cov = diffusion_covariance(segment_graph(net), 1.0, 1.0, 1.0);
    const ODLaw law{1.0, p};
    Rng rng(1);
    std::vector<Route> trips;
    for (int n = 0; n < n_trips; ++n) trips.push_back(sample_route(law, net, rng));
    std::vector<Route> queries;
    for (int q = 0; q < 32; ++q) queries.push_back(sample_route(law, net, rng));
    TripDataset ds(net.segment_count(), std::move(trips));
    slot = std::make_unique<World>(World{std::move(net), std::move(cov), std::move(ds), std::move(queries)});
  }
  return *slot;
}

const PriorSpec kPrior{1.0, 0.5};

void BM_DiffusionCovariance(benchmark::State& state) {
  const auto net = RoadNetwork::build_grid(static_cast<int>(state.range(0)));
  const auto g = segment_graph(net);
  for (auto _ : state) benchmark::DoNotOptimize(diffusion_covariance(g, 1.0, 1.0, 1.0));
}
BENCHMARK(BM_DiffusionCovariance)->Arg(5)->Arg(10)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_SampleRoutes(benchmark::State& state) {
  const auto net = RoadNetwork::build_grid(20);
  const ODLaw law{1.0, 20};
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(sample_route(law, net, rng));
}
BENCHMARK(BM_SampleRoutes);

void BM_DatasetIndex(benchmark::State& state) {
  const auto& w = world(15, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(TripDataset(w.net.segment_count(), w.ds.routes()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DatasetIndex)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Counters(benchmark::State& state) {
  const auto& w = world(15, static_cast<int>(state.range(0)));
  std::size_t q = 0;
  for (auto _ : state) {
    const auto& y = w.queries[q++ % w.queries.size()];
    const auto nb = resolve_neighborhood(w.ds, y, NeighborhoodSpec::od_ball(2), 15);
    benchmark::DoNotOptimize(counters(w.ds, y, &nb));
  }
}
BENCHMARK(BM_Counters)->Arg(1000)->Arg(10000);

void BM_RiskSimpleSegment(benchmark::State& state) {
  const auto& w = world(15, static_cast<int>(state.range(0)));
  const EstimatorSpec spec{EstimatorFamily::kSegment, WeightRule::ratio(1.0), {}, {}};
  std::size_t q = 0;
  for (auto _ : state) benchmark::DoNotOptimize(risk(spec, w.ds, w.queries[q++ % w.queries.size()], w.cov, kPrior, 15));
}
BENCHMARK(BM_RiskSimpleSegment)->Arg(1000)->Arg(10000);

void BM_RiskOptimalSegment(benchmark::State& state) {
  const auto& w = world(15, static_cast<int>(state.range(0)));
  const EstimatorSpec spec{EstimatorFamily::kSegment, WeightRule::optimal(), {}, {}};
  std::size_t q = 0;
  for (auto _ : state) benchmark::DoNotOptimize(risk(spec, w.ds, w.queries[q++ % w.queries.size()], w.cov, kPrior, 15));
}
BENCHMARK(BM_RiskOptimalSegment)->Arg(1000)->Arg(10000);

void BM_RiskOptimalRoute(benchmark::State& state) {
  const auto& w = world(15, static_cast<int>(state.range(0)));
  const EstimatorSpec spec{EstimatorFamily::kRoute, WeightRule::optimal(), {}, NeighborhoodSpec::od_ball(2)};
  std::size_t q = 0;
  for (auto _ : state) benchmark::DoNotOptimize(risk(spec, w.ds, w.queries[q++ % w.queries.size()], w.cov, kPrior, 15));
}
BENCHMARK(BM_RiskOptimalRoute)->Arg(1000)->Arg(10000);

void BM_PosteriorBuild(benchmark::State& state) {
  const auto& w = world(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(PosteriorSystem(w.ds, w.cov, kPrior));
}
BENCHMARK(BM_PosteriorBuild)->Args({10, 1000})->Args({15, 3375})->Unit(benchmark::kMillisecond);

void BM_RiskBayesOptimal(benchmark::State& state) {
  const auto& w = world(15, 3375);
  const PosteriorSystem sys(w.ds, w.cov, kPrior);
  std::size_t q = 0;
  for (auto _ : state) benchmark::DoNotOptimize(risk_optimal(sys, w.queries[q++ % w.queries.size()]));
}
BENCHMARK(BM_RiskBayesOptimal);

void BM_LowerBound(benchmark::State& state) {
  const auto& w = world(15, 3375);
  const auto& precision = w.cov.precision();
  std::size_t q = 0;
  for (auto _ : state) {
    const auto& y = w.queries[q++ % w.queries.size()];
    benchmark::DoNotOptimize(lower_bound(counters(w.ds, y), precision, kPrior));
  }
}
BENCHMARK(BM_LowerBound);

void BM_MonteCarloReplicate(benchmark::State& state) {
  const auto& w = world(10, 1000);
  const EstimatorSpec spec{EstimatorFamily::kSegment, WeightRule::ratio(1.0), {}, {}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc_risk(spec, w.ds.routes(), w.cov, kPrior, w.queries[0], 10, 100, 7, 1));
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_MonteCarloReplicate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
