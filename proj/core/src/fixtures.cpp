#include "etalab/fixtures.hpp"

#include "etalab/error.hpp"

namespace etalab::fixtures {

namespace {

Route path(const RoadNetwork& net, std::initializer_list<Vertex> vs) {
  const std::vector<Vertex> v(vs);
  return route_from_path(net, v);
}

}  // namespace

RoadNetwork example_network() { return RoadNetwork::build_grid(3); }

std::vector<Route> example_trips(const RoadNetwork& net) {
  return {
      path(net, {{1, 0}, {1, 1}, {2, 1}, {3, 1}}),
      path(net, {{1, 1}, {1, 2}, {2, 2}, {3, 2}}),
      path(net, {{1, 1}, {1, 2}, {1, 3}, {2, 3}}),
      path(net, {{1, 0}, {1, 1}, {1, 2}}),
      path(net, {{1, 0}, {1, 1}, {0, 1}}),
      path(net, {{1, 3}, {2, 3}, {3, 3}}),
  };
}

TripDataset example_dataset(const RoadNetwork& net) { return TripDataset(net.segment_count(), example_trips(net)); }

Route example_route(const RoadNetwork& net) { return path(net, {{1, 0}, {1, 1}, {1, 2}}); }

Route example_long_route(const RoadNetwork& net) { return path(net, {{1, 2}, {1, 3}, {2, 3}, {3, 3}}); }

std::vector<int> example_ball_members() { return {3, 4}; }

CovarianceModel diffusion_example_covariance(const RoadNetwork& net, AdjacencyRule rule) {
  return diffusion_covariance(segment_graph(net, rule), 1.0, 1.0, 0.0);
}

CovarianceModel negative_pair_covariance(const RoadNetwork& net) {
  const auto y = example_route(net);
  const SegmentIndex s1 = y.segments[0];
  const SegmentIndex s2 = y.segments[1];
  const std::vector<CovarianceEntry> e{{s1, s1, 1.0}, {s2, s2, 1.0}, {s1, s2, -0.9}};
  return explicit_covariance(net.segment_count(), e, 1.0);
}

CovarianceModel long_route_covariance(const RoadNetwork& net) {
  const auto y = example_long_route(net);
  const SegmentIndex s3 = y.segments[0];
  const SegmentIndex s4 = y.segments[1];
  const SegmentIndex s5 = y.segments[2];
  const std::vector<CovarianceEntry> e{{s3, s3, 0.1}, {s4, s4, 10.0}, {s5, s5, 10.0}, {s3, s4, 1.0}};
  return explicit_covariance(net.segment_count(), e, 1.0);
}

std::vector<GoldenFixture> golden_fixtures(AdjacencyRule rule) {
  const auto net = example_network();
  const auto trips = example_trips(net);
  const auto y = example_route(net);
  const auto y_long = example_long_route(net);
  const auto diffusion = diffusion_example_covariance(net, rule);
  const auto negative = negative_pair_covariance(net);
  const auto long_cov = long_route_covariance(net);

  EstimatorSpec seg{EstimatorFamily::kSegment, WeightRule::optimal(), {}, {}};
  EstimatorSpec whole{EstimatorFamily::kGeneralizedSegment, WeightRule::optimal(), {}, {}};
  EstimatorSpec split{EstimatorFamily::kGeneralizedSegment, WeightRule::optimal(), {1, 2}, {}};
  EstimatorSpec ball{EstimatorFamily::kRoute, WeightRule::optimal(), {},
                     NeighborhoodSpec::explicit_members(example_ball_members())};
  EstimatorSpec exact{EstimatorFamily::kRoute, WeightRule::optimal(), {}, NeighborhoodSpec::exact_route()};
  EstimatorSpec bayes{EstimatorFamily::kBayesOptimal, WeightRule::optimal(), {}, {}};

  const auto d_prior = diffusion_example_prior();
  const auto u_prior = unit_prior();
  return {
      {"diffusion-bayes", trips, y, diffusion, d_prior, bayes, 0.172},
      {"diffusion-seg", trips, y, diffusion, d_prior, seg, 0.176},
      {"diffusion-gseg-whole", trips, y, diffusion, d_prior, whole, 0.293},
      {"diffusion-route-ball", trips, y, diffusion, d_prior, ball, 0.288},
      {"negative-seg", trips, y, negative, u_prior, seg, 0.378},
      {"negative-route-exact", trips, y, negative, u_prior, exact, 0.182},
      {"long-seg", trips, y_long, long_cov, u_prior, seg, 1.948},
      {"long-gseg-split", trips, y_long, long_cov, u_prior, split, 1.909},
  };
}

const GoldenFixture& find_fixture(const std::vector<GoldenFixture>& all, const std::string& name) {
  for (const auto& f : all) {
    if (f.name == name) return f;
  }
  std::string known;
  for (const auto& f : all) known += (known.empty() ? "" : ", ") + f.name;
  throw InvalidArgument("unknown fixture '" + name + "' (known: " + known + ")");
}

}  // namespace etalab::fixtures
