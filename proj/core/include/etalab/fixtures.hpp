#pragma once

#include <string>
#include <vector>

#include "etalab/covariance.hpp"
#include "etalab/estimators.hpp"
#include "etalab/network.hpp"
#include "etalab/trips.hpp"

// The 3x3 grid world used by the worked examples: six historical trips and
// two predicting routes.
namespace etalab::fixtures {

RoadNetwork example_network();

/// Trips 1..6 (ids 0..5).
std::vector<Route> example_trips(const RoadNetwork& net);
TripDataset example_dataset(const RoadNetwork& net);

/// (1,0) -> (1,1) -> (1,2), segments s1 and s2.
Route example_route(const RoadNetwork& net);
/// (1,2) -> (1,3) -> (2,3) -> (3,3), segments s3, s4, s5.
Route example_long_route(const RoadNetwork& net);

/// Trips 4 and 5 as listed for the OD-ball neighborhood of example_route.
std::vector<int> example_ball_members();

/// Unit-scale diffusion kernel exp(-L) without white noise.
CovarianceModel diffusion_example_covariance(const RoadNetwork& net,
                                             AdjacencyRule rule = AdjacencyRule::kUndirectedEdgeIncidence);
/// sigma^2 = 1 on s1 and s2, cross-covariance -0.9; unit diagonal elsewhere.
CovarianceModel negative_pair_covariance(const RoadNetwork& net);
/// sigma^2 = 0.1, 10, 10 on s3, s4, s5 with sigma(s3, s4) = 1; unit diagonal elsewhere.
CovarianceModel long_route_covariance(const RoadNetwork& net);

inline PriorSpec diffusion_example_prior() { return {1.0, 0.2}; }
inline PriorSpec unit_prior() { return {1.0, 1.0}; }

/// A closed-form golden risk together with everything needed to re-derive it
/// by Monte Carlo.
struct GoldenFixture {
  std::string name;
  std::vector<Route> routes;
  Route route;
  CovarianceModel cov;
  PriorSpec prior;
  EstimatorSpec spec;
  double printed_total = 0.0;
};

std::vector<GoldenFixture> golden_fixtures(AdjacencyRule rule = AdjacencyRule::kUndirectedEdgeIncidence);
const GoldenFixture& find_fixture(const std::vector<GoldenFixture>& all, const std::string& name);

}  // namespace etalab::fixtures
