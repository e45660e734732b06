#pragma once

// Hand-rolled generators for small random worlds: a grid, a handful of
// sampled trips, a predicting route and a covariance of the requested shape.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "etalab/covariance.hpp"
#include "etalab/network.hpp"
#include "etalab/random.hpp"
#include "etalab/trips.hpp"

namespace etalab::testing {

enum class SigmaShape {
  kNonnegative,  // elementwise >= 0, positive definite
  kGeneral,      // mixed signs, positive definite
  kDiagonal,
};

struct RandomWorld {
  RoadNetwork net;
  TripDataset ds;
  Route y;
  CovarianceModel cov;
  PriorSpec prior;
};

inline Eigen::MatrixXd random_sigma(std::size_t m, SigmaShape shape, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd sigma(n, n);
  switch (shape) {
    case SigmaShape::kDiagonal: {
      sigma.setZero();
      for (Eigen::Index k = 0; k < n; ++k) sigma(k, k) = 0.1 + 3.0 * unit(rng);
      break;
    }
    case SigmaShape::kNonnegative:
    case SigmaShape::kGeneral: {
      const double lo = shape == SigmaShape::kNonnegative ? 0.0 : -1.0;
      std::uniform_real_distribution<double> entry(lo, 1.0);
      // A few latent factors give strong, structured correlation.
      const Eigen::Index k = 1 + static_cast<Eigen::Index>(unit(rng) * 4);
      Eigen::MatrixXd F(n, k);
      for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) F(r, c) = entry(rng);
      }
      const double scale = 0.2 + 2.0 * unit(rng);
      sigma = scale * F * F.transpose() / static_cast<double>(k);
      const double white = 0.05 + unit(rng);
      sigma.diagonal().array() += white;
      break;
    }
  }
  return 0.5 * (sigma + sigma.transpose());
}

/// Small world for property checks: p in {2,3,4}, up to max_trips trips.
/// Half the time the predicting route copies a historical route.
inline RandomWorld random_world(std::uint64_t seed, SigmaShape shape, int max_trips = 20, bool with_times = false) {
  Rng rng(seed);
  std::uniform_int_distribution<int> grid(2, 4);
  const int p = grid(rng);
  auto net = RoadNetwork::build_grid(p);
  const double alphas[] = {0.3, 1.0, 3.0};
  const ODLaw law{alphas[std::uniform_int_distribution<int>(0, 2)(rng)], p};
  const int n_trips = std::uniform_int_distribution<int>(0, max_trips)(rng);
  std::vector<Route> trips;
  for (int n = 0; n < n_trips; ++n) trips.push_back(sample_route(law, net, rng));
  Route y = sample_route(law, net, rng);
  if (!trips.empty() && std::bernoulli_distribution(0.5)(rng)) {
    y = trips[std::uniform_int_distribution<std::size_t>(0, trips.size() - 1)(rng)];
  }
  CovarianceModel cov(random_sigma(net.segment_count(), shape, rng), "random");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const PriorSpec prior{3.0 * unit(rng), 0.1 + 2.0 * unit(rng)};
  TripDataset ds = with_times ? TripSampler(trips, cov).draw(prior, rng) : TripDataset(net.segment_count(), trips);
  return {std::move(net), std::move(ds), std::move(y), std::move(cov), prior};
}

}  // namespace etalab::testing
