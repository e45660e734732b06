#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "etalab/covariance.hpp"
#include "etalab/estimators.hpp"
#include "etalab/trips.hpp"

namespace etalab {

/// Integrated risk split into expected variance and expected squared bias.
struct RiskReport {
  double variance = 0.0;
  double bias2 = 0.0;
  double total = 0.0;

  static RiskReport of(double variance, double bias2) { return {variance, bias2, variance + bias2}; }
};

/// Generalized segment estimator risk given the routes only:
/// variance = sum_{S,T} N_{SuT}/(N_S N_T) phi_S phi_T sigma(S,T) (0/0 = 0),
/// bias2 = sum_S (1 - phi_S)^2 |S| tau2.
RiskReport risk_gseg(const Partition& partition, std::span<const double> weights, const UnitCounters& counts,
                     const CovarianceModel& cov, const PriorSpec& prior);

struct RouteRiskBreakdown {
  double variance = 0.0;
  /// (phi (ybar - |y|) mu)^2.
  double length_bias = 0.0;
  /// Segments traversed by the neighborhood but not on y.
  double off_route_bias = 0.0;
  /// Segments of y.
  double shrinkage_bias = 0.0;
};

RiskReport risk_route(const NeighborhoodSummary& summary, double phi, const PriorSpec& prior,
                      RouteRiskBreakdown* breakdown = nullptr);

/// Risk of the Bayes-optimal estimator: w^T H w + |w|^2 / tau2 with w = Q^{-1} e_y.
RiskReport risk_optimal(const PosteriorSystem& system, const Route& y);
RiskReport risk_optimal(const TripDataset& routes, const CovarianceModel& cov, const PriorSpec& prior,
                        const Route& y);

/// |y|^2 / (sum_{s,t in y} N_{sut} psi_{s,t} + |y| / tau2), psi the full-network precision.
double lower_bound(const RouteCounters& counts, const Eigen::MatrixXd& precision, const PriorSpec& prior);
double lower_bound(const TripDataset& routes, const Route& y, const CovarianceModel& cov, const PriorSpec& prior);

/// Closed-form risk of any estimator family.
RiskReport risk(const EstimatorSpec& spec, const TripDataset& routes, const Route& y, const CovarianceModel& cov,
                const PriorSpec& prior, int grid_size);

struct McResult {
  double mean = 0.0;
  double std_error = 0.0;
  int replicates = 0;
};

/// Maps a freshly drawn dataset (fixed routes) to a prediction.
using Estimator = std::function<double(const TripDataset&)>;

/// Monte-Carlo integrated risk: each replicate draws fresh theta and noise
/// for the fixed routes and records (prediction - sum_{s in y} theta_s)^2.
/// Replicate r uses a seed derived from (seed, r), so results do not depend
/// on the thread count.
McResult mc_risk(const Estimator& estimator, const std::vector<Route>& routes, const CovarianceModel& cov,
                 const PriorSpec& prior, const Route& y, int replicates, std::uint64_t seed, int threads = 1);
McResult mc_risk(const EstimatorSpec& spec, const std::vector<Route>& routes, const CovarianceModel& cov,
                 const PriorSpec& prior, const Route& y, int grid_size, int replicates, std::uint64_t seed,
                 int threads = 1);

/// N_{sut} N_s^d N_t^d <= N_{sut}^d N_s N_t for all s, t in y.
bool check_nb_condition(const RouteCounters& counts);

struct DominanceReport {
  RiskReport seg;
  RiskReport gseg_whole;
  RiskReport route;
  RiskReport route_exact;
  bool sigma_nonnegative = false;
  bool sigma_nonnegative_on_route = false;
  bool nb_condition = false;
  /// R(seg*) <= R(route*); only required when sigma >= 0 and nb_condition.
  bool seg_le_route = false;
  /// R(seg*) <= R(gseg*, whole) <= R(route*, exact); required when sigma >= 0 on y.
  bool chain = false;
  /// Inequalities that failed although their preconditions held.
  std::vector<std::string> violations;
  /// Inequalities that failed with a violated precondition (allowed).
  std::vector<std::string> exceptions;
};

/// Compares the optimal segment, whole-route generalized segment and route
/// estimators on one fixture.
DominanceReport dominance_audit(const TripDataset& routes, const Route& y, const Neighborhood& nbhd,
                                const CovarianceModel& cov, const PriorSpec& prior, double slack = 1e-9);

}  // namespace etalab
