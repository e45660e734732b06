#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "etalab/covariance.hpp"
#include "etalab/trips.hpp"

namespace etalab {

enum class WeightKind { kRatio, kThreshold, kIndepOptimal, kOptimal };

/// Shrinkage weight phi(n) applied to a sample mean over n observations.
/// Every rule has phi(0) = 0.
struct WeightRule {
  WeightKind kind = WeightKind::kOptimal;
  /// lambda for kRatio, c for kThreshold.
  double param = 0.0;

  static WeightRule ratio(double lambda);
  static WeightRule threshold(double c);
  static WeightRule indep_optimal() { return {WeightKind::kIndepOptimal, 0.0}; }
  static WeightRule optimal() { return {WeightKind::kOptimal, 0.0}; }

  /// Rules that depend only on n (kRatio, kThreshold).
  double operator()(int n) const;
  std::string describe() const;
};

/// Ordered contiguous super-segments whose concatenation is the route.
struct Partition {
  std::vector<std::vector<SegmentIndex>> units;

  static Partition singletons(const Route& y);
  static Partition whole(const Route& y);
  /// Consecutive blocks of the given sizes.
  static Partition from_sizes(const Route& y, std::span<const int> sizes);

  std::size_t size() const { return units.size(); }
  /// Throws InvalidArgument unless the units are non-empty and concatenate to y.
  void validate(const Route& y) const;
};

/// N_S and N_{S u T} over the units of a partition.
struct UnitCounters {
  std::vector<int> n;
  Eigen::MatrixXi n_pair;
};

UnitCounters unit_counters(const TripDataset& ds, const Partition& partition);

struct UnitTerm {
  std::vector<SegmentIndex> unit;
  int sample_size = 0;
  double weight = 0.0;
  /// Mean over contributing trips of the unit's summed times (0 when none).
  double sample_mean = 0.0;
};

struct ObservationCoefficient {
  int trip = 0;
  SegmentIndex segment = 0;
  /// Position of the segment within the trip's route.
  int position = 0;
  double coefficient = 0.0;
};

struct Prediction {
  double value = 0.0;
  /// Per-unit decomposition for the shrinkage families.
  std::vector<UnitTerm> terms;
  /// Per-observation coefficients and intercept for the Bayes-optimal estimator.
  std::vector<ObservationCoefficient> coefficients;
  double intercept = 0.0;
};

/// Weights of a generalized segment estimator for each unit of the partition.
/// kIndepOptimal and kOptimal need the covariance.
std::vector<double> unit_weights(const UnitCounters& counts, const Partition& partition, const WeightRule& rule,
                                 const CovarianceModel* cov, const PriorSpec& prior);

/// Solves sum_T N_{SuT}/(N_S N_T) sigma(S,T) phi_T + |S| tau2 phi_S = |S| tau2
/// over units with N_S > 0; the rest get 0.
std::vector<double> optimal_seg_weights(const UnitCounters& counts, const Partition& partition,
                                        const CovarianceModel& cov, const PriorSpec& prior);

/// Max-abs residual of the optimal-weight system for the given weights.
double optimal_system_residual(const UnitCounters& counts, const Partition& partition,
                               std::span<const double> weights, const CovarianceModel& cov,
                               const PriorSpec& prior);

Prediction predict_segment(const TripDataset& ds, const Route& y, const WeightRule& rule, const PriorSpec& prior,
                           const CovarianceModel* cov = nullptr);
Prediction predict_gseg(const TripDataset& ds, const Route& y, const Partition& partition, const WeightRule& rule,
                        const PriorSpec& prior, const CovarianceModel* cov = nullptr);

/// Neighborhood counts for a route-based estimator, plus
/// sum over member trips of sum_{s,t in y_n} sigma(s, t).
struct NeighborhoodSummary {
  RouteCounters counts;
  double member_sigma_sum = 0.0;
  /// sum_{s,t in y} sigma(s, t).
  double route_sigma_sum = 0.0;
};

NeighborhoodSummary summarize_neighborhood(const TripDataset& ds, const Route& y, const Neighborhood& nbhd,
                                           const CovarianceModel* cov);

/// Closed-form risk-minimizing route weight; 0 when the neighborhood is empty.
double optimal_route_weight(const NeighborhoodSummary& summary, const PriorSpec& prior);
double route_weight(const NeighborhoodSummary& summary, const WeightRule& rule, const PriorSpec& prior);

Prediction predict_route(const TripDataset& ds, const Route& y, const Neighborhood& nbhd, const WeightRule& rule,
                         const PriorSpec& prior, const CovarianceModel* cov = nullptr);

/// Posterior of theta given the historical routes under the Gaussian model.
/// Holds Q = U^T Phi^{-1} U + I / tau2 as a Cholesky factor; the data part
/// H = U^T Phi^{-1} U is accumulated trip by trip.
class PosteriorSystem {
 public:
  PosteriorSystem(const TripDataset& routes, const CovarianceModel& cov, const PriorSpec& prior);

  /// w = Q^{-1} e_y.
  Eigen::VectorXd route_weights(const Route& y) const;
  const Eigen::MatrixXd& information() const { return information_; }
  const PriorSpec& prior() const { return prior_; }
  std::size_t trip_count() const { return routes_.size(); }

  /// Coefficients on every observed T'_{n,s} and the intercept.
  Prediction linear_form(const Route& y) const;
  /// Applies the linear form to a dataset with the same routes.
  Prediction predict(const TripDataset& ds, const Route& y) const;

 private:
  std::vector<Route> routes_;
  std::shared_ptr<const CovarianceModel> cov_;
  PriorSpec prior_;
  Eigen::MatrixXd information_;
  Eigen::LLT<Eigen::MatrixXd> q_factor_;
};

Prediction predict_bayes_optimal(const TripDataset& ds, const Route& y, const CovarianceModel& cov,
                                 const PriorSpec& prior);

/// Evaluates a linear form (coefficients + intercept) on a dataset.
double apply_linear_form(const Prediction& form, const TripDataset& ds);

enum class EstimatorFamily { kSegment, kGeneralizedSegment, kRoute, kBayesOptimal };

std::string to_string(EstimatorFamily family);

/// Which estimator to evaluate and with what parameters.
struct EstimatorSpec {
  EstimatorFamily family = EstimatorFamily::kSegment;
  WeightRule rule = WeightRule::optimal();
  /// Block sizes for kGeneralizedSegment; empty means the whole route.
  std::vector<int> partition_sizes;
  NeighborhoodSpec neighborhood;

  std::string label() const;
};

Partition partition_for(const EstimatorSpec& spec, const Route& y);

Prediction predict(const EstimatorSpec& spec, const TripDataset& ds, const Route& y, const CovarianceModel& cov,
                   const PriorSpec& prior, int grid_size);

/// Every estimator is affine in the observed times once the routes are
/// fixed. Returns that form (coefficients + intercept) for the routes of ds;
/// times in ds are not read.
Prediction linear_form(const EstimatorSpec& spec, const TripDataset& routes, const Route& y,
                       const CovarianceModel& cov, const PriorSpec& prior, int grid_size);

}  // namespace etalab
