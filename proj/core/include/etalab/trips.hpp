#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "etalab/covariance.hpp"
#include "etalab/network.hpp"
#include "etalab/random.hpp"

namespace etalab {

/// Ordered chain of distinct segments from origin to destination.
struct Route {
  std::vector<SegmentIndex> segments;
  Vertex origin;
  Vertex destination;

  std::size_t size() const { return segments.size(); }
  bool contains(SegmentIndex s) const;
  bool operator==(const Route&) const = default;
};

/// Builds a route from a vertex path (at least two vertices).
Route route_from_path(const RoadNetwork& net, std::span<const Vertex> path);
/// Throws InvalidArgument unless the route is non-empty, chains head to
/// tail, has distinct segments and matching endpoints.
void validate_route(const RoadNetwork& net, const Route& route);

/// Symmetric beta-binomial law on each coordinate of origins and
/// destinations: P[k] = C(p, k) B(alpha + k, alpha + p - k) / B(alpha, alpha).
struct ODLaw {
  double alpha = 1.0;
  int p = 1;

  void validate() const;
  std::vector<double> coordinate_pmf() const;
};

double od_pmf(const ODLaw& law, int coord);

/// Every route from origin to destination with length equal to the L1
/// distance and the minimum number of turns (one straight route when the
/// endpoints share a row or column, otherwise the two single-turn routes).
std::vector<Route> min_turn_routes(const RoadNetwork& net, Vertex origin, Vertex destination);

/// Draws origin and destination independently from the law (resampling
/// when equal, at most 10^6 times) and picks one min-turn route uniformly.
Route sample_route(const ODLaw& law, const RoadNetwork& net, Rng& rng);

/// Historical trips: routes, optional adjusted times T' and optional true
/// segment effects theta, plus an inverted segment -> trip index used for
/// every count N_s, N_{s u t} and N_S.
class TripDataset {
 public:
  TripDataset() = default;
  /// Routes only; risk formulas need nothing else.
  TripDataset(std::size_t segment_count, std::vector<Route> routes);
  TripDataset(std::size_t segment_count, std::vector<Route> routes, std::vector<std::vector<double>> times,
              std::vector<double> theta = {});

  std::size_t size() const { return routes_.size(); }
  bool empty() const { return routes_.empty(); }
  std::size_t segment_count() const { return trips_by_segment_.size(); }
  const std::vector<Route>& routes() const { return routes_; }
  const Route& route(std::size_t n) const { return routes_.at(n); }

  bool has_times() const { return !times_.empty() || routes_.empty(); }
  const std::vector<std::vector<double>>& times() const { return times_; }
  std::span<const double> times(std::size_t n) const { return times_.at(n); }
  /// True segment effects, when the dataset was synthesized.
  std::span<const double> theta() const { return theta_; }

  /// Sorted ids of the trips traversing s.
  std::span<const int> trips_through(SegmentIndex s) const;
  /// N_s.
  int traversals(SegmentIndex s) const { return static_cast<int>(trips_through(s).size()); }
  /// N_{s u t}: trips traversing both s and t (N_{s u s} = N_s).
  int co_traversals(SegmentIndex s, SegmentIndex t) const;
  /// Sorted ids of the trips whose segment set contains every segment of S.
  std::vector<int> trips_containing(std::span<const SegmentIndex> S) const;
  int containing_count(std::span<const SegmentIndex> S) const {
    return static_cast<int>(trips_containing(S).size());
  }

  /// Position of segment s within trip n's route, or -1.
  int position_in_trip(std::size_t n, SegmentIndex s) const;

 private:
  void index();

  std::vector<Route> routes_;
  std::vector<std::vector<double>> times_;
  std::vector<double> theta_;
  std::vector<std::vector<int>> trips_by_segment_;
};

/// Sparse table of N_{s u t} over every co-traversed pair s <= t.
class SparsePairCounts {
 public:
  explicit SparsePairCounts(const TripDataset& ds);
  int operator()(SegmentIndex s, SegmentIndex t) const;
  std::size_t nonzero_pairs() const { return counts_.size(); }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [k, v] : counts_) f(static_cast<SegmentIndex>(k >> 32), static_cast<SegmentIndex>(k & 0xffffffffu), v);
  }

 private:
  static std::uint64_t key(SegmentIndex s, SegmentIndex t);
  std::unordered_map<std::uint64_t, int> counts_;
};

/// Draws adjusted travel times for a fixed set of routes. Per-route noise
/// factors are computed once so repeated draws (Monte Carlo) are cheap.
class TripSampler {
 public:
  TripSampler(std::vector<Route> routes, const CovarianceModel& cov);

  /// theta ~ N(mu, tau2) iid per segment, then eps_n ~ N(0, Sigma_{y_n}).
  TripDataset draw(const PriorSpec& prior, Rng& rng) const;
  /// Same, with the segment effects supplied by the caller.
  TripDataset draw_given(std::vector<double> theta, Rng& rng) const;

  const std::vector<Route>& routes() const { return routes_; }

 private:
  std::size_t segment_count_;
  std::vector<Route> routes_;
  // Identical routes share one factor.
  std::vector<Eigen::MatrixXd> factors_;
  std::vector<std::size_t> factor_of_trip_;
};

TripDataset synthesize_times(std::vector<Route> routes, const CovarianceModel& cov, const PriorSpec& prior,
                             Rng& rng);

enum class NeighborhoodKind {
  kExactRoute,     // y_n == y
  kOdExact,        // same origin and destination
  kOdBall,         // both endpoints within L1 radius c
  kOdBallGrowing,  // radius ceil(fraction * p)
  kExplicit,       // caller-supplied member list
};

struct NeighborhoodSpec {
  NeighborhoodKind kind = NeighborhoodKind::kExactRoute;
  int radius = 0;
  double fraction = 0.1;
  std::vector<int> members;

  static NeighborhoodSpec exact_route() { return with(NeighborhoodKind::kExactRoute); }
  static NeighborhoodSpec od_exact() { return with(NeighborhoodKind::kOdExact); }
  static NeighborhoodSpec od_ball(int c) {
    auto s = with(NeighborhoodKind::kOdBall);
    s.radius = c;
    return s;
  }
  static NeighborhoodSpec od_ball_growing(double fraction) {
    auto s = with(NeighborhoodKind::kOdBallGrowing);
    s.fraction = fraction;
    return s;
  }
  static NeighborhoodSpec explicit_members(std::vector<int> ids) {
    auto s = with(NeighborhoodKind::kExplicit);
    s.members = std::move(ids);
    return s;
  }

 private:
  static NeighborhoodSpec with(NeighborhoodKind k) {
    NeighborhoodSpec s;
    s.kind = k;
    return s;
  }
};

struct Neighborhood {
  NeighborhoodKind kind = NeighborhoodKind::kExactRoute;
  int radius = 0;
  /// Sorted trip ids; may be empty.
  std::vector<int> members;
};

/// ceil(fraction * p), guarded against floating-point overshoot.
int growing_radius(double fraction, int grid_size);

Neighborhood resolve_neighborhood(const TripDataset& ds, const Route& y, const NeighborhoodSpec& spec,
                                  int grid_size);

/// Every count the estimators and risk formulas consume for a route y.
struct RouteCounters {
  std::vector<SegmentIndex> route;
  /// N_s for s in y (route order).
  std::vector<int> n;
  /// N_{s u t} for s, t in y.
  Eigen::MatrixXi n_pair;

  bool has_neighborhood = false;
  /// M_delta.
  int members = 0;
  /// N_s^delta for s in y.
  std::vector<int> nbhd_n;
  /// N_{s u t}^delta for s, t in y.
  Eigen::MatrixXi nbhd_pair;
  /// S_delta with N_s^delta, sorted by segment.
  std::vector<std::pair<SegmentIndex, int>> nbhd_segments;
  /// y-bar_delta (0 when empty).
  double mean_length = 0.0;
};

RouteCounters counters(const TripDataset& ds, const Route& y, const Neighborhood* nbhd = nullptr);

/// N_S^delta: member trips containing every segment of S.
int neighborhood_containing_count(const TripDataset& ds, const Neighborhood& nbhd,
                                  std::span<const SegmentIndex> S);

}  // namespace etalab
