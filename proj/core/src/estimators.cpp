#include "etalab/estimators.hpp"

#include <cmath>
#include <sstream>

#include "etalab/error.hpp"

namespace etalab {

namespace {

const CovarianceModel& need(const CovarianceModel* cov, const char* what) {
  if (cov == nullptr) throw InvalidArgument(std::string(what) + " needs a covariance model");
  return *cov;
}

std::vector<SegmentIndex> merged(const std::vector<SegmentIndex>& a, const std::vector<SegmentIndex>& b) {
  std::vector<SegmentIndex> out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Mean over the given trips of the summed times on `unit`.
double unit_sample_mean(const TripDataset& ds, std::span<const int> trips, const std::vector<SegmentIndex>& unit) {
  if (trips.empty()) return 0.0;
  if (!ds.has_times()) throw InvalidArgument("dataset has no travel times");
  double total = 0.0;
  for (int n : trips) {
    const auto times = ds.times(static_cast<std::size_t>(n));
    for (SegmentIndex s : unit) total += times[static_cast<std::size_t>(ds.position_in_trip(n, s))];
  }
  return total / static_cast<double>(trips.size());
}

}  // namespace

WeightRule WeightRule::ratio(double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("ratio weight needs lambda > 0");
  return {WeightKind::kRatio, lambda};
}

WeightRule WeightRule::threshold(double c) {
  if (!(c > 0.0)) throw InvalidArgument("threshold weight needs c > 0");
  return {WeightKind::kThreshold, c};
}

double WeightRule::operator()(int n) const {
  if (n <= 0) return 0.0;
  switch (kind) {
    case WeightKind::kRatio:
      return n / (n + param);
    case WeightKind::kThreshold:
      return n >= param ? 1.0 : 0.0;
    default:
      throw InvalidArgument("weight rule " + describe() + " depends on more than the sample size");
  }
}

std::string WeightRule::describe() const {
  std::ostringstream os;
  switch (kind) {
    case WeightKind::kRatio:
      os << "ratio(" << param << ")";
      break;
    case WeightKind::kThreshold:
      os << "threshold(" << param << ")";
      break;
    case WeightKind::kIndepOptimal:
      os << "indep_optimal";
      break;
    case WeightKind::kOptimal:
      os << "optimal";
      break;
  }
  return os.str();
}

Partition Partition::singletons(const Route& y) {
  Partition p;
  for (SegmentIndex s : y.segments) p.units.push_back({s});
  return p;
}

Partition Partition::whole(const Route& y) {
  Partition p;
  p.units.push_back(y.segments);
  return p;
}

Partition Partition::from_sizes(const Route& y, std::span<const int> sizes) {
  Partition p;
  std::size_t at = 0;
  for (int k : sizes) {
    if (k <= 0) throw InvalidArgument("super-segment sizes must be positive");
    if (at + static_cast<std::size_t>(k) > y.size()) throw InvalidArgument("super-segment sizes exceed the route");
    p.units.emplace_back(y.segments.begin() + static_cast<std::ptrdiff_t>(at),
                         y.segments.begin() + static_cast<std::ptrdiff_t>(at + k));
    at += static_cast<std::size_t>(k);
  }
  p.validate(y);
  return p;
}

void Partition::validate(const Route& y) const {
  std::size_t at = 0;
  for (const auto& u : units) {
    if (u.empty()) throw InvalidArgument("partition has an empty super-segment");
    for (SegmentIndex s : u) {
      if (at >= y.size() || y.segments[at] != s) {
        throw InvalidArgument("partition units must be consecutive pieces of the route");
      }
      ++at;
    }
  }
  if (at != y.size()) throw InvalidArgument("partition does not cover the route");
}

UnitCounters unit_counters(const TripDataset& ds, const Partition& partition) {
  const auto k = static_cast<Eigen::Index>(partition.size());
  UnitCounters c;
  c.n.resize(partition.size());
  c.n_pair.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto& S = partition.units[static_cast<std::size_t>(a)];
    c.n[static_cast<std::size_t>(a)] = ds.containing_count(S);
    c.n_pair(a, a) = c.n[static_cast<std::size_t>(a)];
    for (Eigen::Index b = a + 1; b < k; ++b) {
      const int v = ds.containing_count(merged(S, partition.units[static_cast<std::size_t>(b)]));
      c.n_pair(a, b) = v;
      c.n_pair(b, a) = v;
    }
  }
  return c;
}

std::vector<double> optimal_seg_weights(const UnitCounters& counts, const Partition& partition,
                                        const CovarianceModel& cov, const PriorSpec& prior) {
  prior.validate();
  std::vector<Eigen::Index> active;
  for (std::size_t a = 0; a < partition.size(); ++a) {
    if (counts.n[a] > 0) active.push_back(static_cast<Eigen::Index>(a));
  }
  std::vector<double> phi(partition.size(), 0.0);
  if (active.empty()) return phi;

  const auto k = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd A(k, k);
  Eigen::VectorXd b(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto S = static_cast<std::size_t>(active[static_cast<std::size_t>(i)]);
    const double size_tau = static_cast<double>(partition.units[S].size()) * prior.tau2;
    b(i) = size_tau;
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto T = static_cast<std::size_t>(active[static_cast<std::size_t>(j)]);
      const double ratio = static_cast<double>(counts.n_pair(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(T))) /
                           (static_cast<double>(counts.n[S]) * counts.n[T]);
      A(i, j) = ratio * cov.pair_sum(partition.units[S], partition.units[T]);
    }
    A(i, i) += size_tau;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw NumericError("optimal weight system is singular");
  const Eigen::VectorXd x = ldlt.solve(b);
  if (!x.allFinite() || (A * x - b).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, b.cwiseAbs().maxCoeff())) {
    throw NumericError("optimal weight system could not be solved accurately");
  }
  for (Eigen::Index i = 0; i < k; ++i) phi[static_cast<std::size_t>(active[static_cast<std::size_t>(i)])] = x(i);
  return phi;
}

double optimal_system_residual(const UnitCounters& counts, const Partition& partition,
                               std::span<const double> weights, const CovarianceModel& cov,
                               const PriorSpec& prior) {
  double worst = 0.0;
  for (std::size_t S = 0; S < partition.size(); ++S) {
    if (counts.n[S] == 0) {
      worst = std::max(worst, std::abs(weights[S]));
      continue;
    }
    const double size_tau = static_cast<double>(partition.units[S].size()) * prior.tau2;
    double r = (weights[S] - 1.0) * size_tau;
    for (std::size_t T = 0; T < partition.size(); ++T) {
      if (counts.n[T] == 0) continue;
      const double ratio = static_cast<double>(counts.n_pair(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(T))) /
                           (static_cast<double>(counts.n[S]) * counts.n[T]);
      r += ratio * weights[T] * cov.pair_sum(partition.units[S], partition.units[T]);
    }
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

std::vector<double> unit_weights(const UnitCounters& counts, const Partition& partition, const WeightRule& rule,
                                 const CovarianceModel* cov, const PriorSpec& prior) {
  switch (rule.kind) {
    case WeightKind::kOptimal:
      return optimal_seg_weights(counts, partition, need(cov, "optimal weights"), prior);
    case WeightKind::kIndepOptimal: {
      const auto& c = need(cov, "independent-optimal weights");
      prior.validate();
      std::vector<double> phi(partition.size(), 0.0);
      for (std::size_t a = 0; a < partition.size(); ++a) {
        const int n = counts.n[a];
        if (n == 0) continue;
        const auto& S = partition.units[a];
        const double signal = n * static_cast<double>(S.size()) * prior.tau2;
        phi[a] = signal / (signal + c.pair_sum(S, S));
      }
      return phi;
    }
    default: {
      std::vector<double> phi(partition.size());
      for (std::size_t a = 0; a < partition.size(); ++a) phi[a] = rule(counts.n[a]);
      return phi;
    }
  }
}

Prediction predict_gseg(const TripDataset& ds, const Route& y, const Partition& partition, const WeightRule& rule,
                        const PriorSpec& prior, const CovarianceModel* cov) {
  partition.validate(y);
  const auto counts = unit_counters(ds, partition);
  const auto phi = unit_weights(counts, partition, rule, cov, prior);
  Prediction out;
  for (std::size_t a = 0; a < partition.size(); ++a) {
    const auto& S = partition.units[a];
    UnitTerm term;
    term.unit = S;
    term.sample_size = counts.n[a];
    term.weight = phi[a];
    if (term.sample_size > 0) term.sample_mean = unit_sample_mean(ds, ds.trips_containing(S), S);
    out.value += (1.0 - phi[a]) * static_cast<double>(S.size()) * prior.mu + phi[a] * term.sample_mean;
    out.terms.push_back(std::move(term));
  }
  return out;
}

Prediction predict_segment(const TripDataset& ds, const Route& y, const WeightRule& rule, const PriorSpec& prior,
                           const CovarianceModel* cov) {
  return predict_gseg(ds, y, Partition::singletons(y), rule, prior, cov);
}

NeighborhoodSummary summarize_neighborhood(const TripDataset& ds, const Route& y, const Neighborhood& nbhd,
                                           const CovarianceModel* cov) {
  NeighborhoodSummary out;
  out.counts = counters(ds, y, &nbhd);
  if (cov != nullptr) {
    for (int n : nbhd.members) {
      const auto& segs = ds.route(static_cast<std::size_t>(n)).segments;
      out.member_sigma_sum += cov->pair_sum(segs, segs);
    }
    out.route_sigma_sum = cov->pair_sum(y.segments, y.segments);
  }
  return out;
}

double optimal_route_weight(const NeighborhoodSummary& summary, const PriorSpec& prior) {
  prior.validate();
  const auto& c = summary.counts;
  if (c.members == 0) return 0.0;
  const double M = c.members;
  double on_route = 0.0;
  for (int n : c.nbhd_n) on_route += n;
  double spread = 0.0;
  for (const auto& [s, n] : c.nbhd_segments) spread += static_cast<double>(n) * n;
  const double length_gap = c.mean_length - static_cast<double>(c.route.size());
  const double denom =
      spread * prior.tau2 / M + summary.member_sigma_sum / M + M * prior.mu * prior.mu * length_gap * length_gap;
  if (denom <= 0.0) return 0.0;
  return on_route * prior.tau2 / denom;
}

double route_weight(const NeighborhoodSummary& summary, const WeightRule& rule, const PriorSpec& prior) {
  switch (rule.kind) {
    case WeightKind::kOptimal:
      return optimal_route_weight(summary, prior);
    case WeightKind::kIndepOptimal: {
      // The route treated as a single unit observed M times.
      if (summary.counts.members == 0) return 0.0;
      const double signal = summary.counts.members * static_cast<double>(summary.counts.route.size()) * prior.tau2;
      return signal / (signal + summary.route_sigma_sum);
    }
    default:
      return rule(summary.counts.members);
  }
}

Prediction predict_route(const TripDataset& ds, const Route& y, const Neighborhood& nbhd, const WeightRule& rule,
                         const PriorSpec& prior, const CovarianceModel* cov) {
  if (rule.kind == WeightKind::kOptimal || rule.kind == WeightKind::kIndepOptimal) need(cov, "route weight");
  const auto summary = summarize_neighborhood(ds, y, nbhd, cov);
  const double phi = route_weight(summary, rule, prior);
  UnitTerm term;
  term.unit = y.segments;
  term.sample_size = summary.counts.members;
  term.weight = phi;
  if (!nbhd.members.empty()) {
    if (!ds.has_times()) throw InvalidArgument("dataset has no travel times");
    double total = 0.0;
    for (int n : nbhd.members) {
      for (double t : ds.times(static_cast<std::size_t>(n))) total += t;
    }
    term.sample_mean = total / static_cast<double>(nbhd.members.size());
  }
  Prediction out;
  out.value = (1.0 - phi) * static_cast<double>(y.size()) * prior.mu + phi * term.sample_mean;
  out.terms.push_back(std::move(term));
  return out;
}

PosteriorSystem::PosteriorSystem(const TripDataset& routes, const CovarianceModel& cov, const PriorSpec& prior)
    : routes_(routes.routes()), cov_(std::make_shared<const CovarianceModel>(cov)), prior_(prior) {
  prior_.validate();
  const auto m = static_cast<Eigen::Index>(cov.dimension());
  if (routes.segment_count() != cov.dimension()) throw InvalidArgument("dataset and covariance sizes differ");
  information_ = Eigen::MatrixXd::Zero(m, m);
  Eigen::LLT<Eigen::MatrixXd> block;
  for (std::size_t n = 0; n < routes_.size(); ++n) {
    const auto& segs = routes_[n].segments;
    block.compute(cov.restrict(segs));
    if (block.info() != Eigen::Success) {
      throw NumericError("covariance block of trip " + std::to_string(n) + " is singular");
    }
    const auto L = static_cast<Eigen::Index>(segs.size());
    const Eigen::MatrixXd inv = block.solve(Eigen::MatrixXd::Identity(L, L));
    for (Eigen::Index a = 0; a < L; ++a) {
      for (Eigen::Index b = 0; b < L; ++b) information_(segs[a], segs[b]) += inv(a, b);
    }
  }
  Eigen::MatrixXd q = information_;
  q.diagonal().array() += 1.0 / prior_.tau2;
  q_factor_.compute(q);
  if (q_factor_.info() != Eigen::Success) throw NumericError("posterior precision is not positive definite");
}

Eigen::VectorXd PosteriorSystem::route_weights(const Route& y) const {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(information_.rows());
  for (SegmentIndex s : y.segments) {
    if (s < 0 || s >= e.size()) throw InvalidArgument("route segment out of range");
    e(s) = 1.0;
  }
  return q_factor_.solve(e);
}

Prediction PosteriorSystem::linear_form(const Route& y) const {
  const Eigen::VectorXd w = route_weights(y);
  Prediction out;
  out.intercept = prior_.mu / prior_.tau2 * w.sum();
  Eigen::LLT<Eigen::MatrixXd> block;
  for (std::size_t n = 0; n < routes_.size(); ++n) {
    const auto& segs = routes_[n].segments;
    block.compute(cov_->restrict(segs));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(segs.size()));
    for (std::size_t k = 0; k < segs.size(); ++k) rhs(static_cast<Eigen::Index>(k)) = w(segs[k]);
    const Eigen::VectorXd c = block.solve(rhs);
    for (std::size_t k = 0; k < segs.size(); ++k) {
      out.coefficients.push_back({static_cast<int>(n), segs[k], static_cast<int>(k), c(static_cast<Eigen::Index>(k))});
    }
  }
  out.value = out.intercept;
  return out;
}

double apply_linear_form(const Prediction& form, const TripDataset& ds) {
  double value = form.intercept;
  for (const auto& c : form.coefficients) {
    value += c.coefficient * ds.times(static_cast<std::size_t>(c.trip))[static_cast<std::size_t>(c.position)];
  }
  return value;
}

Prediction PosteriorSystem::predict(const TripDataset& ds, const Route& y) const {
  if (ds.size() != routes_.size()) throw InvalidArgument("dataset does not match the posterior's routes");
  if (!ds.has_times()) throw InvalidArgument("dataset has no travel times");
  Prediction out = linear_form(y);
  out.value = apply_linear_form(out, ds);
  return out;
}

Prediction predict_bayes_optimal(const TripDataset& ds, const Route& y, const CovarianceModel& cov,
                                 const PriorSpec& prior) {
  return PosteriorSystem(ds, cov, prior).predict(ds, y);
}

std::string to_string(EstimatorFamily family) {
  switch (family) {
    case EstimatorFamily::kSegment:
      return "seg";
    case EstimatorFamily::kGeneralizedSegment:
      return "gseg";
    case EstimatorFamily::kRoute:
      return "route";
    case EstimatorFamily::kBayesOptimal:
      return "bayes_optimal";
  }
  return "?";
}

namespace {

std::string describe(const NeighborhoodSpec& nb) {
  switch (nb.kind) {
    case NeighborhoodKind::kExactRoute:
      return "exact_route";
    case NeighborhoodKind::kOdExact:
      return "od_exact";
    case NeighborhoodKind::kOdBall:
      return "od_ball(" + std::to_string(nb.radius) + ")";
    case NeighborhoodKind::kOdBallGrowing: {
      std::ostringstream os;
      os << "od_ball_growing(" << nb.fraction << ")";
      return os.str();
    }
    case NeighborhoodKind::kExplicit:
      return "explicit(" + std::to_string(nb.members.size()) + ")";
  }
  return "?";
}

}  // namespace

std::string EstimatorSpec::label() const {
  std::string out = to_string(family);
  switch (family) {
    case EstimatorFamily::kSegment:
      return out + "[" + rule.describe() + "]";
    case EstimatorFamily::kGeneralizedSegment: {
      std::string sizes;
      for (int k : partition_sizes) sizes += (sizes.empty() ? "" : ",") + std::to_string(k);
      return out + "[" + rule.describe() + ";" + (sizes.empty() ? "whole" : sizes) + "]";
    }
    case EstimatorFamily::kRoute:
      return out + "[" + rule.describe() + ";" + describe(neighborhood) + "]";
    case EstimatorFamily::kBayesOptimal:
      return out;
  }
  return out;
}

Partition partition_for(const EstimatorSpec& spec, const Route& y) {
  if (spec.family == EstimatorFamily::kSegment) return Partition::singletons(y);
  if (spec.partition_sizes.empty()) return Partition::whole(y);
  return Partition::from_sizes(y, spec.partition_sizes);
}

Prediction predict(const EstimatorSpec& spec, const TripDataset& ds, const Route& y, const CovarianceModel& cov,
                   const PriorSpec& prior, int grid_size) {
  switch (spec.family) {
    case EstimatorFamily::kSegment:
    case EstimatorFamily::kGeneralizedSegment:
      return predict_gseg(ds, y, partition_for(spec, y), spec.rule, prior, &cov);
    case EstimatorFamily::kRoute:
      return predict_route(ds, y, resolve_neighborhood(ds, y, spec.neighborhood, grid_size), spec.rule, prior, &cov);
    case EstimatorFamily::kBayesOptimal:
      return predict_bayes_optimal(ds, y, cov, prior);
  }
  throw InvalidArgument("unknown estimator family");
}

Prediction linear_form(const EstimatorSpec& spec, const TripDataset& routes, const Route& y,
                       const CovarianceModel& cov, const PriorSpec& prior, int grid_size) {
  Prediction out;
  switch (spec.family) {
    case EstimatorFamily::kSegment:
    case EstimatorFamily::kGeneralizedSegment: {
      const auto partition = partition_for(spec, y);
      partition.validate(y);
      const auto counts = unit_counters(routes, partition);
      const auto phi = unit_weights(counts, partition, spec.rule, &cov, prior);
      for (std::size_t a = 0; a < partition.size(); ++a) {
        const auto& S = partition.units[a];
        out.intercept += (1.0 - phi[a]) * static_cast<double>(S.size()) * prior.mu;
        if (counts.n[a] == 0) continue;
        const double c = phi[a] / counts.n[a];
        for (int n : routes.trips_containing(S)) {
          for (SegmentIndex s : S) out.coefficients.push_back({n, s, routes.position_in_trip(n, s), c});
        }
      }
      break;
    }
    case EstimatorFamily::kRoute: {
      const auto nbhd = resolve_neighborhood(routes, y, spec.neighborhood, grid_size);
      const auto summary = summarize_neighborhood(routes, y, nbhd, &cov);
      const double phi = route_weight(summary, spec.rule, prior);
      out.intercept = (1.0 - phi) * static_cast<double>(y.size()) * prior.mu;
      if (!nbhd.members.empty()) {
        const double c = phi / static_cast<double>(nbhd.members.size());
        for (int n : nbhd.members) {
          const auto& segs = routes.route(static_cast<std::size_t>(n)).segments;
          for (std::size_t k = 0; k < segs.size(); ++k) out.coefficients.push_back({n, segs[k], static_cast<int>(k), c});
        }
      }
      break;
    }
    case EstimatorFamily::kBayesOptimal:
      return PosteriorSystem(routes, cov, prior).linear_form(y);
  }
  out.value = out.intercept;
  return out;
}

}  // namespace etalab
