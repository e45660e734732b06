#include "etalab/risk.hpp"

#include <cmath>
#include <unordered_set>

#include "etalab/error.hpp"
#include "etalab/parallel.hpp"
#include "etalab/random.hpp"

namespace etalab {

RiskReport risk_gseg(const Partition& partition, std::span<const double> weights, const UnitCounters& counts,
                     const CovarianceModel& cov, const PriorSpec& prior) {
  prior.validate();
  if (weights.size() != partition.size()) throw InvalidArgument("one weight per super-segment is required");
  double variance = 0.0;
  double bias2 = 0.0;
  for (std::size_t a = 0; a < partition.size(); ++a) {
    const double miss = 1.0 - weights[a];
    bias2 += miss * miss * static_cast<double>(partition.units[a].size()) * prior.tau2;
    if (counts.n[a] == 0) continue;
    for (std::size_t b = 0; b < partition.size(); ++b) {
      if (counts.n[b] == 0) continue;
      const double ratio = static_cast<double>(counts.n_pair(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) /
                           (static_cast<double>(counts.n[a]) * counts.n[b]);
      if (ratio == 0.0) continue;
      variance += ratio * weights[a] * weights[b] * cov.pair_sum(partition.units[a], partition.units[b]);
    }
  }
  return RiskReport::of(variance, bias2);
}

RiskReport risk_route(const NeighborhoodSummary& summary, double phi, const PriorSpec& prior,
                      RouteRiskBreakdown* breakdown) {
  prior.validate();
  const auto& c = summary.counts;
  if (!c.has_neighborhood) throw InvalidArgument("route risk needs neighborhood counters");
  RouteRiskBreakdown b;
  const double M = c.members;
  const auto frac = [&](int n) { return M > 0 ? phi * n / M : 0.0; };
  if (M > 0) {
    b.variance = (phi / M) * (phi / M) * summary.member_sigma_sum;
    const double gap = phi * (c.mean_length - static_cast<double>(c.route.size())) * prior.mu;
    b.length_bias = gap * gap;
  }
  const std::unordered_set<SegmentIndex> on_route(c.route.begin(), c.route.end());
  for (const auto& [s, n] : c.nbhd_segments) {
    if (on_route.count(s) == 0) b.off_route_bias += frac(n) * frac(n) * prior.tau2;
  }
  for (int n : c.nbhd_n) {
    const double miss = 1.0 - frac(n);
    b.shrinkage_bias += miss * miss * prior.tau2;
  }
  if (breakdown != nullptr) *breakdown = b;
  return RiskReport::of(b.variance, b.length_bias + b.off_route_bias + b.shrinkage_bias);
}

RiskReport risk_optimal(const PosteriorSystem& system, const Route& y) {
  const Eigen::VectorXd w = system.route_weights(y);
  const double variance = w.dot(system.information() * w);
  const double bias2 = w.squaredNorm() / system.prior().tau2;
  return RiskReport::of(variance, bias2);
}

RiskReport risk_optimal(const TripDataset& routes, const CovarianceModel& cov, const PriorSpec& prior,
                        const Route& y) {
  return risk_optimal(PosteriorSystem(routes, cov, prior), y);
}

double lower_bound(const RouteCounters& counts, const Eigen::MatrixXd& precision, const PriorSpec& prior) {
  prior.validate();
  const auto L = static_cast<Eigen::Index>(counts.route.size());
  double info = static_cast<double>(L) / prior.tau2;
  for (Eigen::Index a = 0; a < L; ++a) {
    for (Eigen::Index b = 0; b < L; ++b) {
      if (counts.n_pair(a, b) != 0) info += counts.n_pair(a, b) * precision(counts.route[a], counts.route[b]);
    }
  }
  if (!(info > 0.0)) throw NumericError("lower bound information is not positive");
  return static_cast<double>(L * L) / info;
}

double lower_bound(const TripDataset& routes, const Route& y, const CovarianceModel& cov, const PriorSpec& prior) {
  return lower_bound(counters(routes, y), cov.precision(), prior);
}

RiskReport risk(const EstimatorSpec& spec, const TripDataset& routes, const Route& y, const CovarianceModel& cov,
                const PriorSpec& prior, int grid_size) {
  switch (spec.family) {
    case EstimatorFamily::kSegment:
    case EstimatorFamily::kGeneralizedSegment: {
      const auto partition = partition_for(spec, y);
      partition.validate(y);
      const auto counts = unit_counters(routes, partition);
      const auto phi = unit_weights(counts, partition, spec.rule, &cov, prior);
      return risk_gseg(partition, phi, counts, cov, prior);
    }
    case EstimatorFamily::kRoute: {
      const auto nbhd = resolve_neighborhood(routes, y, spec.neighborhood, grid_size);
      const auto summary = summarize_neighborhood(routes, y, nbhd, &cov);
      return risk_route(summary, route_weight(summary, spec.rule, prior), prior);
    }
    case EstimatorFamily::kBayesOptimal:
      return risk_optimal(routes, cov, prior, y);
  }
  throw InvalidArgument("unknown estimator family");
}

McResult mc_risk(const Estimator& estimator, const std::vector<Route>& routes, const CovarianceModel& cov,
                 const PriorSpec& prior, const Route& y, int replicates, std::uint64_t seed, int threads) {
  if (replicates < 2) throw InvalidArgument("Monte-Carlo risk needs at least 2 replicates");
  prior.validate();
  const TripSampler sampler(routes, cov);
  std::vector<double> err2(static_cast<std::size_t>(replicates));
  parallel_for(err2.size(), threads, [&](std::size_t r) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(r)});
    const TripDataset ds = sampler.draw(prior, rng);
    double truth = 0.0;
    for (SegmentIndex s : y.segments) truth += ds.theta()[static_cast<std::size_t>(s)];
    const double e = estimator(ds) - truth;
    err2[r] = e * e;
  });
  // Fixed-order reductions keep the result independent of scheduling.
  double sum = 0.0;
  for (double v : err2) sum += v;
  const double mean = sum / replicates;
  double ss = 0.0;
  for (double v : err2) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (replicates - 1));
  return {mean, sd / std::sqrt(static_cast<double>(replicates)), replicates};
}

McResult mc_risk(const EstimatorSpec& spec, const std::vector<Route>& routes, const CovarianceModel& cov,
                 const PriorSpec& prior, const Route& y, int grid_size, int replicates, std::uint64_t seed,
                 int threads) {
  const TripDataset shape(cov.dimension(), routes);
  const Prediction form = linear_form(spec, shape, y, cov, prior, grid_size);
  return mc_risk([&form](const TripDataset& ds) { return apply_linear_form(form, ds); }, routes, cov, prior, y,
                 replicates, seed, threads);
}

bool check_nb_condition(const RouteCounters& c) {
  if (!c.has_neighborhood) throw InvalidArgument("condition needs neighborhood counters");
  const auto L = static_cast<Eigen::Index>(c.route.size());
  for (Eigen::Index a = 0; a < L; ++a) {
    for (Eigen::Index b = 0; b < L; ++b) {
      const auto lhs = static_cast<std::int64_t>(c.n_pair(a, b)) * c.nbhd_n[static_cast<std::size_t>(a)] *
                       c.nbhd_n[static_cast<std::size_t>(b)];
      const auto rhs = static_cast<std::int64_t>(c.nbhd_pair(a, b)) * c.n[static_cast<std::size_t>(a)] *
                       c.n[static_cast<std::size_t>(b)];
      if (lhs > rhs) return false;
    }
  }
  return true;
}

DominanceReport dominance_audit(const TripDataset& routes, const Route& y, const Neighborhood& nbhd,
                                const CovarianceModel& cov, const PriorSpec& prior, double slack) {
  DominanceReport rep;
  const auto seg_p = Partition::singletons(y);
  const auto seg_c = unit_counters(routes, seg_p);
  rep.seg = risk_gseg(seg_p, optimal_seg_weights(seg_c, seg_p, cov, prior), seg_c, cov, prior);

  const auto whole_p = Partition::whole(y);
  const auto whole_c = unit_counters(routes, whole_p);
  rep.gseg_whole = risk_gseg(whole_p, optimal_seg_weights(whole_c, whole_p, cov, prior), whole_c, cov, prior);

  const auto summary = summarize_neighborhood(routes, y, nbhd, &cov);
  rep.route = risk_route(summary, optimal_route_weight(summary, prior), prior);

  const auto exact = resolve_neighborhood(routes, y, NeighborhoodSpec::exact_route(), 0);
  const auto exact_summary = summarize_neighborhood(routes, y, exact, &cov);
  rep.route_exact = risk_route(exact_summary, optimal_route_weight(exact_summary, prior), prior);

  rep.sigma_nonnegative = (cov.sigma().array() >= 0.0).all();
  rep.sigma_nonnegative_on_route = (cov.restrict(y.segments).array() >= 0.0).all();
  rep.nb_condition = check_nb_condition(summary.counts);

  const auto le = [slack](double a, double b) { return a <= b + slack * std::max(1.0, std::abs(b)); };
  rep.seg_le_route = le(rep.seg.total, rep.route.total);
  rep.chain = le(rep.seg.total, rep.gseg_whole.total) && le(rep.gseg_whole.total, rep.route_exact.total);

  const bool theorem = rep.sigma_nonnegative && rep.nb_condition;
  if (!rep.seg_le_route) {
    (theorem ? rep.violations : rep.exceptions).push_back("R(seg*) <= R(route*)");
  }
  if (!rep.chain) {
    (rep.sigma_nonnegative_on_route ? rep.violations : rep.exceptions)
        .push_back("R(seg*) <= R(gseg*, whole) <= R(route*, exact)");
  }
  return rep;
}

}  // namespace etalab
