#include <gtest/gtest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "etalab/error.hpp"
#include "etalab/fixtures.hpp"
#include "etalab/io.hpp"
#include "etalab/risk.hpp"
#include "support/oracles.hpp"
#include "support/random_fixture.hpp"

using namespace etalab;
namespace fx = etalab::fixtures;
using etalab::testing::SigmaShape;

namespace {

std::vector<EstimatorSpec> risk_specs(const Route& y, Rng& rng) {
  std::vector<EstimatorSpec> out;
  const WeightRule rules[] = {WeightRule::ratio(1.0), WeightRule::threshold(2.0), WeightRule::indep_optimal(),
                              WeightRule::optimal()};
  for (const auto& rule : rules) {
    out.push_back({EstimatorFamily::kSegment, rule, {}, {}});
    std::vector<int> sizes;
    int left = static_cast<int>(y.size());
    while (left > 0) {
      sizes.push_back(std::uniform_int_distribution<int>(1, left)(rng));
      left -= sizes.back();
    }
    out.push_back({EstimatorFamily::kGeneralizedSegment, rule, sizes, {}});
    out.push_back({EstimatorFamily::kRoute, rule, {}, NeighborhoodSpec::od_ball(1)});
    out.push_back({EstimatorFamily::kRoute, rule, {}, NeighborhoodSpec::od_exact()});
  }
  out.push_back({EstimatorFamily::kBayesOptimal, WeightRule::optimal(), {}, {}});
  return out;
}

void expect_consistent(const RiskReport& r) {
  EXPECT_NEAR(r.total, r.variance + r.bias2, 1e-12);
  EXPECT_GE(r.variance, -1e-12);
  EXPECT_GE(r.bias2, -1e-12);
}

double len(const Route& y) { return static_cast<double>(y.size()); }

}  // namespace

TEST(Risk, ClosedFormsMatchAffineOracle) {
  Rng rng(17);
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto w = etalab::testing::random_world(seed, seed % 2 ? SigmaShape::kGeneral : SigmaShape::kNonnegative, 15);
    for (const auto& spec : risk_specs(w.y, rng)) {
      const auto closed = risk(spec, w.ds, w.y, w.cov, w.prior, w.net.grid_size());
      expect_consistent(closed);
      const auto form = linear_form(spec, w.ds, w.y, w.cov, w.prior, w.net.grid_size());
      const auto oracle = etalab::testing::affine_risk(w.ds.routes(), w.cov, w.prior, w.y,
                                               etalab::testing::flatten(form, w.ds.routes()), form.intercept);
      const double tol = 1e-9 * (1 + oracle.total);
      EXPECT_NEAR(closed.total, oracle.total, tol) << spec.label() << " seed " << seed;
      EXPECT_NEAR(closed.variance, oracle.variance, tol) << spec.label() << " seed " << seed;
    }
  }
}

TEST(Risk, BayesRiskMatchesPosteriorVariance) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto w = etalab::testing::random_world(seed, SigmaShape::kGeneral, 15);
    const auto r = risk_optimal(w.ds, w.cov, w.prior, w.y);
    expect_consistent(r);
    EXPECT_NEAR(r.total, etalab::testing::dense_bayes(w.ds.routes(), w.cov, w.prior, w.y).risk, 1e-9 * (1 + r.total));
  }
}

TEST(Risk, ZeroWeightsArePriorOnly) {
  const auto w = etalab::testing::random_world(3, SigmaShape::kGeneral, 20);
  const auto part = Partition::singletons(w.y);
  const std::vector<double> zeros(part.size(), 0.0);
  const auto r = risk_gseg(part, zeros, unit_counters(w.ds, part), w.cov, w.prior);
  EXPECT_EQ(r.variance, 0.0);
  EXPECT_NEAR(r.bias2, len(w.y) * w.prior.tau2, 1e-12);
}

TEST(Risk, EmptyNeighborhoodIsPriorOnly) {
  const auto net = fx::example_network();
  const TripDataset empty(net.segment_count(), {});
  const auto y = fx::example_route(net);
  const auto cov = fx::diffusion_example_covariance(net);
  const PriorSpec prior{3.0, 0.7};
  const auto nb = resolve_neighborhood(empty, y, NeighborhoodSpec::od_exact(), 3);
  const auto s = summarize_neighborhood(empty, y, nb, &cov);
  EXPECT_EQ(optimal_route_weight(s, prior), 0.0);
  const auto r = risk_route(s, 0.0, prior);
  EXPECT_EQ(r.variance, 0.0);
  EXPECT_NEAR(r.total, 2 * 0.7, 1e-12);
  const auto o = risk_optimal(empty, cov, prior, y);
  EXPECT_NEAR(o.variance, 0.0, 1e-12);
  EXPECT_NEAR(o.total, 1.4, 1e-12);
  const CovarianceModel I(Eigen::MatrixXd::Identity(48, 48), "I");
  EXPECT_NEAR(lower_bound(empty, y, I, prior), 1.4, 1e-12);
}

TEST(Risk, OptimalRiskIgnoresMean) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto w = etalab::testing::random_world(seed, SigmaShape::kGeneral, 20);
    double first = 0;
    for (double mu : {0.0, 1.0, 10.0}) {
      w.prior.mu = mu;
      const double r = risk_optimal(w.ds, w.cov, w.prior, w.y).total;
      if (mu == 0.0) first = r;
      EXPECT_NEAR(r, first, 1e-9);
    }
  }
}

TEST(Risk, OptimalSegmentWeightsAreLocallyOptimal) {
  Rng rng(23);
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto w = etalab::testing::random_world(seed, SigmaShape::kGeneral, 20);
    for (const auto& part : {Partition::singletons(w.y), Partition::whole(w.y)}) {
      const auto uc = unit_counters(w.ds, part);
      const auto phi = optimal_seg_weights(uc, part, w.cov, w.prior);
      const double best = risk_gseg(part, phi, uc, w.cov, w.prior).total;
      for (int k = 0; k < 100; ++k) {
        auto other = phi;
        for (std::size_t u = 0; u < other.size(); ++u) {
          if (uc.n[u] > 0) other[u] += jitter(rng);
        }
        EXPECT_LE(best, risk_gseg(part, other, uc, w.cov, w.prior).total + 1e-12);
      }
    }
  }
}

TEST(Risk, OptimalRouteWeightMinimizesRouteRisk) {
  Rng rng(29);
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto w = etalab::testing::random_world(seed, SigmaShape::kGeneral, 20);
    const auto nb = resolve_neighborhood(w.ds, w.y, NeighborhoodSpec::od_ball(1), w.net.grid_size());
    const auto s = summarize_neighborhood(w.ds, w.y, nb, &w.cov);
    if (s.counts.members == 0) continue;
    const double phi = optimal_route_weight(s, w.prior);
    const double best = risk_route(s, phi, w.prior).total;
    for (int k = 0; k < 100; ++k) EXPECT_LE(best, risk_route(s, phi + jitter(rng), w.prior).total + 1e-12);
  }
}

TEST(Risk, BreakdownSumsToBias) {
  const auto w = etalab::testing::random_world(12, SigmaShape::kGeneral, 20);
  const auto nb = resolve_neighborhood(w.ds, w.y, NeighborhoodSpec::od_ball(2), w.net.grid_size());
  const auto s = summarize_neighborhood(w.ds, w.y, nb, &w.cov);
  RouteRiskBreakdown b;
  const auto r = risk_route(s, 0.4, w.prior, &b);
  EXPECT_DOUBLE_EQ(r.variance, b.variance);
  EXPECT_NEAR(r.bias2, b.length_bias + b.off_route_bias + b.shrinkage_bias, 1e-12);
}

TEST(Risk, DiagonalOptimalEqualsIndependentSegments) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto w = etalab::testing::random_world(seed, SigmaShape::kDiagonal, 20);
    const auto part = Partition::singletons(w.y);
    const auto uc = unit_counters(w.ds, part);
    const auto phi = unit_weights(uc, part, WeightRule::indep_optimal(), &w.cov, w.prior);
    EXPECT_NEAR(risk_optimal(w.ds, w.cov, w.prior, w.y).total, risk_gseg(part, phi, uc, w.cov, w.prior).total, 1e-10);
  }
}

TEST(LowerBound, BelowOptimalRisk) {
  for (std::uint64_t seed = 1; seed <= 80; ++seed) {
    const auto w = etalab::testing::random_world(seed, seed % 2 ? SigmaShape::kGeneral : SigmaShape::kNonnegative, 20);
    EXPECT_LE(lower_bound(w.ds, w.y, w.cov, w.prior), risk_optimal(w.ds, w.cov, w.prior, w.y).total + 1e-9);
  }
}

TEST(LowerBound, IdentityCovarianceOneMatchingTrip) {
  const auto net = fx::example_network();
  const auto y = fx::example_long_route(net);
  const TripDataset ds(net.segment_count(), {y});
  const CovarianceModel I(Eigen::MatrixXd::Identity(48, 48), "I");
  const PriorSpec prior{1.0, 0.6};
  const double L = len(y);
  EXPECT_NEAR(lower_bound(ds, y, I, prior), L * L / (L + L / prior.tau2), 1e-12);
}

TEST(Dominance, ExactRouteConditionAlwaysHolds) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto w = etalab::testing::random_world(seed, SigmaShape::kNonnegative, 20);
    const auto nb = resolve_neighborhood(w.ds, w.y, NeighborhoodSpec::exact_route(), w.net.grid_size());
    EXPECT_TRUE(check_nb_condition(counters(w.ds, w.y, &nb)));
  }
}

TEST(Dominance, NegativeCovarianceIsAnException) {
  const auto net = fx::example_network();
  const auto ds = fx::example_dataset(net);
  const auto y = fx::example_route(net);
  const auto nb = resolve_neighborhood(ds, y, NeighborhoodSpec::exact_route(), 3);
  const auto report = dominance_audit(ds, y, nb, fx::negative_pair_covariance(net), fx::unit_prior());
  EXPECT_TRUE(report.violations.empty());
  EXPECT_FALSE(report.exceptions.empty());
  EXPECT_FALSE(report.sigma_nonnegative_on_route);
  EXPECT_GT(report.seg.total, report.route_exact.total);
  EXPECT_NEAR(report.seg.total, 0.378, 5e-4);
  EXPECT_NEAR(report.route_exact.total, 0.182, 5e-4);
}

TEST(Dominance, RandomNonnegativeWorldsHaveNoViolations) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto w = etalab::testing::random_world(seed, SigmaShape::kNonnegative, 20);
    for (const auto& spec : {NeighborhoodSpec::exact_route(), NeighborhoodSpec::od_exact(), NeighborhoodSpec::od_ball(1)}) {
      const auto nb = resolve_neighborhood(w.ds, w.y, spec, w.net.grid_size());
      const auto report = dominance_audit(w.ds, w.y, nb, w.cov, w.prior);
      EXPECT_TRUE(report.violations.empty()) << "seed " << seed << ": " << report.violations.front();
      EXPECT_TRUE(report.chain);
    }
  }
}

class PrintedFixture : public ::testing::TestWithParam<const char*> {};

TEST_P(PrintedFixture, RiskMatchesPrintedTotal) {
  const auto all = fx::golden_fixtures();
  const auto& f = fx::find_fixture(all, GetParam());
  const TripDataset ds(f.cov.dimension(), f.routes);
  EXPECT_NEAR(risk(f.spec, ds, f.route, f.cov, f.prior, 3).total, f.printed_total, 5e-4);
}

// The diffusion fixtures are calibration-dependent and tracked by the golden
// table instead.
INSTANTIATE_TEST_SUITE_P(ExplicitCovariances, PrintedFixture,
                         ::testing::Values("negative-seg", "negative-route-exact", "long-seg", "long-gseg-split"));

TEST(PrintedComponents, ExplicitCovarianceFixtures) {
  const auto all = fx::golden_fixtures();
  auto components = [&](const char* name) {
    const auto& f = fx::find_fixture(all, name);
    return risk(f.spec, TripDataset(f.cov.dimension(), f.routes), f.route, f.cov, f.prior, 3);
  };
  const auto exact = components("negative-route-exact");
  EXPECT_NEAR(exact.variance, 0.165, 5e-4);
  EXPECT_NEAR(exact.bias2, 0.017, 5e-4);
  const auto seg = components("long-seg");
  EXPECT_NEAR(seg.variance, 0.284, 5e-4);
  EXPECT_NEAR(seg.bias2, 1.664, 5e-4);
  const auto split = components("long-gseg-split");
  EXPECT_NEAR(split.variance, 0.248, 5e-4);
  EXPECT_NEAR(split.bias2, 1.661, 5e-4);
}

TEST(MonteCarlo, PriorOnlyEstimator) {
  const auto net = fx::example_network();
  const auto y = fx::example_route(net);
  const auto cov = fx::diffusion_example_covariance(net);
  const PriorSpec prior{1.0, 0.2};
  const Estimator prior_mean = [&](const TripDataset&) { return 2 * prior.mu; };
  const auto mc = mc_risk(prior_mean, fx::example_trips(net), cov, prior, y, 20000, 5);
  EXPECT_NEAR(mc.mean, 0.4, 3 * mc.std_error);
  EXPECT_EQ(mc.replicates, 20000);
}

TEST(MonteCarlo, AgreesWithClosedFormOnRandomWorlds) {
  Rng rng(31);
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto w = etalab::testing::random_world(seed, SigmaShape::kNonnegative, 12);
    for (const auto& spec : risk_specs(w.y, rng)) {
      if (spec.rule.kind != WeightKind::kOptimal) continue;
      const double closed = risk(spec, w.ds, w.y, w.cov, w.prior, w.net.grid_size()).total;
      const auto mc = mc_risk(spec, w.ds.routes(), w.cov, w.prior, w.y, w.net.grid_size(), 20000, 100 + seed);
      // 4 standard errors keeps the family-wise false alarm rate low.
      EXPECT_NEAR(mc.mean, closed, 4 * mc.std_error) << spec.label() << " seed " << seed;
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResult) {
  const auto w = etalab::testing::random_world(9, SigmaShape::kGeneral, 12);
  const EstimatorSpec spec{EstimatorFamily::kSegment, WeightRule::ratio(1.0), {}, {}};
  const auto one = mc_risk(spec, w.ds.routes(), w.cov, w.prior, w.y, w.net.grid_size(), 3000, 77, 1);
  const auto four = mc_risk(spec, w.ds.routes(), w.cov, w.prior, w.y, w.net.grid_size(), 3000, 77, 4);
  EXPECT_EQ(one.mean, four.mean);
  EXPECT_EQ(one.std_error, four.std_error);
}

TEST(MonteCarlo, RejectsTooFewReplicates) {
  const auto w = etalab::testing::random_world(9, SigmaShape::kGeneral, 5);
  const Estimator zero = [](const TripDataset&) { return 0.0; };
  EXPECT_THROW(mc_risk(zero, w.ds.routes(), w.cov, w.prior, w.y, 1, 1), InvalidArgument);
}

TEST(RiskJson, HasFields) {
  const auto net = fx::example_network();
  const auto j = nlohmann::json::parse(io::risk_json("seg", fx::example_route(net), RiskReport::of(0.1, 0.2)));
  EXPECT_EQ(j.at("estimator"), "seg");
  EXPECT_EQ(j.at("route").size(), 2u);
  EXPECT_NEAR(j.at("total").get<double>(), 0.3, 1e-15);
  EXPECT_DOUBLE_EQ(j.at("variance").get<double>(), 0.1);
}
