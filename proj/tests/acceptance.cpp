// Acceptance checks, one per criterion. Usage: etalab_acceptance [n ...]
// Prints one "CRITERION n PASS|FAIL ..." line per requested criterion and
// exits non-zero when any of them fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "etalab/fixtures.hpp"
#include "etalab/harness.hpp"
#include "etalab/parallel.hpp"
#include "etalab/risk.hpp"
#include "support/random_fixture.hpp"

using namespace etalab;
namespace fx = etalab::fixtures;
using etalab::testing::SigmaShape;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome golden_rows(const std::vector<std::string>& examples) {
  const auto t0 = Clock::now();
  const auto rows = run_examples();
  const double elapsed = seconds_since(t0);
  int checked = 0, failed = 0;
  double worst = 0;
  std::string worst_row;
  for (const auto& r : rows) {
    if (r.advisory) continue;
    bool wanted = false;
    for (const auto& e : examples) wanted = wanted || r.example == e;
    if (!wanted) continue;
    ++checked;
    const double diff = std::abs(r.computed - r.printed);
    if (!r.pass()) ++failed;
    if (diff > worst) {
      worst = diff;
      worst_row = r.example + " " + r.quantity;
    }
  }
  std::ostringstream os;
  os << failed << "/" << checked << " rows outside +-0.0005; worst " << worst_row << " off by " << worst << "; "
     << elapsed << " s";
  return {failed == 0 && checked > 0 && elapsed < 1.0, os.str()};
}

Outcome criterion1() { return golden_rows({"bayes"}); }

Outcome criterion2() { return golden_rows({"diffusion", "negative", "long"}); }

Outcome criterion3() {
  const auto fixtures = fx::golden_fixtures();
  bool ok = true;
  std::ostringstream os;
  double worst_z = 0, slowest = 0;
  for (const auto& f : fixtures) {
    const auto t0 = Clock::now();
    const double closed = risk(f.spec, TripDataset(f.cov.dimension(), f.routes), f.route, f.cov, f.prior, 3).total;
    const auto mc = mc_risk(f.spec, f.routes, f.cov, f.prior, f.route, 3, 100000, 20240101, hardware_threads());
    const double elapsed = seconds_since(t0);
    const double z = (mc.mean - closed) / mc.std_error;
    worst_z = std::max(worst_z, std::abs(z));
    slowest = std::max(slowest, elapsed);
    if (std::abs(z) > 3.0 || elapsed > 60.0) {
      ok = false;
      os << f.name << " z=" << z << " ";
    }
  }
  os << "max |z| " << worst_z << " over " << fixtures.size() << " fixtures; slowest " << slowest << " s";
  return {ok, os.str()};
}

Outcome criterion4() {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto w = etalab::testing::random_world(40000 + seed, SigmaShape::kDiagonal, 20, true);
    const double bayes = predict_bayes_optimal(w.ds, w.y, w.cov, w.prior).value;
    const double indep = predict_segment(w.ds, w.y, WeightRule::indep_optimal(), w.prior, &w.cov).value;
    worst = std::max(worst, std::abs(bayes - indep));
  }
  return {worst <= 1e-10, fmt("max |bayes - indep-optimal| = %.3g over 100 diagonal fixtures", worst)};
}

Outcome criterion5() {
  int conforming = 0, chain_checked = 0, violations = 0;
  std::string first;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto w = etalab::testing::random_world(50000 + seed, SigmaShape::kNonnegative, 20);
    const NeighborhoodSpec specs[] = {NeighborhoodSpec::exact_route(), NeighborhoodSpec::od_exact(),
                                      NeighborhoodSpec::od_ball(1 + static_cast<int>(seed % 2))};
    for (const auto& spec : specs) {
      const auto nb = resolve_neighborhood(w.ds, w.y, spec, w.net.grid_size());
      const auto report = dominance_audit(w.ds, w.y, nb, w.cov, w.prior);
      if (report.sigma_nonnegative && report.nb_condition) ++conforming;
      if (report.sigma_nonnegative_on_route) ++chain_checked;
      if (!report.violations.empty()) {
        violations += static_cast<int>(report.violations.size());
        if (first.empty()) first = "seed " + std::to_string(seed) + ": " + report.violations.front();
      }
    }
  }
  // The negative-covariance fixture must show the inversion as an allowed exception.
  const auto net = fx::example_network();
  const auto ds = fx::example_dataset(net);
  const auto y = fx::example_route(net);
  const auto nb = resolve_neighborhood(ds, y, NeighborhoodSpec::exact_route(), 3);
  const auto neg = dominance_audit(ds, y, nb, fx::negative_pair_covariance(net), fx::unit_prior());
  const bool counterexample = neg.violations.empty() && !neg.exceptions.empty() && neg.seg.total > neg.route_exact.total;
  std::ostringstream os;
  os << violations << " violations; " << conforming << " audits met the neighborhood condition, " << chain_checked
     << " checked the chain; counterexample " << (counterexample ? "reported" : "MISSING") << " (seg " << neg.seg.total
     << " > route " << neg.route_exact.total << ")";
  if (!first.empty()) os << "; first: " << first;
  return {violations == 0 && counterexample && conforming > 0, os.str()};
}

std::vector<EstimatorSpec> sandwich_specs(int seed) {
  const WeightRule rule = seed % 2 ? WeightRule::optimal() : WeightRule::ratio(1.0);
  return {
      {EstimatorFamily::kSegment, WeightRule::optimal(), {}, {}},
      {EstimatorFamily::kSegment, WeightRule::ratio(1.0), {}, {}},
      {EstimatorFamily::kSegment, WeightRule::indep_optimal(), {}, {}},
      {EstimatorFamily::kGeneralizedSegment, WeightRule::optimal(), {}, {}},
      {EstimatorFamily::kRoute, rule, {}, NeighborhoodSpec::exact_route()},
      {EstimatorFamily::kRoute, WeightRule::optimal(), {}, NeighborhoodSpec::od_exact()},
      {EstimatorFamily::kRoute, WeightRule::optimal(), {}, NeighborhoodSpec::od_ball(1)},
  };
}

Outcome criterion6() {
  int failures = 0, comparisons = 0;
  double worst = -1e300;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto shape = seed % 2 ? SigmaShape::kGeneral : SigmaShape::kNonnegative;
    const auto w = etalab::testing::random_world(60000 + seed, shape, 20);
    const double lb = lower_bound(w.ds, w.y, w.cov, w.prior);
    const double opt = risk_optimal(w.ds, w.cov, w.prior, w.y).total;
    worst = std::max(worst, lb - opt);
    ++comparisons;
    if (lb > opt + 1e-9) ++failures;
    for (const auto& spec : sandwich_specs(static_cast<int>(seed))) {
      const double r = risk(spec, w.ds, w.y, w.cov, w.prior, w.net.grid_size()).total;
      worst = std::max(worst, opt - r);
      ++comparisons;
      if (opt > r + 1e-9) ++failures;
    }
  }
  std::ostringstream os;
  os << failures << "/" << comparisons << " comparisons out of order; largest excess " << worst;
  return {failures == 0, os.str()};
}

Outcome criterion7() {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto w = etalab::testing::random_world(70000 + seed, SigmaShape::kGeneral, 20);
    w.prior.mu = 0.0;
    const double base = risk_optimal(w.ds, w.cov, w.prior, w.y).total;
    for (double mu : {1.0, 10.0}) {
      w.prior.mu = mu;
      worst = std::max(worst, std::abs(risk_optimal(w.ds, w.cov, w.prior, w.y).total - base));
    }
  }
  return {worst <= 1e-9, fmt("max risk change across mu in {0,1,10}: %.3g over 100 fixtures", worst)};
}

Outcome criterion8() {
  const auto t0 = Clock::now();
  SweepConfig cfg;
  cfg.grid_sizes = {10, 15, 20};
  cfg.n_exponents = {3, 4};
  cfg.alpha = 1.0;
  cfg.covariance = CovarianceDescriptor::parse("diffusion:u=1,v=1,white=1");
  cfg.prior.tau2 = 0.5;
  cfg.threads = hardware_threads();
  const auto rows = run_sweep(cfg);
  const double elapsed = seconds_since(t0);
  using M = SweepMethod;
  auto at = [](const SweepRow& r, M m) { return *r.log10_risk[static_cast<std::size_t>(m)]; };
  bool a = true, c = true;
  std::map<double, std::map<int, double>> ratio;  // log10(simple / lb) by exponent, grid
  for (const auto& r : rows) {
    const double simple = at(r, M::kSimpleSeg);
    a = a && simple < at(r, M::kOptRouteOdExact) && simple < at(r, M::kOptRouteGrowing);
    c = c && at(r, M::kLowerBound) <= at(r, M::kBayesOptimal) + 1e-12 && at(r, M::kBayesOptimal) <= simple + 1e-12;
    ratio[r.n_exponent][r.grid_size] = simple - at(r, M::kLowerBound);
  }
  bool b = true;
  std::ostringstream os;
  os << "(a) simple below both route methods: " << (a ? "yes" : "no") << "; (b) ratio growth p=10->20:";
  for (const auto& [k, by_p] : ratio) {
    const double growth = std::pow(10.0, by_p.at(20) - by_p.at(10));
    b = b && growth < 3.0;
    os << " k=" << k << " x" << growth;
  }
  os << "; (c) lb <= bayes <= simple: " << (c ? "yes" : "no") << "; " << elapsed << " s";
  return {a && b && c && elapsed < 1800.0, os.str()};
}

Outcome criterion9() {
  SweepConfig cfg;
  cfg.grid_sizes = {5, 10};
  cfg.n_exponents = {2, 3};
  cfg.n_predict = 40;
  cfg.master_seed = 777;
  auto csv = [&](int threads) {
    cfg.threads = threads;
    std::ostringstream os;
    emit_csv(run_sweep(cfg), os);
    return os.str();
  };
  const auto one = csv(1);
  const auto many = csv(std::max(4, hardware_threads()));
  const auto again = csv(1);
  return {one == many && one == again,
          std::string("1-thread and multi-thread CSVs ") + (one == many ? "identical" : "differ") + ", rerun " +
              (one == again ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  if (wanted.empty()) {
    for (const auto& [n, _] : criteria) wanted.push_back(n);
  }
  bool all = true;
  for (int n : wanted) {
    const auto it = criteria.find(n);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << n << "\n";
      return 2;
    }
    Outcome out;
    try {
      out = it->second();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    std::cout << "CRITERION " << n << " " << (out.pass ? "PASS" : "FAIL") << " " << out.detail << std::endl;
    all = all && out.pass;
  }
  return all ? 0 : 1;
}
