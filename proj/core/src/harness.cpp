#include "etalab/harness.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "etalab/error.hpp"
#include "etalab/fixtures.hpp"
#include "etalab/parallel.hpp"
#include "etalab/random.hpp"
#include "etalab/risk.hpp"

#ifndef ETALAB_VERSION
#define ETALAB_VERSION "0.0.0"
#endif

namespace etalab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true/false, got '" + v + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

GoldenRow row(std::string ex, std::string q, double printed, double computed, bool advisory = false,
              double tol = 5e-4) {
  return {std::move(ex), std::move(q), printed, computed, tol, advisory};
}

}  // namespace

bool GoldenRow::pass() const { return std::abs(computed - printed) <= tolerance + 1e-12; }

std::vector<GoldenRow> run_examples(AdjacencyRule rule) {
  using namespace fixtures;
  std::vector<GoldenRow> rows;
  const auto net = example_network();
  const auto ds = example_dataset(net);
  const auto y = example_route(net);
  const auto y_long = example_long_route(net);

  // Counts.
  const auto c = counters(ds, y);
  rows.push_back(row("counts", "N_s1", 3, c.n[0], false, 0));
  rows.push_back(row("counts", "N_s2", 3, c.n[1], false, 0));
  rows.push_back(row("counts", "N_s1us2", 1, c.n_pair(0, 1), false, 0));
  const auto ball = resolve_neighborhood(ds, y, NeighborhoodSpec::od_ball(1), net.grid_size());
  // Trip 5 ends at (0,1), L1 distance 2 from (1,2); the printed list has it.
  rows.push_back(row("counts", "M od_ball(1)", 2, static_cast<double>(ball.members.size()), true, 0));

  // Bayes-optimal.
  const auto diffusion = diffusion_example_covariance(net, rule);
  const auto d_prior = diffusion_example_prior();
  const PosteriorSystem post(ds, diffusion, d_prior);
  const auto form = post.linear_form(y);
  const double printed_coef[] = {0.211, -0.040, 0.002, 0.207, -0.003, 0.002, 0.210, -0.040,
                                 0.002, 0.157,  0.156, 0.201, -0.010, -0.001, 0.000};
  for (std::size_t k = 0; k < form.coefficients.size() && k < std::size(printed_coef); ++k) {
    const auto& co = form.coefficients[k];
    rows.push_back(row("bayes", "coef T" + std::to_string(co.trip + 1) + "[" + std::to_string(co.position) + "]",
                       printed_coef[k], co.coefficient));
  }
  rows.push_back(row("bayes", "intercept", 0.978, form.intercept));
  const auto r_opt = risk_optimal(post, y);
  rows.push_back(row("bayes", "risk", 0.172, r_opt.total));
  rows.push_back(row("bayes", "variance", 0.097, r_opt.variance, true));
  rows.push_back(row("bayes", "bias2", 0.075, r_opt.bias2, true));

  auto add_gseg = [&](const std::string& ex, const std::string& tag, const Partition& part,
                      const CovarianceModel& cov, const PriorSpec& prior, std::initializer_list<double> phis,
                      double total, double variance, double bias2) {
    const auto counts = unit_counters(ds, part);
    const auto phi = optimal_seg_weights(counts, part, cov, prior);
    std::size_t k = 0;
    for (double p : phis) {
      rows.push_back(row(ex, tag + " phi" + std::to_string(k + 1), p, phi.at(k)));
      ++k;
    }
    const auto r = risk_gseg(part, phi, counts, cov, prior);
    rows.push_back(row(ex, tag + " risk", total, r.total));
    if (variance >= 0) {
      rows.push_back(row(ex, tag + " variance", variance, r.variance));
      rows.push_back(row(ex, tag + " bias2", bias2, r.bias2));
    }
  };
  auto add_route = [&](const std::string& ex, const std::string& tag, const Neighborhood& nb,
                       const CovarianceModel& cov, const PriorSpec& prior, double phi_printed, double total,
                       double variance, double bias2) {
    const auto summary = summarize_neighborhood(ds, y, nb, &cov);
    const double phi = optimal_route_weight(summary, prior);
    rows.push_back(row(ex, tag + " phi", phi_printed, phi));
    const auto r = risk_route(summary, phi, prior);
    rows.push_back(row(ex, tag + " risk", total, r.total));
    rows.push_back(row(ex, tag + " variance", variance, r.variance));
    rows.push_back(row(ex, tag + " bias2", bias2, r.bias2));
  };

  add_gseg("diffusion", "seg", Partition::singletons(y), diffusion, d_prior, {0.560, 0.562}, 0.176, 0.099, 0.077);
  add_gseg("diffusion", "gseg whole", Partition::whole(y), diffusion, d_prior, {0.267}, 0.293, -1, -1);
  Neighborhood listed;
  listed.kind = NeighborhoodKind::kExplicit;
  listed.members = example_ball_members();
  add_route("diffusion", "route ball", listed, diffusion, d_prior, 0.372, 0.288, 0.070, 0.218);

  const auto negative = negative_pair_covariance(net);
  const auto u_prior = unit_prior();
  add_gseg("negative", "seg", Partition::singletons(y), negative, u_prior, {0.811, 0.811}, 0.378, 0.307, 0.072);
  const auto exact = resolve_neighborhood(ds, y, NeighborhoodSpec::exact_route(), net.grid_size());
  add_route("negative", "route exact", exact, negative, u_prior, 0.909, 0.182, 0.165, 0.017);

  const auto long_cov = long_route_covariance(net);
  add_gseg("long", "seg", Partition::singletons(y_long), long_cov, u_prior, {0.866, 0.094, 0.091}, 1.948,
           0.284, 1.664);
  const int sizes[] = {1, 2};
  add_gseg("long", "gseg {s3},{s4,s5}", Partition::from_sizes(y_long, sizes), long_cov, u_prior,
           {0.909, 0.091}, 1.909, 0.248, 1.661);
  return rows;
}

bool all_pass(const std::vector<GoldenRow>& rows) {
  for (const auto& r : rows) {
    if (!r.advisory && !r.pass()) return false;
  }
  return true;
}

void print_golden_table(const std::vector<GoldenRow>& rows, std::ostream& out) {
  out << std::left << std::setw(10) << "fixture" << std::setw(26) << "quantity" << std::right << std::setw(10)
      << "printed" << std::setw(12) << "computed" << std::setw(11) << "diff"
      << "  verdict\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(10) << r.example << std::setw(26) << r.quantity << std::right << std::fixed
        << std::setprecision(3) << std::setw(10) << r.printed << std::setprecision(5) << std::setw(12)
        << r.computed << std::setw(11) << (r.computed - r.printed) << "  "
        << (r.pass() ? "ok" : (r.advisory ? "off (advisory)" : "FAIL")) << "\n";
  }
  out.unsetf(std::ios::floatfield);
}

CovarianceDescriptor CovarianceDescriptor::parse(const std::string& text) {
  const std::string t = trim(text);
  const auto colon = t.find(':');
  const std::string kind = t.substr(0, colon);
  CovarianceDescriptor d;
  if (kind == "diffusion") {
    d.kind = Kind::kDiffusion;
  } else if (kind == "gram") {
    d.kind = Kind::kGram;
  } else if (kind == "identity") {
    d.kind = Kind::kIdentity;
  } else {
    throw ConfigError("unknown covariance kind '" + kind + "' (diffusion, gram, identity)");
  }
  if (colon == std::string::npos) return d;
  for (const auto& kv : split(t.substr(colon + 1), ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("covariance parameter '" + kv + "' is not key=value");
    const std::string k = trim(kv.substr(0, eq));
    const std::string v = trim(kv.substr(eq + 1));
    try {
      if (d.kind == Kind::kDiffusion && k == "u") {
        d.u = to_double(k, v);
      } else if (d.kind == Kind::kDiffusion && k == "v") {
        d.v = to_double(k, v);
      } else if (d.kind == Kind::kDiffusion && k == "white") {
        d.white = to_double(k, v);
      } else if (d.kind == Kind::kDiffusion && k == "rule") {
        d.rule = parse_adjacency_rule(v);
      } else if (d.kind == Kind::kGram && k == "law") {
        d.law = parse_gram_law(v);
      } else if (d.kind == Kind::kGram && k == "seed") {
        d.seed = static_cast<std::uint64_t>(to_int(k, v));
      } else {
        throw ConfigError("unknown covariance parameter '" + k + "' for " + kind);
      }
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  if (d.kind == Kind::kDiffusion && (d.u < 0 || d.v < 0 || d.white < 0)) {
    throw ConfigError("diffusion parameters must be non-negative");
  }
  return d;
}

std::string CovarianceDescriptor::to_string() const {
  switch (kind) {
    case Kind::kDiffusion:
      return "diffusion:u=" + fmt(u) + ",v=" + fmt(v) + ",white=" + fmt(white) + ",rule=" + etalab::to_string(rule);
    case Kind::kGram:
      return "gram:law=" + etalab::to_string(law) + ",seed=" + std::to_string(seed);
    case Kind::kIdentity:
      return "identity";
  }
  return "?";
}

CovarianceModel CovarianceDescriptor::build(const RoadNetwork& net) const {
  switch (kind) {
    case Kind::kDiffusion:
      return diffusion_covariance(segment_graph(net, rule), u, v, white);
    case Kind::kGram:
      return gram_covariance(net.segment_count(), law, seed);
    case Kind::kIdentity: {
      const auto m = static_cast<Eigen::Index>(net.segment_count());
      return CovarianceModel::trusted(Eigen::MatrixXd::Identity(m, m), "identity");
    }
  }
  throw ConfigError("unknown covariance kind");
}

std::string to_string(SweepMethod m) {
  switch (m) {
    case SweepMethod::kSimpleSeg:
      return "seg_simple";
    case SweepMethod::kOptRouteOdExact:
      return "route";
    case SweepMethod::kOptRouteGrowing:
      return "route_grow";
    case SweepMethod::kBayesOptimal:
      return "bayes_optimal";
    case SweepMethod::kLowerBound:
      return "lb";
  }
  return "?";
}

SweepMethod parse_sweep_method(const std::string& name) {
  for (std::size_t k = 0; k < kSweepMethodCount; ++k) {
    const auto m = static_cast<SweepMethod>(k);
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown sweep method '" + name + "' (seg_simple, route, route_grow, bayes_optimal, lb)");
}

double SweepConfig::memory_estimate_bytes() const {
  int p_max = 0;
  for (int p : grid_sizes) p_max = std::max(p_max, p);
  const double m = 4.0 * p_max * (p_max + 1);
  // sigma, precision and its factor, eigenvectors while building, H, Q and
  // the posterior's copy of sigma.
  return 8.0 * m * m * 7.0;
}

void SweepConfig::validate() const {
  if (grid_sizes.empty()) throw ConfigError("grid_sizes is empty");
  for (int p : grid_sizes) {
    if (p < 1) throw ConfigError("grid sizes must be >= 1");
  }
  if (n_exponents.empty()) throw ConfigError("n_exponents is empty");
  for (double k : n_exponents) {
    if (!(k > 0) || !std::isfinite(k)) throw ConfigError("n exponents must be > 0");
    for (int p : grid_sizes) {
      if (std::pow(static_cast<double>(p), k) > 5e7) {
        throw ConfigError("N = p^k exceeds 5e7 trips for p=" + std::to_string(p) + ", k=" + fmt(k));
      }
    }
  }
  if (!(alpha > 0) || !std::isfinite(alpha)) throw ConfigError("alpha must be > 0");
  if (!(prior.tau2 > 0) || !std::isfinite(prior.mu)) throw ConfigError("prior needs tau2 > 0 and finite mu");
  if (n_predict < 1) throw ConfigError("n_predict must be >= 1");
  if (methods.empty()) throw ConfigError("no methods selected");
  if (!(simple_lambda > 0)) throw ConfigError("simple_lambda must be > 0");
  if (!(growing_fraction > 0)) throw ConfigError("growing_fraction must be > 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  for (auto m : methods) {
    if ((m == SweepMethod::kBayesOptimal || m == SweepMethod::kLowerBound) && !gaussian) {
      throw ConfigError(to_string(m) + " needs gaussian = true");
    }
  }
  const double mb = memory_estimate_bytes() / (1024.0 * 1024.0);
  if (mb > memory_limit_mb) {
    std::ostringstream os;
    os << "dense matrices need about " << std::fixed << std::setprecision(0) << mb << " MB, above memory_limit_mb = "
       << memory_limit_mb;
    throw ConfigError(os.str());
  }
}

void apply_sweep_setting(SweepConfig& cfg, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string value = trim(value_in);
  if (key == "grid_sizes") {
    cfg.grid_sizes.clear();
    for (const auto& v : split(value, ',')) cfg.grid_sizes.push_back(static_cast<int>(to_int(key, v)));
  } else if (key == "n_exponents") {
    cfg.n_exponents.clear();
    for (const auto& v : split(value, ',')) cfg.n_exponents.push_back(to_double(key, v));
  } else if (key == "alpha") {
    cfg.alpha = to_double(key, value);
  } else if (key == "covariance") {
    cfg.covariance = CovarianceDescriptor::parse(value);
  } else if (key == "mu") {
    cfg.prior.mu = to_double(key, value);
  } else if (key == "tau2") {
    cfg.prior.tau2 = to_double(key, value);
  } else if (key == "n_predict") {
    cfg.n_predict = static_cast<int>(to_int(key, value));
  } else if (key == "methods") {
    cfg.methods.clear();
    for (const auto& v : split(value, ',')) cfg.methods.push_back(parse_sweep_method(v));
  } else if (key == "simple_lambda") {
    cfg.simple_lambda = to_double(key, value);
  } else if (key == "growing_fraction") {
    cfg.growing_fraction = to_double(key, value);
  } else if (key == "gaussian") {
    cfg.gaussian = to_bool(key, value);
  } else if (key == "master_seed") {
    cfg.master_seed = static_cast<std::uint64_t>(to_int(key, value));
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(to_int(key, value));
  } else if (key == "memory_limit_mb") {
    cfg.memory_limit_mb = to_double(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

SweepConfig parse_sweep_config(std::istream& in) {
  SweepConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_sweep_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_sweep_config(in);
}

std::vector<SweepRow> run_sweep(const SweepConfig& cfg, std::ostream* progress) {
  cfg.validate();
  std::array<bool, kSweepMethodCount> wanted{};
  for (auto m : cfg.methods) wanted[static_cast<std::size_t>(m)] = true;

  std::vector<SweepRow> rows;
  for (int p : cfg.grid_sizes) {
    const auto net = RoadNetwork::build_grid(p);
    const auto cov = cfg.covariance.build(net);
    const Eigen::MatrixXd* precision =
        wanted[static_cast<std::size_t>(SweepMethod::kLowerBound)] ? &cov.precision() : nullptr;
    const ODLaw law{cfg.alpha, p};
    const auto p_tag = static_cast<std::uint64_t>(p);

    for (double k : cfg.n_exponents) {
      const auto start = std::chrono::steady_clock::now();
      const auto k_tag = std::bit_cast<std::uint64_t>(k);
      const auto n_trips = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(p), k) - 1e-9));

      Rng trip_rng = make_rng(cfg.master_seed, {p_tag, k_tag, 0});
      std::vector<Route> trips;
      trips.reserve(n_trips);
      for (std::size_t n = 0; n < n_trips; ++n) trips.push_back(sample_route(law, net, trip_rng));
      const TripDataset ds(net.segment_count(), std::move(trips));

      Rng query_rng = make_rng(cfg.master_seed, {p_tag, k_tag, 1});
      std::vector<Route> queries;
      for (int q = 0; q < cfg.n_predict; ++q) queries.push_back(sample_route(law, net, query_rng));

      std::optional<PosteriorSystem> posterior;
      if (wanted[static_cast<std::size_t>(SweepMethod::kBayesOptimal)]) posterior.emplace(ds, cov, cfg.prior);

      const EstimatorSpec simple{EstimatorFamily::kSegment, WeightRule::ratio(cfg.simple_lambda), {}, {}};
      const EstimatorSpec od{EstimatorFamily::kRoute, WeightRule::optimal(), {}, NeighborhoodSpec::od_exact()};
      const EstimatorSpec grow{EstimatorFamily::kRoute, WeightRule::optimal(), {},
                               NeighborhoodSpec::od_ball_growing(cfg.growing_fraction)};

      std::vector<std::array<double, kSweepMethodCount>> risks(queries.size());
      parallel_for(queries.size(), cfg.threads, [&](std::size_t q) {
        const Route& y = queries[q];
        auto& out = risks[q];
        out.fill(0.0);
        if (wanted[0]) out[0] = risk(simple, ds, y, cov, cfg.prior, p).total;
        if (wanted[1]) out[1] = risk(od, ds, y, cov, cfg.prior, p).total;
        if (wanted[2]) out[2] = risk(grow, ds, y, cov, cfg.prior, p).total;
        if (wanted[3]) out[3] = risk_optimal(*posterior, y).total;
        if (wanted[4]) out[4] = lower_bound(counters(ds, y), *precision, cfg.prior);
      });

      SweepRow row;
      row.grid_size = p;
      row.n_exponent = k;
      row.trips = n_trips;
      for (std::size_t m = 0; m < kSweepMethodCount; ++m) {
        if (!wanted[m]) continue;
        double sum = 0.0;
        for (const auto& r : risks) sum += r[m];
        const double avg = sum / static_cast<double>(risks.size());
        if (!(avg > 0.0) || !std::isfinite(avg)) throw NumericError("non-positive average risk in sweep");
        row.log10_risk[m] = std::log10(avg);
      }
      rows.push_back(row);
      if (progress != nullptr) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        *progress << "p=" << p << " k=" << k << " N=" << n_trips << " (" << std::fixed << std::setprecision(2)
                  << secs << " s)\n";
        progress->unsetf(std::ios::floatfield);
      }
    }
  }
  return rows;
}

void emit_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "grid_size,alpha,seg_simple,route,route_grow,bayes_optimal,lb\n";
  for (const auto& r : rows) {
    out << r.grid_size << "," << fmt(r.n_exponent);
    for (const auto& v : r.log10_risk) {
      out << ",";
      if (v) out << fmt(*v);
    }
    out << "\n";
  }
}

void emit_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  emit_csv(rows, out);
  if (!out) throw Error("write failed for '" + path + "'");
}

std::vector<SweepRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "grid_size,alpha,seg_simple,route,route_grow,bayes_optimal,lb") {
    throw InvalidArgument("unexpected CSV header");
  }
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 2 + kSweepMethodCount) throw InvalidArgument("CSV row has the wrong number of cells");
    SweepRow r;
    r.grid_size = std::stoi(cells[0]);
    r.n_exponent = std::stod(cells[1]);
    for (std::size_t m = 0; m < kSweepMethodCount; ++m) {
      if (!trim(cells[2 + m]).empty()) r.log10_risk[m] = std::stod(cells[2 + m]);
    }
    rows.push_back(r);
  }
  return rows;
}

void emit_manifest(const SweepConfig& cfg, const RunEnvironment& env, std::ostream& out) {
  nlohmann::ordered_json j;
  j["master_seed"] = cfg.master_seed;
  j["code_version"] = env.code_version;
  j["wall_seconds"] = env.wall_seconds;
  j["threads"] = env.threads;
  auto& c = j["config"];
  c["grid_sizes"] = cfg.grid_sizes;
  c["n_exponents"] = cfg.n_exponents;
  c["alpha"] = cfg.alpha;
  c["covariance"] = cfg.covariance.to_string();
  c["mu"] = cfg.prior.mu;
  c["tau2"] = cfg.prior.tau2;
  c["n_predict"] = cfg.n_predict;
  std::vector<std::string> methods;
  for (auto m : cfg.methods) methods.push_back(to_string(m));
  c["methods"] = methods;
  c["simple_lambda"] = cfg.simple_lambda;
  c["growing_fraction"] = cfg.growing_fraction;
  c["gaussian"] = cfg.gaussian;
  j["predicting_routes"] = "resampled per (grid_size, exponent) cell from the cell's derived seed";
  j["seed_derivation"] = "seed_seq(master, p, bits(k), stream) -> mt19937_64; stream 0 trips, 1 predicting routes";
  out << j.dump(2) << "\n";
}

void emit_manifest(const SweepConfig& cfg, const RunEnvironment& env, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  emit_manifest(cfg, env, out);
  if (!out) throw Error("write failed for '" + path + "'");
}

std::string version_string() { return ETALAB_VERSION; }

}  // namespace etalab
