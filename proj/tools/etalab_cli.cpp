// Command-line front end: golden examples, sweeps, Monte-Carlo oracle,
// covariance diagnostics and exports.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "etalab/error.hpp"
#include "etalab/fixtures.hpp"
#include "etalab/harness.hpp"
#include "etalab/io.hpp"
#include "etalab/parallel.hpp"
#include "etalab/risk.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kGoldenFailure = 1;
constexpr int kConfigError = 2;

etalab::AdjacencyRule rule_or_default(const std::string& name) {
  return name.empty() ? etalab::AdjacencyRule::kUndirectedEdgeIncidence : etalab::parse_adjacency_rule(name);
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw etalab::Error("cannot write '" + path + "'");
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"etalab: travel-time estimator risk laboratory"};
  app.require_subcommand(1);

  std::string rule_name;
  auto* examples = app.add_subcommand("examples", "Reproduce the worked-example golden table");
  examples->add_option("--rule", rule_name, "Segment adjacency rule for the diffusion kernel");

  std::string config_path, csv_path, manifest_path;
  std::vector<std::string> overrides;
  int threads = 0;
  auto* sweep = app.add_subcommand("sweep", "Run a risk-scaling sweep");
  sweep->add_option("--config", config_path, "Key = value config file");
  sweep->add_option("--set", overrides, "Override a config key (key=value), repeatable");
  sweep->add_option("--out", csv_path, "CSV output path (default stdout)");
  sweep->add_option("--manifest", manifest_path, "Manifest JSON output path");
  sweep->add_option("--threads", threads, "Worker threads (overrides config)");

  std::string fixture_name;
  int replicates = 100000;
  std::uint64_t seed = 7;
  auto* oracle = app.add_subcommand("oracle", "Compare a golden closed-form risk with Monte Carlo");
  oracle->add_option("--fixture", fixture_name, "Fixture name, or 'all'")->required();
  oracle->add_option("--replicates", replicates, "Monte-Carlo replicates");
  oracle->add_option("--seed", seed, "Master seed");
  oracle->add_option("--threads", threads, "Worker threads");
  oracle->add_option("--rule", rule_name, "Segment adjacency rule");

  std::string cov_text = "diffusion:u=1,v=1,white=1";
  int grid = 10;
  auto* diag = app.add_subcommand("diag", "Report covariance assumption diagnostics");
  diag->add_option("--covariance", cov_text, "Covariance descriptor");
  diag->add_option("--p", grid, "Grid size");

  auto* explain = app.add_subcommand("explain", "Print the Bayes-optimal coefficients for the example route");
  explain->add_option("--rule", rule_name, "Segment adjacency rule");

  std::string what, out_path;
  auto* exporter = app.add_subcommand("export", "Export the example network, covariance or dataset");
  exporter->add_option("what", what, "network | covariance | dataset")->required();
  exporter->add_option("--covariance", cov_text, "Covariance descriptor (covariance export)");
  exporter->add_option("--p", grid, "Grid size (network/covariance export)");
  exporter->add_option("--out", out_path, "Output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*examples) {
      const auto rows = etalab::run_examples(rule_or_default(rule_name));
      etalab::print_golden_table(rows, std::cout);
      const bool ok = etalab::all_pass(rows);
      std::cout << (ok ? "all golden values match\n" : "golden mismatch\n");
      return ok ? kOk : kGoldenFailure;
    }

    if (*sweep) {
      etalab::SweepConfig cfg;
      try {
        if (!config_path.empty()) cfg = etalab::load_sweep_config(config_path);
        for (const auto& kv : overrides) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) throw etalab::ConfigError("--set expects key=value, got '" + kv + "'");
          etalab::apply_sweep_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (threads > 0) cfg.threads = threads;
        cfg.validate();
      } catch (const etalab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
      }
      const auto start = std::chrono::steady_clock::now();
      const auto rows = etalab::run_sweep(cfg, &std::cerr);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::ofstream file;
      etalab::emit_csv(rows, open_or_stdout(csv_path, file));
      if (!manifest_path.empty()) {
        etalab::emit_manifest(cfg, {etalab::version_string(), secs, cfg.threads}, manifest_path);
      }
      return kOk;
    }

    if (*oracle) {
      const auto all = etalab::fixtures::golden_fixtures(rule_or_default(rule_name));
      std::vector<const etalab::fixtures::GoldenFixture*> chosen;
      if (fixture_name == "all") {
        for (const auto& f : all) chosen.push_back(&f);
      } else {
        chosen.push_back(&etalab::fixtures::find_fixture(all, fixture_name));
      }
      const int workers = threads > 0 ? threads : etalab::hardware_threads();
      bool ok = true;
      for (const auto* f : chosen) {
        const etalab::TripDataset shape(f->cov.dimension(), f->routes);
        const auto closed = etalab::risk(f->spec, shape, f->route, f->cov, f->prior, 3);
        const auto mc = etalab::mc_risk(f->spec, f->routes, f->cov, f->prior, f->route, 3, replicates, seed, workers);
        const double z = (mc.mean - closed.total) / mc.std_error;
        const bool pass = std::abs(z) <= 3.0;
        ok = ok && pass;
        std::cout << std::left << std::setw(22) << f->name << " closed=" << std::fixed << std::setprecision(5)
                  << closed.total << " mc=" << mc.mean << " se=" << mc.std_error << " z=" << std::setprecision(2)
                  << z << (pass ? "  ok" : "  FAIL") << "\n";
      }
      return ok ? kOk : kGoldenFailure;
    }

    if (*diag) {
      etalab::CovarianceDescriptor d;
      try {
        d = etalab::CovarianceDescriptor::parse(cov_text);
      } catch (const etalab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
      }
      const auto net = etalab::RoadNetwork::build_grid(grid);
      const auto cov = d.build(net);
      std::vector<std::vector<etalab::SegmentIndex>> routes;
      etalab::Rng rng = etalab::make_rng(seed, {static_cast<std::uint64_t>(grid)});
      const etalab::ODLaw law{1.0, grid};
      for (int k = 0; k < 100; ++k) routes.push_back(etalab::sample_route(law, net, rng).segments);
      const auto r = etalab::assumption_diagnostics(cov, routes);
      std::cout << "covariance            " << cov.provenance() << "\n"
                << "segments              " << cov.dimension() << "\n"
                << "max row |sigma|       " << r.max_row_abs_sigma << "\n"
                << "max row |precision|   "
                << (r.max_row_abs_precision ? std::to_string(*r.max_row_abs_precision) : "singular") << "\n"
                << "min route variance    " << *r.min_route_variance << " (100 sampled routes)\n"
                << "eigenvalue range      [" << r.min_eigenvalue << ", " << r.max_eigenvalue << "]\n";
      return kOk;
    }

    if (*explain) {
      const auto net = etalab::fixtures::example_network();
      const auto ds = etalab::fixtures::example_dataset(net);
      const auto y = etalab::fixtures::example_route(net);
      const auto cov = etalab::fixtures::diffusion_example_covariance(net, rule_or_default(rule_name));
      const etalab::PosteriorSystem post(ds, cov, etalab::fixtures::diffusion_example_prior());
      std::cout << etalab::io::explain_json(post.linear_form(y), y, net) << "\n";
      return kOk;
    }

    if (*exporter) {
      std::ofstream file;
      auto& out = open_or_stdout(out_path, file);
      if (what == "network") {
        etalab::io::write_network(etalab::RoadNetwork::build_grid(grid), out);
      } else if (what == "covariance") {
        const auto net = etalab::RoadNetwork::build_grid(grid);
        etalab::io::write_covariance(etalab::CovarianceDescriptor::parse(cov_text).build(net), out);
      } else if (what == "dataset") {
        const auto net = etalab::fixtures::example_network();
        etalab::io::write_dataset(etalab::fixtures::example_dataset(net), out);
      } else {
        std::cerr << "unknown export '" << what << "'\n";
        return kConfigError;
      }
      return kOk;
    }
  } catch (const etalab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return kOk;
}
