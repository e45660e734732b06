#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "etalab/covariance.hpp"
#include "etalab/network.hpp"

namespace etalab {

/// One printed value from the worked examples next to the computed one.
struct GoldenRow {
  std::string example;
  std::string quantity;
  double printed = 0.0;
  double computed = 0.0;
  double tolerance = 5e-4;
  /// Reported but not part of the pass/fail verdict.
  bool advisory = false;

  bool pass() const;
};

std::vector<GoldenRow> run_examples(AdjacencyRule rule = AdjacencyRule::kUndirectedEdgeIncidence);
/// True when every non-advisory row passes.
bool all_pass(const std::vector<GoldenRow>& rows);
void print_golden_table(const std::vector<GoldenRow>& rows, std::ostream& out);

/// How the sweep builds its segment covariance.
struct CovarianceDescriptor {
  enum class Kind { kDiffusion, kGram, kIdentity };
  Kind kind = Kind::kDiffusion;
  double u = 1.0;
  double v = 1.0;
  double white = 1.0;
  AdjacencyRule rule = AdjacencyRule::kUndirectedEdgeIncidence;
  GramLaw law = GramLaw::kUniformMinusOneOne;
  std::uint64_t seed = 0;

  /// "diffusion:u=1,v=1,white=1[,rule=...]", "gram:law=unif_0_1[,seed=3]" or "identity".
  static CovarianceDescriptor parse(const std::string& text);
  std::string to_string() const;
  CovarianceModel build(const RoadNetwork& net) const;
};

enum class SweepMethod { kSimpleSeg, kOptRouteOdExact, kOptRouteGrowing, kBayesOptimal, kLowerBound };
inline constexpr std::size_t kSweepMethodCount = 5;

std::string to_string(SweepMethod m);
SweepMethod parse_sweep_method(const std::string& name);

struct SweepConfig {
  std::vector<int> grid_sizes{10, 15, 20};
  /// N = ceil(p^k) historical trips.
  std::vector<double> n_exponents{1, 2, 3};
  double alpha = 1.0;
  CovarianceDescriptor covariance;
  PriorSpec prior{1.0, 0.5};
  int n_predict = 100;
  std::vector<SweepMethod> methods{SweepMethod::kSimpleSeg, SweepMethod::kOptRouteOdExact,
                                   SweepMethod::kOptRouteGrowing, SweepMethod::kBayesOptimal,
                                   SweepMethod::kLowerBound};
  double simple_lambda = 1.0;
  double growing_fraction = 0.1;
  /// Required by the Bayes-optimal risk and the lower bound.
  bool gaussian = true;
  std::uint64_t master_seed = 20240101;
  int threads = 1;
  double memory_limit_mb = 8192;

  /// Throws ConfigError on an invalid combination, including a dense-memory
  /// estimate above memory_limit_mb.
  void validate() const;
  /// Bytes of dense matrices alive while one grid size is processed.
  double memory_estimate_bytes() const;
};

/// Parses "key = value" lines; '#' starts a comment, lists are comma
/// separated. Unknown keys and malformed values throw ConfigError.
SweepConfig parse_sweep_config(std::istream& in);
SweepConfig load_sweep_config(const std::string& path);
/// Applies one "key=value" override.
void apply_sweep_setting(SweepConfig& cfg, const std::string& key, const std::string& value);

struct SweepRow {
  int grid_size = 0;
  double n_exponent = 0.0;
  std::size_t trips = 0;
  /// log10 of the average risk over the predicting routes, per method.
  std::array<std::optional<double>, kSweepMethodCount> log10_risk{};
};

std::vector<SweepRow> run_sweep(const SweepConfig& cfg, std::ostream* progress = nullptr);

/// Columns: grid_size,alpha,seg_simple,route,route_grow,bayes_optimal,lb
/// (alpha holds the N exponent); methods not run are left empty.
void emit_csv(const std::vector<SweepRow>& rows, std::ostream& out);
void emit_csv(const std::vector<SweepRow>& rows, const std::string& path);
std::vector<SweepRow> read_csv(std::istream& in);

struct RunEnvironment {
  std::string code_version;
  double wall_seconds = 0.0;
  int threads = 1;
};

void emit_manifest(const SweepConfig& cfg, const RunEnvironment& env, std::ostream& out);
void emit_manifest(const SweepConfig& cfg, const RunEnvironment& env, const std::string& path);

std::string version_string();

}  // namespace etalab
