#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "etalab/network.hpp"

namespace etalab {

/// Prior on segment effects: theta_s iid with mean mu and variance tau2.
struct PriorSpec {
  double mu = 1.0;
  double tau2 = 1.0;

  void validate() const;
};

/// Dense symmetric PSD covariance of segment travel-time errors, indexed by
/// segment index. The precision matrix is factorized on first use and cached;
/// copies share the cache.
class CovarianceModel {
 public:
  /// Validates symmetry (1e-10) and PSD (min eigenvalue >= -1e-8 * max).
  CovarianceModel(Eigen::MatrixXd sigma, std::string provenance);

  /// Skips the eigenvalue check; for matrices PSD by construction.
  static CovarianceModel trusted(Eigen::MatrixXd sigma, std::string provenance);

  std::size_t dimension() const { return static_cast<std::size_t>(sigma_.rows()); }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  double operator()(SegmentIndex s, SegmentIndex t) const { return sigma_(s, t); }
  const std::string& provenance() const { return provenance_; }

  /// Inverse of sigma. Throws NumericError when sigma is singular.
  const Eigen::MatrixXd& precision() const;

  /// Sum of sigma(s, t) over s in S, t in T.
  double pair_sum(std::span<const SegmentIndex> S, std::span<const SegmentIndex> T) const;

  /// Restriction of sigma to the given segments, in the given order.
  Eigen::MatrixXd restrict(std::span<const SegmentIndex> segments) const;

 private:
  struct Cache {
    std::once_flag once;
    std::optional<Eigen::MatrixXd> precision;
    std::string failure;
  };

  CovarianceModel(Eigen::MatrixXd sigma, std::string provenance, bool check);

  Eigen::MatrixXd sigma_;
  std::string provenance_;
  std::shared_ptr<Cache> cache_;
};

enum class LaplacianVariant {
  /// D^{-1/2} (D - A) D^{-1/2}; symmetric, spectrum in [0, 2].
  kSymmetric,
  /// D^{-1/2} (D - A) D^{1/2}, the literal printed form. Not symmetric in
  /// general; only for calibration experiments.
  kAsPrinted,
};

/// Normalized Laplacian of the segment graph. Throws NumericError naming the
/// first zero-degree node.
Eigen::MatrixXd normalized_laplacian(const SegmentGraph& g,
                                     LaplacianVariant variant = LaplacianVariant::kSymmetric);

/// Sigma = u * exp(-v * L) + white * I, where exp(-v L) is evaluated on the
/// graph's nodes through the symmetric eigen-decomposition and then lifted to
/// segments with node_of_segment.
CovarianceModel diffusion_covariance(const SegmentGraph& g, double u, double v, double white);

enum class GramLaw { kUniformMinusOneOne, kUniformZeroOne };

std::string to_string(GramLaw law);
GramLaw parse_gram_law(const std::string& name);

/// Sigma = K^T K / m^2 with K an m x m matrix of iid draws from the law.
CovarianceModel gram_covariance(std::size_t m, GramLaw law, std::uint64_t seed);

struct CovarianceEntry {
  SegmentIndex s = 0;
  SegmentIndex t = 0;
  double value = 0.0;
};

/// Explicit covariance over m segments. Each entry sets (s, t) and (t, s);
/// unset diagonals take default_diag, unset off-diagonals are 0. Throws
/// NumericError (quoting the min eigenvalue) when the result is not PSD.
CovarianceModel explicit_covariance(std::size_t m, std::span<const CovarianceEntry> entries,
                                    double default_diag = 1.0);

struct AssumptionDiagnostics {
  double max_row_abs_sigma = 0.0;
  /// Empty when sigma is singular.
  std::optional<double> max_row_abs_precision;
  /// Min over the supplied routes of sum_{s,t in y} sigma(s, t).
  std::optional<double> min_route_variance;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

AssumptionDiagnostics assumption_diagnostics(
    const CovarianceModel& cov, std::span<const std::vector<SegmentIndex>> routes = {});

}  // namespace etalab
