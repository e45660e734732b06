#include "etalab/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "etalab/error.hpp"

namespace etalab {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kPsdRelTol = 1e-8;

void check_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("covariance must be square");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < r; ++c) {
      if (std::abs(m(r, c) - m(c, r)) > kSymmetryTol) {
        std::ostringstream os;
        os << "covariance not symmetric at (" << r << "," << c << ")";
        throw InvalidArgument(os.str());
      }
    }
  }
}

void check_psd(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("eigen-decomposition failed");
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo < -kPsdRelTol * std::max(hi, 0.0) || (hi <= 0.0 && lo < 0.0)) {
    std::ostringstream os;
    os << "covariance is not positive semidefinite (min eigenvalue " << lo << ")";
    throw NumericError(os.str());
  }
}

void check_finite(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw NumericError("covariance has non-finite entries");
}

}  // namespace

void PriorSpec::validate() const {
  if (!(tau2 > 0.0) || !std::isfinite(tau2)) throw InvalidArgument("prior variance tau2 must be > 0");
  if (!std::isfinite(mu)) throw InvalidArgument("prior mean must be finite");
}

CovarianceModel::CovarianceModel(Eigen::MatrixXd sigma, std::string provenance)
    : CovarianceModel(std::move(sigma), std::move(provenance), true) {}

CovarianceModel::CovarianceModel(Eigen::MatrixXd sigma, std::string provenance, bool check)
    : sigma_(std::move(sigma)), provenance_(std::move(provenance)), cache_(std::make_shared<Cache>()) {
  check_finite(sigma_);
  check_symmetric(sigma_);
  if (check) check_psd(sigma_);
}

CovarianceModel CovarianceModel::trusted(Eigen::MatrixXd sigma, std::string provenance) {
  return CovarianceModel(std::move(sigma), std::move(provenance), false);
}

const Eigen::MatrixXd& CovarianceModel::precision() const {
  std::call_once(cache_->once, [this] {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
    if (llt.info() != Eigen::Success) {
      cache_->failure = "covariance is singular; precision matrix unavailable";
      return;
    }
    cache_->precision = llt.solve(Eigen::MatrixXd::Identity(sigma_.rows(), sigma_.cols()));
  });
  if (!cache_->precision) throw NumericError(cache_->failure);
  return *cache_->precision;
}

double CovarianceModel::pair_sum(std::span<const SegmentIndex> S, std::span<const SegmentIndex> T) const {
  double total = 0.0;
  for (SegmentIndex s : S) {
    for (SegmentIndex t : T) total += sigma_(s, t);
  }
  return total;
}

Eigen::MatrixXd CovarianceModel::restrict(std::span<const SegmentIndex> segments) const {
  const auto n = static_cast<Eigen::Index>(segments.size());
  Eigen::MatrixXd block(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) block(a, b) = sigma_(segments[a], segments[b]);
  }
  return block;
}

Eigen::MatrixXd normalized_laplacian(const SegmentGraph& g, LaplacianVariant variant) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Eigen::VectorXd d(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    d(k) = g.degree(static_cast<int>(k));
    if (d(k) <= 0) {
      // Report in segment terms where possible.
      auto seg = std::find(g.node_of_segment.begin(), g.node_of_segment.end(), static_cast<int>(k));
      std::ostringstream os;
      os << "graph node " << k;
      if (seg != g.node_of_segment.end()) os << " (segment " << (seg - g.node_of_segment.begin()) << ")";
      os << " has degree 0; normalized Laplacian undefined";
      throw NumericError(os.str());
    }
  }
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    L(a, a) = d(a);
    for (int b : g.adjacency[static_cast<std::size_t>(a)]) L(a, b) -= 1.0;
  }
  const Eigen::VectorXd left = d.cwiseSqrt().cwiseInverse();
  const Eigen::VectorXd right = variant == LaplacianVariant::kSymmetric ? left : Eigen::VectorXd(d.cwiseSqrt());
  return left.asDiagonal() * L * right.asDiagonal();
}

CovarianceModel diffusion_covariance(const SegmentGraph& g, double u, double v, double white) {
  if (!(u >= 0.0) || !(v >= 0.0) || !(white >= 0.0)) {
    throw InvalidArgument("diffusion parameters must be non-negative");
  }
  const Eigen::MatrixXd L = normalized_laplacian(g, LaplacianVariant::kSymmetric);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  if (es.info() != Eigen::Success) throw NumericError("Laplacian eigen-decomposition failed");
  const Eigen::VectorXd decay = (-v * es.eigenvalues().array()).exp().matrix();
  Eigen::MatrixXd kernel = es.eigenvectors() * decay.asDiagonal() * es.eigenvectors().transpose();
  kernel = 0.5 * (kernel + kernel.transpose());

  const auto m = static_cast<Eigen::Index>(g.node_of_segment.size());
  Eigen::MatrixXd sigma(m, m);
  for (Eigen::Index s = 0; s < m; ++s) {
    for (Eigen::Index t = 0; t < m; ++t) {
      sigma(s, t) = u * kernel(g.node_of_segment[s], g.node_of_segment[t]);
    }
    sigma(s, s) += white;
  }
  if (!sigma.allFinite()) throw NumericError("diffusion covariance is not finite");
  std::ostringstream os;
  os << "diffusion(u=" << u << ",v=" << v << ",white=" << white << ",rule=" << to_string(g.rule) << ")";
  // exp of a symmetric matrix is PSD; lifting by a 0/1 selection keeps it PSD.
  return CovarianceModel::trusted(std::move(sigma), os.str());
}

std::string to_string(GramLaw law) {
  return law == GramLaw::kUniformMinusOneOne ? "unif_neg1_1" : "unif_0_1";
}

GramLaw parse_gram_law(const std::string& name) {
  if (name == "unif_neg1_1") return GramLaw::kUniformMinusOneOne;
  if (name == "unif_0_1") return GramLaw::kUniformZeroOne;
  throw InvalidArgument("unknown gram law '" + name + "'");
}

CovarianceModel gram_covariance(std::size_t m, GramLaw law, std::uint64_t seed) {
  if (m < 1) throw InvalidArgument("gram covariance dimension must be >= 1");
  std::mt19937_64 rng(seed);
  const double lo = law == GramLaw::kUniformMinusOneOne ? -1.0 : 0.0;
  std::uniform_real_distribution<double> draw(lo, 1.0);
  const auto n = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) K(r, c) = draw(rng);
  }
  Eigen::MatrixXd sigma = (K.transpose() * K) / static_cast<double>(m * m);
  sigma = 0.5 * (sigma + sigma.transpose());
  return CovarianceModel::trusted(std::move(sigma), "gram(" + to_string(law) + ",seed=" + std::to_string(seed) + ")");
}

CovarianceModel explicit_covariance(std::size_t m, std::span<const CovarianceEntry> entries, double default_diag) {
  const auto n = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n);
  std::vector<bool> diag_set(m, false);
  for (const auto& e : entries) {
    if (e.s < 0 || e.t < 0 || e.s >= n || e.t >= n) throw InvalidArgument("covariance entry index out of range");
    sigma(e.s, e.t) = e.value;
    sigma(e.t, e.s) = e.value;
    if (e.s == e.t) diag_set[static_cast<std::size_t>(e.s)] = true;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!diag_set[static_cast<std::size_t>(k)]) sigma(k, k) = default_diag;
  }
  return CovarianceModel(std::move(sigma), "explicit(" + std::to_string(entries.size()) + " entries)");
}

AssumptionDiagnostics assumption_diagnostics(const CovarianceModel& cov,
                                             std::span<const std::vector<SegmentIndex>> routes) {
  AssumptionDiagnostics d;
  d.max_row_abs_sigma = cov.sigma().cwiseAbs().rowwise().sum().maxCoeff();
  try {
    d.max_row_abs_precision = cov.precision().cwiseAbs().rowwise().sum().maxCoeff();
  } catch (const NumericError&) {
  }
  if (!routes.empty()) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& y : routes) lo = std::min(lo, cov.pair_sum(y, y));
    d.min_route_variance = lo;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.sigma(), Eigen::EigenvaluesOnly);
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  d.max_eigenvalue = es.eigenvalues().maxCoeff();
  return d;
}

}  // namespace etalab
