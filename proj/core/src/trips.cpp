#include "etalab/trips.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_set>

#include "etalab/error.hpp"

namespace etalab {

namespace {

std::string describe(Vertex v) {
  std::ostringstream os;
  os << "(" << v.i << "," << v.j << ")";
  return os.str();
}

int count_intersection(std::span<const int> a, std::span<const int> b) {
  int n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

int sign(int x) { return (x > 0) - (x < 0); }

// Walks from a towards b along i first (i_first) or j first.
std::vector<Vertex> l_path(Vertex a, Vertex b, bool i_first) {
  std::vector<Vertex> path{a};
  Vertex cur = a;
  auto walk_i = [&] {
    while (cur.i != b.i) {
      cur.i += sign(b.i - cur.i);
      path.push_back(cur);
    }
  };
  auto walk_j = [&] {
    while (cur.j != b.j) {
      cur.j += sign(b.j - cur.j);
      path.push_back(cur);
    }
  };
  if (i_first) {
    walk_i();
    walk_j();
  } else {
    walk_j();
    walk_i();
  }
  return path;
}

}  // namespace

bool Route::contains(SegmentIndex s) const {
  return std::find(segments.begin(), segments.end(), s) != segments.end();
}

Route route_from_path(const RoadNetwork& net, std::span<const Vertex> path) {
  if (path.size() < 2) throw InvalidArgument("route path needs at least two vertices");
  Route r;
  r.origin = path.front();
  r.destination = path.back();
  r.segments.reserve(path.size() - 1);
  for (std::size_t k = 1; k < path.size(); ++k) r.segments.push_back(net.index_of(path[k - 1], path[k]));
  validate_route(net, r);
  return r;
}

void validate_route(const RoadNetwork& net, const Route& route) {
  if (route.segments.empty()) throw InvalidArgument("route is empty");
  std::unordered_set<SegmentIndex> seen;
  for (std::size_t k = 0; k < route.segments.size(); ++k) {
    const SegmentIndex s = route.segments[k];
    if (s < 0 || static_cast<std::size_t>(s) >= net.segment_count()) {
      throw InvalidArgument("route segment index " + std::to_string(s) + " out of range");
    }
    if (!seen.insert(s).second) throw InvalidArgument("route repeats segment " + std::to_string(s));
    if (k > 0 && net.segment(route.segments[k - 1]).head != net.segment(s).tail) {
      throw InvalidArgument("route is not a chain at position " + std::to_string(k));
    }
  }
  if (net.segment(route.segments.front()).tail != route.origin) {
    throw InvalidArgument("route origin " + describe(route.origin) + " does not match its first segment");
  }
  if (net.segment(route.segments.back()).head != route.destination) {
    throw InvalidArgument("route destination " + describe(route.destination) + " does not match its last segment");
  }
}

void ODLaw::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("OD concentration alpha must be > 0");
  if (p < 1) throw InvalidArgument("grid size p must be >= 1");
}

double od_pmf(const ODLaw& law, int coord) {
  law.validate();
  if (coord < 0 || coord > law.p) return 0.0;
  const double p = law.p;
  const double k = coord;
  const double a = law.alpha;
  auto log_beta = [](double x, double y) { return std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y); };
  const double log_choose = std::lgamma(p + 1) - std::lgamma(k + 1) - std::lgamma(p - k + 1);
  return std::exp(log_choose + log_beta(a + k, a + p - k) - log_beta(a, a));
}

std::vector<double> ODLaw::coordinate_pmf() const {
  std::vector<double> pmf(static_cast<std::size_t>(p) + 1);
  for (int k = 0; k <= p; ++k) pmf[static_cast<std::size_t>(k)] = od_pmf(*this, k);
  return pmf;
}

std::vector<Route> min_turn_routes(const RoadNetwork& net, Vertex origin, Vertex destination) {
  if (!net.contains(origin) || !net.contains(destination)) throw InvalidArgument("OD vertex outside the grid");
  if (origin == destination) throw InvalidArgument("origin equals destination");
  std::vector<Route> out;
  if (origin.i == destination.i || origin.j == destination.j) {
    const auto path = l_path(origin, destination, true);
    out.push_back(route_from_path(net, path));
  } else {
    const auto a = l_path(origin, destination, true);
    const auto b = l_path(origin, destination, false);
    out.push_back(route_from_path(net, a));
    out.push_back(route_from_path(net, b));
  }
  return out;
}

Route sample_route(const ODLaw& law, const RoadNetwork& net, Rng& rng) {
  law.validate();
  if (law.p != net.grid_size()) throw InvalidArgument("OD law grid size does not match the network");
  const auto pmf = law.coordinate_pmf();
  std::discrete_distribution<int> coord(pmf.begin(), pmf.end());
  constexpr int kMaxAttempts = 1'000'000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const Vertex o{coord(rng), coord(rng)};
    const Vertex d{coord(rng), coord(rng)};
    if (o == d) continue;
    auto routes = min_turn_routes(net, o, d);
    if (routes.size() == 1) return std::move(routes.front());
    std::uniform_int_distribution<std::size_t> pick(0, routes.size() - 1);
    return std::move(routes[pick(rng)]);
  }
  throw NumericError("could not draw distinct origin and destination");
}

TripDataset::TripDataset(std::size_t segment_count, std::vector<Route> routes)
    : routes_(std::move(routes)), trips_by_segment_(segment_count) {
  index();
}

TripDataset::TripDataset(std::size_t segment_count, std::vector<Route> routes,
                         std::vector<std::vector<double>> times, std::vector<double> theta)
    : routes_(std::move(routes)),
      times_(std::move(times)),
      theta_(std::move(theta)),
      trips_by_segment_(segment_count) {
  if (times_.size() != routes_.size()) throw InvalidArgument("one time vector per trip is required");
  for (std::size_t n = 0; n < routes_.size(); ++n) {
    if (times_[n].size() != routes_[n].size()) {
      throw InvalidArgument("trip " + std::to_string(n) + " has " + std::to_string(times_[n].size()) +
                            " times for " + std::to_string(routes_[n].size()) + " segments");
    }
  }
  if (!theta_.empty() && theta_.size() != segment_count) throw InvalidArgument("theta size mismatch");
  index();
}

void TripDataset::index() {
  const auto m = trips_by_segment_.size();
  for (std::size_t n = 0; n < routes_.size(); ++n) {
    const auto& segs = routes_[n].segments;
    if (segs.empty()) throw InvalidArgument("trip " + std::to_string(n) + " has an empty route");
    for (SegmentIndex s : segs) {
      if (s < 0 || static_cast<std::size_t>(s) >= m) {
        throw InvalidArgument("trip " + std::to_string(n) + " uses unknown segment " + std::to_string(s));
      }
      auto& list = trips_by_segment_[static_cast<std::size_t>(s)];
      if (!list.empty() && list.back() == static_cast<int>(n)) {
        throw InvalidArgument("trip " + std::to_string(n) + " repeats segment " + std::to_string(s));
      }
      list.push_back(static_cast<int>(n));
    }
  }
}

std::span<const int> TripDataset::trips_through(SegmentIndex s) const {
  if (s < 0 || static_cast<std::size_t>(s) >= trips_by_segment_.size()) {
    throw InvalidArgument("segment index " + std::to_string(s) + " out of range");
  }
  return trips_by_segment_[static_cast<std::size_t>(s)];
}

int TripDataset::co_traversals(SegmentIndex s, SegmentIndex t) const {
  if (s == t) return traversals(s);
  return count_intersection(trips_through(s), trips_through(t));
}

std::vector<int> TripDataset::trips_containing(std::span<const SegmentIndex> S) const {
  if (S.empty()) {
    std::vector<int> all(routes_.size());
    for (std::size_t n = 0; n < all.size(); ++n) all[n] = static_cast<int>(n);
    return all;
  }
  // Filter the shortest posting list against the others.
  auto shortest = std::min_element(S.begin(), S.end(), [this](SegmentIndex a, SegmentIndex b) {
    return trips_through(a).size() < trips_through(b).size();
  });
  std::vector<int> out;
  for (int n : trips_through(*shortest)) {
    bool all = true;
    for (SegmentIndex s : S) {
      const auto list = trips_through(s);
      if (!std::binary_search(list.begin(), list.end(), n)) {
        all = false;
        break;
      }
    }
    if (all) out.push_back(n);
  }
  return out;
}

int TripDataset::position_in_trip(std::size_t n, SegmentIndex s) const {
  const auto& segs = routes_.at(n).segments;
  auto it = std::find(segs.begin(), segs.end(), s);
  return it == segs.end() ? -1 : static_cast<int>(it - segs.begin());
}

std::uint64_t SparsePairCounts::key(SegmentIndex s, SegmentIndex t) {
  if (t < s) std::swap(s, t);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s)) << 32) | static_cast<std::uint32_t>(t);
}

SparsePairCounts::SparsePairCounts(const TripDataset& ds) {
  for (const auto& r : ds.routes()) {
    const auto& y = r.segments;
    for (std::size_t a = 0; a < y.size(); ++a) {
      for (std::size_t b = a; b < y.size(); ++b) ++counts_[key(y[a], y[b])];
    }
  }
}

int SparsePairCounts::operator()(SegmentIndex s, SegmentIndex t) const {
  auto it = counts_.find(key(s, t));
  return it == counts_.end() ? 0 : it->second;
}

TripSampler::TripSampler(std::vector<Route> routes, const CovarianceModel& cov)
    : segment_count_(cov.dimension()), routes_(std::move(routes)) {
  std::map<std::vector<SegmentIndex>, std::size_t> seen;
  factor_of_trip_.reserve(routes_.size());
  for (std::size_t n = 0; n < routes_.size(); ++n) {
    const auto& segs = routes_[n].segments;
    for (SegmentIndex s : segs) {
      if (s < 0 || static_cast<std::size_t>(s) >= segment_count_) {
        throw InvalidArgument("trip " + std::to_string(n) + " uses unknown segment " + std::to_string(s));
      }
    }
    auto [it, fresh] = seen.try_emplace(segs, factors_.size());
    if (fresh) {
      // Symmetric square root tolerates singular blocks.
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.restrict(segs));
      if (es.info() != Eigen::Success) throw NumericError("route covariance eigen-decomposition failed");
      const double hi = std::max(es.eigenvalues().maxCoeff(), 0.0);
      const double lo = es.eigenvalues().minCoeff();
      if (lo < -1e-8 * std::max(hi, 1.0)) {
        throw NumericError("covariance block of trip " + std::to_string(n) + " is not PSD");
      }
      const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      factors_.push_back(es.eigenvectors() * root.asDiagonal());
    }
    factor_of_trip_.push_back(it->second);
  }
}

TripDataset TripSampler::draw(const PriorSpec& prior, Rng& rng) const {
  prior.validate();
  std::normal_distribution<double> effect(prior.mu, std::sqrt(prior.tau2));
  std::vector<double> theta(segment_count_);
  for (auto& t : theta) t = effect(rng);
  return draw_given(std::move(theta), rng);
}

TripDataset TripSampler::draw_given(std::vector<double> theta, Rng& rng) const {
  if (theta.size() != segment_count_) throw InvalidArgument("theta size mismatch");
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> times(routes_.size());
  Eigen::VectorXd noise;
  for (std::size_t n = 0; n < routes_.size(); ++n) {
    const auto& segs = routes_[n].segments;
    const auto& F = factors_[factor_of_trip_[n]];
    Eigen::VectorXd w(static_cast<Eigen::Index>(segs.size()));
    for (auto& v : w) v = z(rng);
    noise = F * w;
    auto& out = times[n];
    out.resize(segs.size());
    for (std::size_t k = 0; k < segs.size(); ++k) {
      out[k] = theta[static_cast<std::size_t>(segs[k])] + noise(static_cast<Eigen::Index>(k));
    }
  }
  return TripDataset(segment_count_, routes_, std::move(times), std::move(theta));
}

TripDataset synthesize_times(std::vector<Route> routes, const CovarianceModel& cov, const PriorSpec& prior,
                             Rng& rng) {
  return TripSampler(std::move(routes), cov).draw(prior, rng);
}

int growing_radius(double fraction, int grid_size) {
  if (!(fraction > 0.0) || !std::isfinite(fraction)) throw InvalidArgument("growing fraction must be > 0");
  // 0.1 * 30 is 3.0000000000000004 in binary; do not round that up to 4.
  return static_cast<int>(std::ceil(fraction * grid_size - 1e-9));
}

Neighborhood resolve_neighborhood(const TripDataset& ds, const Route& y, const NeighborhoodSpec& spec,
                                  int grid_size) {
  Neighborhood out;
  out.kind = spec.kind;
  const auto& routes = ds.routes();
  auto collect = [&](auto&& keep) {
    for (std::size_t n = 0; n < routes.size(); ++n) {
      if (keep(routes[n])) out.members.push_back(static_cast<int>(n));
    }
  };
  switch (spec.kind) {
    case NeighborhoodKind::kExactRoute:
      collect([&](const Route& r) { return r.segments == y.segments; });
      break;
    case NeighborhoodKind::kOdExact:
      collect([&](const Route& r) { return r.origin == y.origin && r.destination == y.destination; });
      break;
    case NeighborhoodKind::kOdBall:
    case NeighborhoodKind::kOdBallGrowing: {
      const int c = spec.kind == NeighborhoodKind::kOdBall ? spec.radius : growing_radius(spec.fraction, grid_size);
      if (c < 0) throw InvalidArgument("neighborhood radius must be >= 0");
      out.radius = c;
      collect([&](const Route& r) {
        return manhattan(r.origin, y.origin) <= c && manhattan(r.destination, y.destination) <= c;
      });
      break;
    }
    case NeighborhoodKind::kExplicit:
      out.members = spec.members;
      std::sort(out.members.begin(), out.members.end());
      out.members.erase(std::unique(out.members.begin(), out.members.end()), out.members.end());
      for (int n : out.members) {
        if (n < 0 || static_cast<std::size_t>(n) >= ds.size()) {
          throw InvalidArgument("neighborhood member " + std::to_string(n) + " out of range");
        }
      }
      break;
  }
  return out;
}

RouteCounters counters(const TripDataset& ds, const Route& y, const Neighborhood* nbhd) {
  RouteCounters c;
  c.route = y.segments;
  const auto L = static_cast<Eigen::Index>(y.size());
  c.n.resize(y.size());
  c.n_pair.resize(L, L);
  for (Eigen::Index a = 0; a < L; ++a) {
    c.n[static_cast<std::size_t>(a)] = ds.traversals(y.segments[a]);
    for (Eigen::Index b = a; b < L; ++b) {
      const int v = ds.co_traversals(y.segments[a], y.segments[b]);
      c.n_pair(a, b) = v;
      c.n_pair(b, a) = v;
    }
  }
  if (nbhd == nullptr) return c;

  c.has_neighborhood = true;
  c.members = static_cast<int>(nbhd->members.size());
  c.nbhd_n.assign(y.size(), 0);
  c.nbhd_pair = Eigen::MatrixXi::Zero(L, L);
  std::map<SegmentIndex, int> seg_counts;
  std::unordered_map<SegmentIndex, Eigen::Index> pos;
  for (Eigen::Index a = 0; a < L; ++a) pos.emplace(y.segments[a], a);
  std::vector<Eigen::Index> hit;
  std::size_t total_length = 0;
  for (int n : nbhd->members) {
    const auto& segs = ds.route(static_cast<std::size_t>(n)).segments;
    total_length += segs.size();
    hit.clear();
    for (SegmentIndex s : segs) {
      ++seg_counts[s];
      if (auto it = pos.find(s); it != pos.end()) hit.push_back(it->second);
    }
    for (Eigen::Index a : hit) {
      ++c.nbhd_n[static_cast<std::size_t>(a)];
      for (Eigen::Index b : hit) ++c.nbhd_pair(a, b);
    }
  }
  c.nbhd_segments.assign(seg_counts.begin(), seg_counts.end());
  c.mean_length = c.members > 0 ? static_cast<double>(total_length) / c.members : 0.0;
  return c;
}

int neighborhood_containing_count(const TripDataset& ds, const Neighborhood& nbhd,
                                  std::span<const SegmentIndex> S) {
  int count = 0;
  for (int n : nbhd.members) {
    const auto& r = ds.route(static_cast<std::size_t>(n));
    if (std::all_of(S.begin(), S.end(), [&](SegmentIndex s) { return r.contains(s); })) ++count;
  }
  return count;
}

}  // namespace etalab
