#include "etalab/io.hpp"

#include <cstdio>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "etalab/error.hpp"

namespace etalab::io {

using nlohmann::json;

namespace {

json segment_json(const Segment& s) { return json::array({s.tail.i, s.tail.j, s.head.i, s.head.j}); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Route route_from_indices(const RoadNetwork& net, std::vector<SegmentIndex> segs) {
  if (segs.empty()) throw InvalidArgument("empty route in dataset");
  for (SegmentIndex s : segs) {
    if (s < 0 || static_cast<std::size_t>(s) >= net.segment_count()) throw InvalidArgument("segment out of range");
  }
  Route r;
  r.origin = net.segment(segs.front()).tail;
  r.destination = net.segment(segs.back()).head;
  r.segments = std::move(segs);
  validate_route(net, r);
  return r;
}

}  // namespace

void write_network(const RoadNetwork& net, std::ostream& out) {
  json j;
  j["p"] = net.grid_size();
  j["segments"] = json::array();
  for (const auto& s : net.segments()) j["segments"].push_back(segment_json(s));
  out << j.dump() << "\n";
}

RoadNetwork read_network(std::istream& in) {
  try {
    const json j = json::parse(in);
    std::vector<Segment> segs;
    for (const auto& s : j.at("segments")) {
      segs.push_back({{s.at(0).get<int>(), s.at(1).get<int>()}, {s.at(2).get<int>(), s.at(3).get<int>()}});
    }
    return RoadNetwork::from_segments(j.at("p").get<int>(), std::move(segs));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad network JSON: ") + e.what());
  }
}

void write_covariance(const CovarianceModel& cov, std::ostream& out) {
  const auto m = cov.dimension();
  for (std::size_t k = 0; k < m; ++k) out << (k ? "," : "") << k;
  out << "\n";
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c <= r; ++c) {
      out << (c ? "," : "") << fmt(cov(static_cast<SegmentIndex>(r), static_cast<SegmentIndex>(c)));
    }
    out << "\n";
  }
}

CovarianceModel read_covariance(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty covariance CSV");
  std::size_t m = 0;
  {
    std::istringstream is(line);
    std::string cell;
    while (std::getline(is, cell, ',')) {
      if (std::stoul(cell) != m) throw InvalidArgument("covariance header must list 0..m-1");
      ++m;
    }
  }
  const auto n = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (!std::getline(in, line)) throw InvalidArgument("covariance CSV is truncated");
    std::istringstream is(line);
    std::string cell;
    Eigen::Index c = 0;
    while (std::getline(is, cell, ',')) {
      if (c > r) throw InvalidArgument("covariance row " + std::to_string(r) + " is too long");
      sigma(r, c) = std::stod(cell);
      sigma(c, r) = sigma(r, c);
      ++c;
    }
    if (c != r + 1) throw InvalidArgument("covariance row " + std::to_string(r) + " is too short");
  }
  return CovarianceModel(std::move(sigma), "csv");
}

void write_dataset(const TripDataset& ds, std::ostream& out) {
  const bool times = ds.has_times() && !ds.empty();
  for (std::size_t n = 0; n < ds.size(); ++n) {
    json j;
    j["route"] = ds.route(n).segments;
    if (times) {
      // Round-trip exact doubles.
      std::string t = "[";
      const auto v = ds.times(n);
      for (std::size_t k = 0; k < v.size(); ++k) t += (k ? "," : "") + fmt(v[k]);
      t += "]";
      j["times"] = json::parse(t);
    }
    out << j.dump() << "\n";
  }
}

TripDataset read_dataset(const RoadNetwork& net, std::istream& in) {
  std::vector<Route> routes;
  std::vector<std::vector<double>> times;
  std::string line;
  bool with_times = true;
  try {
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const json j = json::parse(line);
      routes.push_back(route_from_indices(net, j.at("route").get<std::vector<SegmentIndex>>()));
      if (j.contains("times")) {
        times.push_back(j.at("times").get<std::vector<double>>());
      } else {
        with_times = false;
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad dataset line: ") + e.what());
  }
  if (with_times && !routes.empty()) return TripDataset(net.segment_count(), std::move(routes), std::move(times));
  return TripDataset(net.segment_count(), std::move(routes));
}

std::string risk_json(const std::string& estimator, const Route& y, const RiskReport& report) {
  nlohmann::ordered_json j;
  j["estimator"] = estimator;
  j["route"] = y.segments;
  j["variance"] = report.variance;
  j["bias2"] = report.bias2;
  j["total"] = report.total;
  return j.dump();
}

std::string explain_json(const Prediction& form, const Route& y, const RoadNetwork& net) {
  nlohmann::ordered_json j;
  j["route"] = y.segments;
  j["intercept"] = form.intercept;
  j["terms"] = nlohmann::ordered_json::array();
  for (const auto& c : form.coefficients) {
    const auto& s = net.segment(c.segment);
    nlohmann::ordered_json t;
    t["trip"] = c.trip + 1;
    t["segment"] = c.segment;
    t["from"] = {s.tail.i, s.tail.j};
    t["to"] = {s.head.i, s.head.j};
    t["coefficient"] = c.coefficient;
    j["terms"].push_back(t);
  }
  return j.dump(2);
}

}  // namespace etalab::io
