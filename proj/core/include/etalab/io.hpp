#pragma once

#include <iosfwd>
#include <string>

#include "etalab/covariance.hpp"
#include "etalab/estimators.hpp"
#include "etalab/network.hpp"
#include "etalab/risk.hpp"
#include "etalab/trips.hpp"

namespace etalab::io {

/// {"p": 3, "segments": [[ti, tj, hi, hj], ...]} in index order.
void write_network(const RoadNetwork& net, std::ostream& out);
RoadNetwork read_network(std::istream& in);

/// Lower triangle as CSV: a header row of segment indices, then row r holds
/// sigma(r, 0..r).
void write_covariance(const CovarianceModel& cov, std::ostream& out);
CovarianceModel read_covariance(std::istream& in);

/// One trip per line: {"route": [segment indices], "times": [...]}.
/// Times are omitted when the dataset has none.
void write_dataset(const TripDataset& ds, std::ostream& out);
TripDataset read_dataset(const RoadNetwork& net, std::istream& in);

/// {"estimator", "route", "variance", "bias2", "total"}.
std::string risk_json(const std::string& estimator, const Route& y, const RiskReport& report);

/// Per-observation coefficients and intercept of a linear-form prediction.
std::string explain_json(const Prediction& form, const Route& y, const RoadNetwork& net);

}  // namespace etalab::io
