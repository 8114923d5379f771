#pragma once

#include <string>
#include <utility>
#include <vector>

#include "specmatch/mesh.h"
#include "specmatch/pointwise.h"

namespace specmatch {

// Normalized geodesic errors of a computed map against ground truth, with the
// cumulative accuracy curve over a fixed threshold grid.
struct ErrorReport {
  std::vector<double> errors;  // per target vertex, dimensionless
  double mean = 0.0;
  double percentile95 = 0.0;   // nearest-rank
  double max = 0.0;
  std::vector<std::pair<double, double>> curve;  // (threshold, fraction <= threshold)
};

inline constexpr double kCurveMaxThreshold = 0.25;
inline constexpr double kCurveStep = 0.0025;

// error(y) = d_geo(map(y), gt(y)) / sqrt(total source area). Distances are
// graph geodesics on the edge graph; unreachable pairs give +infinity, which
// feeds the max and stays above every curve threshold.
ErrorReport geodesic_error(const PointMap& map, const PointMap& gt,
                           const TriangleMesh& source_mesh);

// Pearson correlation; throws Error(numerical) for constant or too-short series.
double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

void save_error_report_json(const std::string& path, const ErrorReport& report);
void save_error_curve_csv(const std::string& path, const ErrorReport& report);

}  // namespace specmatch
