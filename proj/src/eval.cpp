#include "specmatch/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "specmatch/geodesics.h"

namespace specmatch {

ErrorReport geodesic_error(const PointMap& map, const PointMap& gt,
                           const TriangleMesh& source_mesh) {
  if (map.size() != gt.size())
    throw_data("geodesic_error: map has " + std::to_string(map.size()) + " entries, ground truth " +
               std::to_string(gt.size()));
  const int n1 = source_mesh.num_vertices();
  for (int y = 0; y < gt.size(); ++y) {
    if (gt.target_to_source[size_t(y)] < 0 || gt.target_to_source[size_t(y)] >= n1)
      throw_data("geodesic_error: ground-truth entry " + std::to_string(y) + " out of range");
    if (map.target_to_source[size_t(y)] < 0 || map.target_to_source[size_t(y)] >= n1)
      throw_data("geodesic_error: map entry " + std::to_string(y) + " out of range");
  }
  const double norm = std::sqrt(source_mesh.total_area());
  if (!(norm > 0.0)) throw_data("geodesic_error: source mesh has zero area");

  // One Dijkstra per distinct ground-truth vertex.
  std::vector<int> sources;
  std::unordered_map<int, int> source_row;
  for (int idx : gt.target_to_source)
    if (source_row.emplace(idx, int(sources.size())).second) sources.push_back(idx);
  Eigen::MatrixXd dists = geodesic_distances_from(source_mesh, sources);

  ErrorReport report;
  report.errors.resize(size_t(map.size()));
  for (int y = 0; y < map.size(); ++y) {
    int row = source_row.at(gt.target_to_source[size_t(y)]);
    report.errors[size_t(y)] = dists(row, map.target_to_source[size_t(y)]) / norm;
  }

  double sum = 0.0;
  report.max = 0.0;
  for (double e : report.errors) {
    sum += e;
    report.max = std::max(report.max, e);
  }
  report.mean = sum / double(report.errors.size());
  std::vector<double> sorted = report.errors;
  std::sort(sorted.begin(), sorted.end());
  size_t rank = size_t(std::ceil(0.95 * double(sorted.size())));
  report.percentile95 = sorted[std::min(sorted.size() - 1, rank == 0 ? 0 : rank - 1)];

  const int steps = int(std::round(kCurveMaxThreshold / kCurveStep));
  report.curve.reserve(size_t(steps) + 1);
  size_t cursor = 0;
  for (int s = 0; s <= steps; ++s) {
    double threshold = double(s) * kCurveStep;
    while (cursor < sorted.size() && sorted[cursor] <= threshold) ++cursor;
    report.curve.emplace_back(threshold, double(cursor) / double(sorted.size()));
  }
  return report;
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw_usage("pearson_correlation: series lengths differ");
  if (a.size() < 3) throw_usage("pearson_correlation: need at least 3 samples");
  const double n = double(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - mean_a, db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0)
    throw_numerical("pearson_correlation: undefined for a constant series");
  return cov / std::sqrt(var_a * var_b);
}

void save_error_report_json(const std::string& path, const ErrorReport& report) {
  nlohmann::json j;
  j["mean"] = report.mean;
  j["percentile95"] = report.percentile95;
  j["max"] = report.max;
  j["count"] = report.errors.size();
  write_file_atomic(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

void save_error_curve_csv(const std::string& path, const ErrorReport& report) {
  write_file_atomic(path, [&](std::ostream& out) {
    out << "threshold,fraction\n";
    out.precision(10);
    for (const auto& [threshold, fraction] : report.curve)
      out << threshold << ',' << fraction << '\n';
  });
}

}  // namespace specmatch
