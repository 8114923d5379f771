#include "specmatch/pointwise.h"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

#include "specmatch/kdtree.h"

namespace specmatch {

PointMap fmap_to_p2p(const Eigen::MatrixXd& c12, const LaplaceBasis& basis1,
                     const LaplaceBasis& basis2) {
  if (c12.cols() != basis1.k || c12.rows() != basis2.k)
    throw_usage("fmap_to_p2p: map dimensions do not match the bases");
  if (basis1.k < 1) throw_usage("fmap_to_p2p: empty basis");
  Eigen::MatrixXd embedded = basis2.eigenfunctions * c12;  // n2 x k1
  PointMap map;
  map.target_to_source.resize(size_t(basis2.num_vertices()));
  std::vector<int> nn = nearest_rows(basis1.eigenfunctions, embedded);
  map.target_to_source.assign(nn.begin(), nn.end());
  return map;
}

IcpResult icp_refine(const Eigen::MatrixXd& c12, const LaplaceBasis& basis1,
                     const LaplaceBasis& basis2, int max_iters) {
  if (basis1.k != basis2.k)
    throw_usage("icp_refine: refinement assumes a square map (k1 == k2)");
  if (max_iters < 1) throw_usage("icp_refine: need at least one iteration");

  const int n2 = basis2.num_vertices();
  IcpResult result;
  result.c12 = c12;
  PointMap map = fmap_to_p2p(result.c12, basis1, basis2);

  auto mean_sq_residual = [&](const Eigen::MatrixXd& c, const PointMap& t) {
    Eigen::MatrixXd embedded = basis2.eigenfunctions * c;
    double total = 0.0;
    for (int y = 0; y < n2; ++y)
      total +=
          (embedded.row(y) - basis1.eigenfunctions.row(t.target_to_source[size_t(y)])).squaredNorm();
    return total / double(n2);
  };
  result.residual_trace.push_back(mean_sq_residual(result.c12, map));

  for (int iter = 0; iter < max_iters; ++iter) {
    ++result.iterations;
    // Orthogonal Procrustes: C <- argmin_{Q orthogonal} ||Q Phi1[T]^T - Phi2^T||.
    Eigen::MatrixXd selected(n2, basis1.k);
    for (int y = 0; y < n2; ++y)
      selected.row(y) = basis1.eigenfunctions.row(map.target_to_source[size_t(y)]);
    Eigen::MatrixXd cross = basis2.eigenfunctions.transpose() * selected;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
    result.c12 = svd.matrixU() * svd.matrixV().transpose();

    PointMap next = fmap_to_p2p(result.c12, basis1, basis2);
    result.residual_trace.push_back(mean_sq_residual(result.c12, next));
    bool fixed_point = next.target_to_source == map.target_to_source;
    map = std::move(next);
    if (fixed_point) break;
  }
  result.map = std::move(map);
  return result;
}

Eigen::MatrixXd p2p_to_fmap(const PointMap& map, const LaplaceBasis& basis1,
                            const LaplaceBasis& basis2) {
  if (map.size() != basis2.num_vertices())
    throw_usage("p2p_to_fmap: map length does not match the target mesh");
  Eigen::MatrixXd selected(map.size(), basis1.k);
  for (int y = 0; y < map.size(); ++y) {
    int idx = map.target_to_source[size_t(y)];
    if (idx < 0 || idx >= basis1.num_vertices())
      throw_data("p2p_to_fmap: map entry " + std::to_string(y) + " = " + std::to_string(idx) +
                 " is out of range");
    selected.row(y) = basis1.eigenfunctions.row(idx);
  }
  return basis2.eigenfunctions.transpose() * (basis2.mass.asDiagonal() * selected);
}

void save_point_map(const std::string& path, const PointMap& map) {
  write_file_atomic(path, [&](std::ostream& out) {
    if (!map.source.empty() || !map.target.empty())
      out << "# source=" << map.source << " target=" << map.target
          << " (entry y = matched source vertex for target vertex y)\n";
    for (int idx : map.target_to_source) out << idx << '\n';
  });
}

PointMap load_point_map(const std::string& path, int expected_n2, int n1_bound) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open point map '" + path + "'");
  PointMap map;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        if (tok.rfind("source=", 0) == 0) map.source = tok.substr(7);
        if (tok.rfind("target=", 0) == 0) map.target = tok.substr(7);
      }
      continue;
    }
    char* end = nullptr;
    long idx = std::strtol(line.c_str(), &end, 10);
    if (end == line.c_str())
      throw_data(path + ":" + std::to_string(line_no) + ": expected a vertex index");
    if (idx < 0 || (n1_bound >= 0 && idx >= n1_bound))
      throw_data(path + ":" + std::to_string(line_no) + ": index " + std::to_string(idx) +
                 " out of range");
    map.target_to_source.push_back(int(idx));
  }
  if (expected_n2 >= 0 && map.size() != expected_n2)
    throw_data("point map '" + path + "' has " + std::to_string(map.size()) +
               " entries, expected " + std::to_string(expected_n2));
  return map;
}

}  // namespace specmatch
