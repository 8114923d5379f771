#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "specmatch/fmap.h"
#include "specmatch/spectral.h"

namespace specmatch {

// Vertex-to-vertex correspondence T: S2 -> S1. Entry y holds the index of the
// matched vertex on S1 (the g = f o T composition convention for C12).
struct PointMap {
  std::vector<int> target_to_source;
  std::string source, target;

  int size() const { return int(target_to_source.size()); }
};

// Nearest-neighbor conversion in the spectral embedding: row y of Phi2*C12 is
// matched against the rows of Phi1; ties break to the smallest index.
PointMap fmap_to_p2p(const Eigen::MatrixXd& c12, const LaplaceBasis& basis1,
                     const LaplaceBasis& basis2);

struct IcpResult {
  Eigen::MatrixXd c12;               // orthogonal after refinement
  PointMap map;
  std::vector<double> residual_trace;  // mean squared NN residual per iteration
  int iterations = 0;
};

// Alternates nearest-neighbor correspondence with an orthogonal Procrustes
// update of C until the map is a fixed point (or max_iters). Requires a
// square map (k1 == k2).
IcpResult icp_refine(const Eigen::MatrixXd& c12, const LaplaceBasis& basis1,
                     const LaplaceBasis& basis2, int max_iters = 30);

// C12 = Phi2^+ Phi1[T] with Phi2^+ = Phi2^T M2.
Eigen::MatrixXd p2p_to_fmap(const PointMap& map, const LaplaceBasis& basis1,
                            const LaplaceBasis& basis2);

// One 0-based source index per line; optional leading '#' comment records the
// shape names. Loader validates the index range when n1 >= 0.
void save_point_map(const std::string& path, const PointMap& map);
PointMap load_point_map(const std::string& path, int expected_n2 = -1, int n1_bound = -1);

}  // namespace specmatch
