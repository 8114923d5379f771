#pragma once

#include <vector>

#include <Eigen/Core>

#include "specmatch/mesh.h"

namespace specmatch {

// CSR adjacency over mesh vertices, weights are edge lengths.
struct AdjacencyGraph {
  int n = 0;
  std::vector<int> offsets;   // n + 1
  std::vector<int> targets;
  std::vector<double> weights;
};

AdjacencyGraph build_adjacency(const std::vector<Edge>& edges, int n);
AdjacencyGraph build_adjacency(const TriangleMesh& mesh);

// Single-source shortest paths; unreachable vertices get +infinity.
Eigen::VectorXd dijkstra(const AdjacencyGraph& graph, int source);

// One row per source. Unreachable targets are flagged with a warning.
Eigen::MatrixXd geodesic_distances_from(const TriangleMesh& mesh, const std::vector<int>& sources);

}  // namespace specmatch
