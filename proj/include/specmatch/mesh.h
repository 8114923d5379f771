#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "specmatch/common.h"

namespace specmatch {

enum class MeshFormat { off, obj };

// Immutable after load; safe to share read-only across workers.
struct TriangleMesh {
  Eigen::MatrixX3d vertices;           // n x 3 positions
  std::vector<std::array<int, 3>> faces;
  std::string name;

  int num_vertices() const { return int(vertices.rows()); }
  int num_faces() const { return int(faces.size()); }
  double bbox_diagonal() const;
  double total_area() const;
  // Content hash of positions and connectivity; used by cache files.
  uint64_t content_hash() const;
};

struct Edge {
  int a, b;        // a < b
  double length;
};

// Throws Error(data) on parse failures (with line numbers) and on degenerate
// faces; repeated or out-of-range indices are fatal, non-manifold edges warn.
TriangleMesh load_mesh(const std::string& path, MeshFormat format);
// Picks OFF/OBJ from the file extension.
TriangleMesh load_mesh(const std::string& path);

// Validates invariants of an in-memory mesh (same checks as load_mesh).
void validate_mesh(const TriangleMesh& mesh);

// Lumped per-vertex areas: one third of incident face area.
Eigen::VectorXd vertex_areas(const TriangleMesh& mesh);

// Unique undirected edges weighted by Euclidean length.
std::vector<Edge> edge_graph(const TriangleMesh& mesh);

double face_area(const TriangleMesh& mesh, int face);

}  // namespace specmatch
