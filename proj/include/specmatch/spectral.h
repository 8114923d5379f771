#pragma once

#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "specmatch/eigs.h"
#include "specmatch/mesh.h"

namespace specmatch {

// Truncated Laplace-Beltrami eigensystem of one shape. Immutable once built;
// eigenfunctions are M-orthonormal (Phi^T M Phi = I) with ascending eigenvalues.
struct LaplaceBasis {
  Eigen::VectorXd eigenvalues;   // k, ascending, nonnegative
  Eigen::MatrixXd eigenfunctions;  // n x k
  Eigen::VectorXd mass;          // n, lumped vertex areas
  int k = 0;
  uint64_t mesh_hash = 0;

  int num_vertices() const { return int(eigenfunctions.rows()); }
};

// Cotangent stiffness matrix: W_ij = -(cot a_ij + cot b_ij)/2 on edges,
// diagonal set so rows sum to zero. Near-degenerate cotangents are clamped.
Eigen::SparseMatrix<double> cotan_laplacian(const TriangleMesh& mesh);

// Solves W phi = lambda M phi for the k smallest modes (k < n). Column signs
// are fixed by making each column's largest-magnitude entry positive.
LaplaceBasis compute_basis(const TriangleMesh& mesh, int k, const EigsOptions& opts = {});

// a = Phi^T M f
Eigen::VectorXd project(const LaplaceBasis& basis, const Eigen::VectorXd& f);
// column-wise projection of an n x d matrix of functions
Eigen::MatrixXd project_columns(const LaplaceBasis& basis, const Eigen::MatrixXd& fields);

// f = Phi a
Eigen::VectorXd reconstruct(const LaplaceBasis& basis, const Eigen::VectorXd& coeffs);

// Binary cache keyed by the source mesh's content hash.
void save_basis(const std::string& path, const LaplaceBasis& basis);
LaplaceBasis load_basis(const std::string& path, uint64_t expected_mesh_hash);

}  // namespace specmatch
