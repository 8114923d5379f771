#pragma once

// Shared helpers for the test suites: random instances, finite-difference
// oracles, and a dense complete-basis builder kept independent of the
// library's iterative eigensolver.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "specmatch/common.h"
#include "specmatch/mesh.h"
#include "specmatch/spectral.h"

namespace test_support {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <class S>
MatX<S> random_matrix(int rows, int cols, specmatch::Rng& rng, double scale = 1.0) {
  MatX<S> m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = S(scale * rng.normal());
  return m;
}

// Largest elementwise relative deviation against a reference, with an absolute
// floor tied to the reference's own scale so near-zero entries do not blow up.
inline double max_rel_error(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& reference) {
  double scale = std::max(reference.cwiseAbs().maxCoeff(), 1e-12);
  double worst = 0.0;
  for (int i = 0; i < actual.rows(); ++i)
    for (int j = 0; j < actual.cols(); ++j) {
      double denom = std::max(std::abs(reference(i, j)), 1e-6 * scale);
      worst = std::max(worst, std::abs(actual(i, j) - reference(i, j)) / denom);
    }
  return worst;
}

// Central finite differences of a scalar function over a matrix argument.
inline Eigen::MatrixXd finite_difference(const std::function<double(const Eigen::MatrixXd&)>& f,
                                         Eigen::MatrixXd at, double h = 1e-5) {
  Eigen::MatrixXd grad(at.rows(), at.cols());
  for (int i = 0; i < at.rows(); ++i)
    for (int j = 0; j < at.cols(); ++j) {
      double keep = at(i, j);
      at(i, j) = keep + h;
      double up = f(at);
      at(i, j) = keep - h;
      double down = f(at);
      at(i, j) = keep;
      grad(i, j) = (up - down) / (2.0 * h);
    }
  return grad;
}

// Complete (k = n) basis via a dense generalized eigensolve; this is the
// independent oracle used by the permutation and operator-spectrum tests.
inline specmatch::LaplaceBasis dense_complete_basis(const specmatch::TriangleMesh& mesh) {
  Eigen::MatrixXd W = Eigen::MatrixXd(specmatch::cotan_laplacian(mesh));
  Eigen::VectorXd mass = specmatch::vertex_areas(mesh);
  Eigen::MatrixXd M = mass.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(W, M);
  specmatch::LaplaceBasis basis;
  basis.k = mesh.num_vertices();
  basis.mass = mass;
  basis.eigenvalues = es.eigenvalues();
  basis.eigenfunctions = es.eigenvectors();
  basis.mesh_hash = mesh.content_hash();
  return basis;
}

}  // namespace test_support
