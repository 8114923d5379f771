#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace specmatch {

struct EigsOptions {
  double sigma = -1e-8;     // shift; slightly negative keeps W - sigma*M definite
  double tol = 1e-10;       // relative Ritz residual tolerance
  int max_restarts = 300;
  int dense_threshold = 200;  // below this n, solve densely
};

struct EigsResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // n x k, M-orthonormal
  int restarts = 0;
};

// k smallest eigenpairs of the pencil W x = lambda M x with diagonal positive
// mass M. Shift-invert Lanczos with full reorthogonalization and thick
// restarts; small problems fall back to a dense solve.
EigsResult smallest_eigenpairs(const Eigen::SparseMatrix<double>& W, const Eigen::VectorXd& mass,
                               int k, const EigsOptions& opts = {});

}  // namespace specmatch
