#pragma once

#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "specmatch/common.h"

namespace specmatch {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// A functional map with its direction tag; C maps spectral coefficients of
// functions on `source` to coefficients on `target` (C is k_target x k_source).
struct FunctionalMap {
  Eigen::MatrixXd C;
  std::string source, target;
};

// Ridge scaled by the Gram trace so conditioning is invariant under global
// descriptor rescaling.
template <class S>
S fmap_ridge(const MatX<S>& gram) {
  S tr = gram.trace();
  if (!(tr > S(0))) return S(1e-30);
  return S(1e-9) * tr / S(gram.rows());
}

// Least-squares functional map: argmin_C ||C A1 - A2||_F via normal equations,
// C = A2 A1^T (A1 A1^T + eps I)^{-1}.
template <class S>
MatX<S> solve_fmap(const MatX<S>& A1, const MatX<S>& A2) {
  if (A1.cols() != A2.cols()) throw_usage("solve_fmap: descriptor count mismatch");
  if (A1.cols() < A1.rows())
    warn("solve_fmap: fewer descriptors (" + std::to_string(A1.cols()) + ") than basis size (" +
         std::to_string(A1.rows()) + "); system is underdetermined");
  MatX<S> gram = A1 * A1.transpose();
  gram.diagonal().array() += fmap_ridge(gram);
  Eigen::LDLT<MatX<S>> ldlt(gram);
  // C^T = G^{-1} A1 A2^T
  MatX<S> ct = ldlt.solve(A1 * A2.transpose());
  return ct.transpose();
}

// Adjoint of solve_fmap: given dE/dC, returns (dE/dA1, dE/dA2). The ridge is
// treated as constant; its dependence on A1 is scaled by 1e-9 and far below
// the accuracy of interest.
template <class S>
std::pair<MatX<S>, MatX<S>> solve_fmap_backward(const MatX<S>& A1, const MatX<S>& A2,
                                                const MatX<S>& C, const MatX<S>& grad_c) {
  if (grad_c.rows() != C.rows() || grad_c.cols() != C.cols())
    throw_usage("solve_fmap_backward: gradient shape mismatch");
  if (A1.cols() != A2.cols() || C.rows() != A2.rows() || C.cols() != A1.rows())
    throw_usage("solve_fmap_backward: operand shape mismatch");
  MatX<S> gram = A1 * A1.transpose();
  gram.diagonal().array() += fmap_ridge(gram);
  Eigen::LDLT<MatX<S>> ldlt(gram);
  MatX<S> h = ldlt.solve(grad_c.transpose());  // k1 x k2
  MatX<S> grad_a2 = h.transpose() * A1;
  MatX<S> grad_a1 = h * A2 - C.transpose() * (h.transpose() * A1) - h * (C * A1);
  return {std::move(grad_a1), std::move(grad_a2)};
}

// argmin_C ||C A1 - A2||^2 + alpha ||C Lam1 - Lam2 C||^2. The commutator term
// is diagonal in the eigenvalues, so the system decouples into one solve per
// row of C.
template <class S>
MatX<S> solve_fmap_regularized(const MatX<S>& A1, const MatX<S>& A2, const VecX<S>& lambda1,
                               const VecX<S>& lambda2, S alpha) {
  if (A1.cols() != A2.cols()) throw_usage("solve_fmap_regularized: descriptor count mismatch");
  if (lambda1.size() != A1.rows() || lambda2.size() != A2.rows())
    throw_usage("solve_fmap_regularized: eigenvalue vector size mismatch");
  if (alpha < S(0)) throw_usage("solve_fmap_regularized: alpha must be nonnegative");
  const int k1 = int(A1.rows()), k2 = int(A2.rows());
  MatX<S> gram = A1 * A1.transpose();
  const S ridge = fmap_ridge(gram);
  MatX<S> rhs = A1 * A2.transpose();  // k1 x k2
  MatX<S> C(k2, k1);
  MatX<S> system(k1, k1);
  for (int i = 0; i < k2; ++i) {
    system = gram;
    system.diagonal().array() +=
        ridge + alpha * (lambda1.array() - lambda2[i]).square();
    Eigen::LDLT<MatX<S>> ldlt(system);
    C.row(i) = ldlt.solve(rhs.col(i)).transpose();
  }
  return C;
}

// CSV serialization of a functional map (k2 rows x k1 columns).
void save_fmap_csv(const std::string& path, const FunctionalMap& fmap);
FunctionalMap load_fmap_csv(const std::string& path);

}  // namespace specmatch
