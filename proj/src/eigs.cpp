#include "specmatch/eigs.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "specmatch/common.h"

namespace specmatch {

namespace {

// Symmetrize the pencil with the diagonal mass: S = M^{-1/2} W M^{-1/2}.
Eigen::SparseMatrix<double> mass_scaled(const Eigen::SparseMatrix<double>& W,
                                        const Eigen::VectorXd& inv_sqrt_mass) {
  Eigen::SparseMatrix<double> S = W;
  for (int col = 0; col < S.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(S, col); it; ++it)
      it.valueRef() *= inv_sqrt_mass[it.row()] * inv_sqrt_mass[col];
  return S;
}

EigsResult dense_path(const Eigen::SparseMatrix<double>& W, const Eigen::VectorXd& inv_sqrt_mass,
                      int k) {
  const int n = int(W.rows());
  Eigen::MatrixXd S = Eigen::MatrixXd(W);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) S(i, j) *= inv_sqrt_mass[i] * inv_sqrt_mass[j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw_numerical("dense eigensolver failed");
  EigsResult res;
  res.eigenvalues = es.eigenvalues().head(k);
  res.eigenvectors = inv_sqrt_mass.asDiagonal() * es.eigenvectors().leftCols(k);
  return res;
}

}  // namespace

EigsResult smallest_eigenpairs(const Eigen::SparseMatrix<double>& W, const Eigen::VectorXd& mass,
                               int k, const EigsOptions& opts) {
  const int n = int(W.rows());
  if (W.cols() != n) throw_usage("stiffness matrix must be square");
  if (mass.size() != n) throw_usage("mass vector size mismatch");
  if (k < 1 || k > n) throw_usage("requested " + std::to_string(k) + " eigenpairs of an order-" +
                                  std::to_string(n) + " pencil");
  if ((mass.array() <= 0.0).any()) throw_numerical("mass matrix has non-positive entries");

  Eigen::VectorXd inv_sqrt_mass = mass.array().rsqrt();
  if (n <= opts.dense_threshold) return dense_path(W, inv_sqrt_mass, k);

  Eigen::SparseMatrix<double> S = mass_scaled(W, inv_sqrt_mass);
  Eigen::SparseMatrix<double> shifted = S;
  {
    Eigen::SparseMatrix<double> I(n, n);
    I.setIdentity();
    shifted = S - opts.sigma * I;
  }
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
  if (ldlt.info() != Eigen::Success)
    throw_numerical("sparse factorization of the shifted operator failed");

  const int m = std::min(n, std::max(2 * k + 8, 30));  // subspace dimension per cycle
  Eigen::MatrixXd V(n, m + 1);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);

  Rng rng(0x51ce5u, {uint64_t(n), uint64_t(k)});
  auto random_unit = [&](int ortho_cols) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
    for (int pass = 0; pass < 2 && ortho_cols > 0; ++pass)
      v -= V.leftCols(ortho_cols) * (V.leftCols(ortho_cols).transpose() * v);
    double nv = v.norm();
    if (nv < 1e-14) throw_numerical("failed to generate a start vector");
    return Eigen::VectorXd(v / nv);
  };

  int l = 0;  // vectors retained from the previous cycle
  V.col(0) = random_unit(0);
  double beta_last = 0.0;

  Eigen::VectorXd ritz_values;   // descending in theta (shift-inverted spectrum)
  Eigen::MatrixXd ritz_vectors;  // n x kept

  int restart = 0;
  for (; restart <= opts.max_restarts; ++restart) {
    // Grow the subspace from column l to m with full reorthogonalization.
    int j = l;
    for (; j < m; ++j) {
      Eigen::VectorXd w = ldlt.solve(V.col(j));
      Eigen::VectorXd h = V.leftCols(j + 1).transpose() * w;
      w.noalias() -= V.leftCols(j + 1) * h;
      Eigen::VectorXd h2 = V.leftCols(j + 1).transpose() * w;
      w.noalias() -= V.leftCols(j + 1) * h2;
      h += h2;
      T.col(j).head(j + 1) = h;
      T.row(j).head(j + 1) = h.transpose();
      beta_last = w.norm();
      if (j + 1 < n && beta_last > 1e-13) {
        V.col(j + 1) = w / beta_last;
      } else {
        // Invariant subspace (or full space): restart the residual direction.
        beta_last = 0.0;
        if (j + 1 < n) V.col(j + 1) = random_unit(j + 1);
      }
      if (j + 1 < m) {
        T(j + 1, j) = beta_last;
        T(j, j + 1) = beta_last;
      }
      if (j + 1 >= n) {
        ++j;
        break;
      }
    }
    const int dim = j;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.topLeftCorner(dim, dim));
    if (es.info() != Eigen::Success) throw_numerical("projected eigensolve failed");
    // Largest theta of the inverted operator <=> smallest lambda of the pencil.
    Eigen::VectorXd theta = es.eigenvalues();
    Eigen::MatrixXd Y = es.eigenvectors();

    std::vector<int> order(static_cast<size_t>(dim));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return theta[a] > theta[b]; });

    int converged = 0;
    for (int i = 0; i < std::min(k, dim); ++i) {
      double resid = std::abs(beta_last * Y(dim - 1, order[size_t(i)]));
      double scale = std::max(std::abs(theta[order[size_t(i)]]), 1e-300);
      if (resid <= opts.tol * scale)
        ++converged;
      else
        break;
    }

    if ((converged >= k && dim >= k) || dim >= n) {
      ritz_values.resize(k);
      ritz_vectors.resize(n, k);
      for (int i = 0; i < k; ++i) {
        ritz_values[i] = theta[order[size_t(i)]];
        ritz_vectors.col(i) = V.leftCols(dim) * Y.col(order[size_t(i)]);
      }
      EigsResult res;
      res.restarts = restart;
      res.eigenvalues.resize(k);
      res.eigenvectors.resize(n, k);
      for (int i = 0; i < k; ++i) {
        // theta = 1/(lambda - sigma)
        double lambda = opts.sigma + 1.0 / ritz_values[i];
        res.eigenvalues[k - 1 - i] = lambda;  // descending theta -> ascending lambda
        res.eigenvectors.col(k - 1 - i) = inv_sqrt_mass.asDiagonal() * ritz_vectors.col(i);
      }
      // Guard against ordering glitches from clustered shift-inverted values.
      for (int i = 1; i < k; ++i)
        if (res.eigenvalues[i] < res.eigenvalues[i - 1])
          std::swap(res.eigenvalues[i], res.eigenvalues[i - 1]);
      return res;
    }

    // Thick restart: keep the leading Ritz vectors plus the residual direction.
    int keep = std::min(dim - 1, k + std::max(4, (m - k) / 2));
    Eigen::MatrixXd kept(n, keep);
    Eigen::VectorXd kept_theta(keep);
    for (int i = 0; i < keep; ++i) {
      kept.col(i) = V.leftCols(dim) * Y.col(order[size_t(i)]);
      kept_theta[i] = theta[order[size_t(i)]];
    }
    Eigen::VectorXd residual_dir = V.col(dim);  // already unit and orthogonal
    V.leftCols(keep) = kept;
    V.col(keep) = residual_dir;
    T.setZero();
    T.topLeftCorner(keep, keep) = kept_theta.asDiagonal();
    // The coupling row T(keep, 0..keep-1) re-emerges from the projection step.
    l = keep;
  }

  throw_numerical("eigensolver did not converge after " + std::to_string(opts.max_restarts) +
                  " restarts (subspace " + std::to_string(m) + ", tol " + std::to_string(opts.tol) +
                  ")");
}

}  // namespace specmatch
