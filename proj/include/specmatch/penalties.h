#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "specmatch/fmap.h"
#include "specmatch/spectral.h"

namespace specmatch {

// Fixed across all experiments; the defaults follow the reference tuning.
struct PenaltyWeights {
  double w1 = 1e3;  // bijectivity
  double w2 = 1e3;  // orthogonality
  double w3 = 1.0;  // Laplacian commutativity
  double w4 = 1e5;  // descriptor-operator commutativity
};

template <class S>
struct PenaltyTerms {
  S value = S(0);
  MatX<S> grad_c12, grad_c21;
};

template <class S>
struct E4Terms {
  S value = S(0);
  MatX<S> grad_c12, grad_c21;
  std::vector<MatX<S>> grad_ops1, grad_ops2;
};

template <class S>
struct TotalEnergy {
  S value = S(0);
  std::array<S, 4> components{};  // unweighted E1..E4
  MatX<S> grad_c12, grad_c21;
  std::vector<MatX<S>> grad_ops1, grad_ops2;
};

namespace detail {
template <class S>
void check_pair(const MatX<S>& c12, const MatX<S>& c21) {
  if (c12.rows() != c21.cols() || c12.cols() != c21.rows())
    throw_usage("penalty: C12 and C21 dimensions are not transposes of each other");
}
}  // namespace detail

// E1 = ||C12 C21 - I||^2 + ||C21 C12 - I||^2
template <class S>
PenaltyTerms<S> e1_bijectivity(const MatX<S>& c12, const MatX<S>& c21) {
  detail::check_pair(c12, c21);
  MatX<S> r12 = c12 * c21;
  r12.diagonal().array() -= S(1);
  MatX<S> r21 = c21 * c12;
  r21.diagonal().array() -= S(1);
  PenaltyTerms<S> out;
  out.value = r12.squaredNorm() + r21.squaredNorm();
  out.grad_c12 = S(2) * (r12 * c21.transpose() + c21.transpose() * r21);
  out.grad_c21 = S(2) * (c12.transpose() * r12 + r21 * c12.transpose());
  return out;
}

// E2 = ||C12^T C12 - I||^2 + ||C21^T C21 - I||^2
template <class S>
PenaltyTerms<S> e2_orthogonality(const MatX<S>& c12, const MatX<S>& c21) {
  detail::check_pair(c12, c21);
  PenaltyTerms<S> out;
  MatX<S> g12 = c12.transpose() * c12;
  g12.diagonal().array() -= S(1);
  MatX<S> g21 = c21.transpose() * c21;
  g21.diagonal().array() -= S(1);
  out.value = g12.squaredNorm() + g21.squaredNorm();
  out.grad_c12 = S(4) * (c12 * g12);
  out.grad_c21 = S(4) * (c21 * g21);
  return out;
}

// E3 = ||C12 Lam1 - Lam2 C12||^2 + ||C21 Lam2 - Lam1 C21||^2 with diagonal
// eigenvalue matrices; entry (i,j) contributes C(i,j)^2 (lam_src_j - lam_dst_i)^2.
template <class S>
PenaltyTerms<S> e3_laplacian_commutativity(const MatX<S>& c12, const MatX<S>& c21,
                                           const VecX<S>& lambda1, const VecX<S>& lambda2) {
  detail::check_pair(c12, c21);
  if (lambda1.size() != c12.cols() || lambda2.size() != c12.rows())
    throw_usage("e3: eigenvalue vector sizes do not match the map");
  PenaltyTerms<S> out;
  MatX<S> d12 = lambda1.transpose().replicate(c12.rows(), 1) -
                lambda2.replicate(1, c12.cols());
  d12 = d12.cwiseProduct(d12);
  MatX<S> d21 = lambda2.transpose().replicate(c21.rows(), 1) -
                lambda1.replicate(1, c21.cols());
  d21 = d21.cwiseProduct(d21);
  out.value = (c12.array().square() * d12.array()).sum() +
              (c21.array().square() * d21.array()).sum();
  out.grad_c12 = S(2) * (c12.array() * d12.array()).matrix();
  out.grad_c21 = S(2) * (c21.array() * d21.array()).matrix();
  return out;
}

// Reduced-basis multiplication operator for descriptor f: Phi^+ Diag(f) Phi,
// assembled as a contraction without forming the n x n diagonal.
Eigen::MatrixXd mult_operator(const LaplaceBasis& basis, const Eigen::VectorXd& f);

// Sampled-vertex variant used during training: pinv is the (mass-weighted)
// pseudoinverse of the row-restricted basis phi_s.
template <class S>
MatX<S> mult_operator_from(const MatX<S>& pinv, const MatX<S>& phi_s, const VecX<S>& f) {
  if (pinv.cols() != phi_s.rows() || f.size() != phi_s.rows())
    throw_usage("mult_operator_from: size mismatch");
  return pinv * (f.asDiagonal() * phi_s);
}

// Chain rule through mult_operator_from: dE/df given dE/dM.
template <class S>
VecX<S> mult_operator_backward(const MatX<S>& pinv, const MatX<S>& phi_s,
                               const MatX<S>& grad_op) {
  return ((pinv.transpose() * grad_op).array() * phi_s.array()).rowwise().sum();
}

// E4 = sum_i ||C12 Mf_i - Mg_i C12||^2 + ||C21 Mg_i - Mf_i C21||^2 over paired
// descriptor operators, with gradients for the maps and every operator.
template <class S>
E4Terms<S> e4_descriptor_commutativity(const MatX<S>& c12, const MatX<S>& c21,
                                       const std::vector<MatX<S>>& ops1,
                                       const std::vector<MatX<S>>& ops2) {
  detail::check_pair(c12, c21);
  if (ops1.size() != ops2.size()) throw_usage("e4: descriptor operator lists differ in length");
  E4Terms<S> out;
  out.grad_c12 = MatX<S>::Zero(c12.rows(), c12.cols());
  out.grad_c21 = MatX<S>::Zero(c21.rows(), c21.cols());
  out.grad_ops1.resize(ops1.size());
  out.grad_ops2.resize(ops2.size());
  for (size_t i = 0; i < ops1.size(); ++i) {
    const MatX<S>& mf = ops1[i];
    const MatX<S>& mg = ops2[i];
    if (mf.rows() != c12.cols() || mf.cols() != c12.cols() || mg.rows() != c12.rows() ||
        mg.cols() != c12.rows())
      throw_usage("e4: operator dimensions do not match the maps");
    MatX<S> r12 = c12 * mf - mg * c12;  // k2 x k1
    MatX<S> r21 = c21 * mg - mf * c21;  // k1 x k2
    out.value += r12.squaredNorm() + r21.squaredNorm();
    out.grad_c12.noalias() += S(2) * (r12 * mf.transpose() - mg.transpose() * r12);
    out.grad_c21.noalias() += S(2) * (r21 * mg.transpose() - mf.transpose() * r21);
    out.grad_ops1[i] = S(2) * (c12.transpose() * r12 - r21 * c21.transpose());
    out.grad_ops2[i] = S(2) * (c21.transpose() * r21 - r12 * c12.transpose());
  }
  return out;
}

// Weighted sum of the four penalties and all of their gradients.
template <class S>
TotalEnergy<S> total_energy(const MatX<S>& c12, const MatX<S>& c21, const VecX<S>& lambda1,
                            const VecX<S>& lambda2, const std::vector<MatX<S>>& ops1,
                            const std::vector<MatX<S>>& ops2, const PenaltyWeights& weights) {
  PenaltyTerms<S> e1 = e1_bijectivity(c12, c21);
  PenaltyTerms<S> e2 = e2_orthogonality(c12, c21);
  PenaltyTerms<S> e3 = e3_laplacian_commutativity(c12, c21, lambda1, lambda2);
  E4Terms<S> e4 = e4_descriptor_commutativity(c12, c21, ops1, ops2);

  TotalEnergy<S> out;
  out.components = {e1.value, e2.value, e3.value, e4.value};
  const S w1 = S(weights.w1), w2 = S(weights.w2), w3 = S(weights.w3), w4 = S(weights.w4);
  out.value = w1 * e1.value + w2 * e2.value + w3 * e3.value + w4 * e4.value;
  out.grad_c12 = w1 * e1.grad_c12 + w2 * e2.grad_c12 + w3 * e3.grad_c12 + w4 * e4.grad_c12;
  out.grad_c21 = w1 * e1.grad_c21 + w2 * e2.grad_c21 + w3 * e3.grad_c21 + w4 * e4.grad_c21;
  out.grad_ops1 = std::move(e4.grad_ops1);
  out.grad_ops2 = std::move(e4.grad_ops2);
  for (auto& g : out.grad_ops1) g *= w4;
  for (auto& g : out.grad_ops2) g *= w4;
  return out;
}

}  // namespace specmatch
