#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "specmatch/descnet.h"
#include "specmatch/descriptors.h"
#include "specmatch/penalties.h"
#include "specmatch/spectral.h"

namespace specmatch {

struct TrainConfig {
  PenaltyWeights weights;
  double learning_rate = 0.001;
  int batch_pairs = 10;
  int iterations = 10000;
  int points_per_shape = 1500;
  double e4_descriptor_fraction = 0.2;
  int k = 120;
  int layers = kMlpLayers;
  uint64_t seed = 0;

  void validate() const;
  uint64_t hash() const;
};

template <class S>
struct AdamState {
  std::vector<MatX<S>> m_w, v_w;
  std::vector<VecX<S>> m_b, v_b;
  int64_t step = 0;
  S beta1 = S(0.9), beta2 = S(0.999), eps = S(1e-8);

  static AdamState like(const Mlp<S>& net) {
    AdamState st;
    st.m_w.assign(size_t(net.layers()), MatX<S>::Zero(net.dim(), net.dim()));
    st.v_w = st.m_w;
    st.m_b.assign(size_t(net.layers()), VecX<S>::Zero(net.dim()));
    st.v_b = st.m_b;
    return st;
  }
};

// Bias-corrected update. Non-finite gradients skip the update (and the step
// counter) and return false.
template <class S>
bool adam_step(Mlp<S>& net, const MlpGrads<S>& grads, AdamState<S>& state, S lr) {
  if (!grads.finite()) {
    warn("adam_step: non-finite gradient; update skipped");
    return false;
  }
  state.step += 1;
  const S bc1 = S(1) - S(std::pow(double(state.beta1), double(state.step)));
  const S bc2 = S(1) - S(std::pow(double(state.beta2), double(state.step)));
  for (int l = 0; l < net.layers(); ++l) {
    auto& mw = state.m_w[size_t(l)];
    auto& vw = state.v_w[size_t(l)];
    const auto& gw = grads.weights[size_t(l)];
    mw = state.beta1 * mw + (S(1) - state.beta1) * gw;
    vw = state.beta2 * vw + (S(1) - state.beta2) * gw.cwiseProduct(gw);
    net.weights[size_t(l)].array() -=
        lr * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + state.eps);

    auto& mb = state.m_b[size_t(l)];
    auto& vb = state.v_b[size_t(l)];
    const auto& gb = grads.biases[size_t(l)];
    mb = state.beta1 * mb + (S(1) - state.beta1) * gb;
    vb = state.beta2 * vb + (S(1) - state.beta2) * gb.cwiseProduct(gb);
    net.biases[size_t(l)].array() -=
        lr * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + state.eps);
  }
  return true;
}

// One shape prepared for optimization: fixed basis plus raw descriptor rows.
template <class S>
struct TrainShape {
  const LaplaceBasis* basis = nullptr;
  MatX<S> descriptors;  // n x d
  std::string name;
};

// Per-step vertex/column subsampling. Point sets are drawn independently per
// shape; the descriptor-column subset is shared by the pair.
struct SampleSet {
  std::vector<int> points1, points2;
  std::vector<int> columns;
};

SampleSet draw_samples(int n1, int n2, int descriptor_dim, const TrainConfig& config,
                       int step, int pair_slot = 0);

template <class S>
struct StepStats {
  S loss = S(0);
  std::array<S, 4> energies{};
  MatX<S> c12, c21;
  bool applied = true;  // ADAM update went through
};

namespace detail {

// Mass-weighted pseudoinverse of the row-restricted basis. Throws
// Error(numerical) when the sampled Gram is singular.
template <class S>
void restricted_projector(const LaplaceBasis& basis, const std::vector<int>& points,
                          MatX<S>& phi_s, MatX<S>& pinv) {
  const int ns = int(points.size());
  const int k = basis.k;
  phi_s.resize(ns, k);
  VecX<S> mass_s(ns);
  for (int i = 0; i < ns; ++i) {
    phi_s.row(i) = basis.eigenfunctions.row(points[size_t(i)]).template cast<S>();
    mass_s[i] = S(basis.mass[points[size_t(i)]]);
  }
  MatX<S> weighted = mass_s.asDiagonal() * phi_s;       // ns x k
  MatX<S> gram = phi_s.transpose() * weighted;          // k x k
  Eigen::LDLT<MatX<S>> ldlt(gram);
  if (ldlt.info() != Eigen::Success) throw_numerical("sampled-basis Gram is singular");
  pinv = ldlt.solve(weighted.transpose());              // k x ns
  if (!pinv.allFinite()) throw_numerical("sampled-basis Gram is singular");
}

}  // namespace detail

// Forward/backward for one shape pair at fixed samples: network -> restricted
// projection -> functional-map solves in both directions -> penalties, then
// the adjoint chain back to the network parameters (accumulated into
// `grads_out` when provided).
template <class S>
StepStats<S> pair_loss_and_grads(const TrainShape<S>& shape1, const TrainShape<S>& shape2,
                                 const Mlp<S>& net, const TrainConfig& config,
                                 const SampleSet& samples,
                                 std::type_identity_t<MlpGrads<S>*> grads_out) {
  const LaplaceBasis& basis1 = *shape1.basis;
  const LaplaceBasis& basis2 = *shape2.basis;
  if (shape1.descriptors.cols() != shape2.descriptors.cols())
    throw_usage("training pair has mismatched descriptor dimensions");

  MatX<S> phi1s, pinv1, phi2s, pinv2;
  detail::restricted_projector(basis1, samples.points1, phi1s, pinv1);
  detail::restricted_projector(basis2, samples.points2, phi2s, pinv2);

  const int d = int(shape1.descriptors.cols());
  MatX<S> x1(int(samples.points1.size()), d), x2(int(samples.points2.size()), d);
  for (size_t i = 0; i < samples.points1.size(); ++i)
    x1.row(long(i)) = shape1.descriptors.row(samples.points1[i]);
  for (size_t i = 0; i < samples.points2.size(); ++i)
    x2.row(long(i)) = shape2.descriptors.row(samples.points2[i]);

  MlpCache<S> cache1, cache2;
  MatX<S> t1 = mlp_forward(net, x1, grads_out ? &cache1 : nullptr);
  MatX<S> t2 = mlp_forward(net, x2, grads_out ? &cache2 : nullptr);

  MatX<S> a1 = pinv1 * t1;  // k1 x d
  MatX<S> a2 = pinv2 * t2;  // k2 x d

  StepStats<S> stats;
  stats.c12 = solve_fmap(a1, a2);
  stats.c21 = solve_fmap(a2, a1);

  std::vector<MatX<S>> ops1(samples.columns.size()), ops2(samples.columns.size());
  for (size_t j = 0; j < samples.columns.size(); ++j) {
    const int col = samples.columns[j];
    ops1[j] = mult_operator_from<S>(pinv1, phi1s, t1.col(col));
    ops2[j] = mult_operator_from<S>(pinv2, phi2s, t2.col(col));
  }

  VecX<S> lambda1 = basis1.eigenvalues.cast<S>();
  VecX<S> lambda2 = basis2.eigenvalues.cast<S>();
  TotalEnergy<S> energy =
      total_energy(stats.c12, stats.c21, lambda1, lambda2, ops1, ops2, config.weights);
  stats.loss = energy.value;
  stats.energies = energy.components;

  if (!grads_out) return stats;

  auto [g12_a1, g12_a2] = solve_fmap_backward(a1, a2, stats.c12, energy.grad_c12);
  auto [g21_a2, g21_a1] = solve_fmap_backward(a2, a1, stats.c21, energy.grad_c21);
  MatX<S> grad_a1 = g12_a1 + g21_a1;
  MatX<S> grad_a2 = g12_a2 + g21_a2;

  MatX<S> grad_t1 = pinv1.transpose() * grad_a1;
  MatX<S> grad_t2 = pinv2.transpose() * grad_a2;
  for (size_t j = 0; j < samples.columns.size(); ++j) {
    const int col = samples.columns[j];
    grad_t1.col(col) += mult_operator_backward<S>(pinv1, phi1s, energy.grad_ops1[j]);
    grad_t2.col(col) += mult_operator_backward<S>(pinv2, phi2s, energy.grad_ops2[j]);
  }

  MlpGrads<S> g1 = mlp_backward(net, cache1, grad_t1);
  MlpGrads<S> g2 = mlp_backward(net, cache2, grad_t2);
  grads_out->accumulate(g1);
  grads_out->accumulate(g2);
  return stats;
}

inline constexpr int kResampleSlotOffset = 0x7fff;

// One optimization step on a single pair: subsample, evaluate, backpropagate,
// and apply ADAM. Deterministic given (config.seed, step).
template <class S>
StepStats<S> training_step(const TrainShape<S>& shape1, const TrainShape<S>& shape2, Mlp<S>& net,
                           AdamState<S>& adam, const TrainConfig& config, int step) {
  const int n1 = int(shape1.descriptors.rows());
  const int n2 = int(shape2.descriptors.rows());
  const int d = int(shape1.descriptors.cols());
  SampleSet samples = draw_samples(n1, n2, d, config, step);
  MlpGrads<S> grads;
  grads.setZero(net);
  StepStats<S> stats;
  try {
    stats = pair_loss_and_grads(shape1, shape2, net, config, samples, &grads);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::numerical) throw;
    // Singular sampled Gram: resample once with a shifted stream, then give up.
    SampleSet retry = draw_samples(n1, n2, d, config, step, kResampleSlotOffset);
    stats = pair_loss_and_grads(shape1, shape2, net, config, retry, &grads);
  }
  stats.applied = adam_step(net, grads, adam, S(config.learning_rate));
  return stats;
}

template <class S>
struct TrainResult {
  Mlp<S> params;
  std::vector<double> loss_history;                 // one entry per iteration
  std::vector<std::array<double, 4>> penalty_history;
};

// Called once per iteration with the batch-mean statistics (maps come from the
// first pair of the batch) and the current parameters.
template <class S>
using StepCallback = std::function<void(int step, const StepStats<S>&, const Mlp<S>&)>;

// Unsupervised optimization over a shape collection. `pairs` lists index pairs
// to draw batches from; empty means all unordered pairs. The batch gradient is
// the mean over pairs, applied in one ADAM step per iteration.
template <class S>
TrainResult<S> train(const std::vector<TrainShape<S>>& shapes,
                     std::vector<std::pair<int, int>> pairs, const TrainConfig& config,
                     const StepCallback<S>& callback = {});

// Regularized solve on network-transformed descriptor coefficients.
template <class S>
MatX<S> fmap_ours_opt(const MatX<S>& a1_transformed, const MatX<S>& a2_transformed,
                      const VecX<S>& lambda1, const VecX<S>& lambda2, S alpha) {
  return solve_fmap_regularized(a1_transformed, a2_transformed, lambda1, lambda2, alpha);
}

}  // namespace specmatch
