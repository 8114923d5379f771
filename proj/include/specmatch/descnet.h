#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "specmatch/fmap.h"

namespace specmatch {

inline constexpr int kMlpLayers = 7;

// Pointwise residual network applied identically to every descriptor row:
// x <- x + ELU(x W_l + b_l), no dimensionality change. Points interact only
// through the functional-map solve, never inside the network.
template <class S>
struct Mlp {
  std::vector<MatX<S>> weights;  // each d x d, applied on the right
  std::vector<VecX<S>> biases;   // each d

  int dim() const { return weights.empty() ? 0 : int(weights.front().rows()); }
  int layers() const { return int(weights.size()); }
};

// Glorot-uniform weights (bound sqrt(6/(2d))), zero biases; deterministic per seed.
template <class S>
Mlp<S> init_mlp(int d, uint64_t seed, int layers = kMlpLayers) {
  if (d < 1) throw_usage("init_mlp: dimension must be positive");
  if (layers < 1) throw_usage("init_mlp: need at least one layer");
  const double bound = std::sqrt(6.0 / (2.0 * double(d)));
  Mlp<S> net;
  net.weights.resize(size_t(layers));
  net.biases.resize(size_t(layers));
  for (int l = 0; l < layers; ++l) {
    Rng rng(seed, {0x6e31u, uint64_t(l)});
    net.weights[size_t(l)].resize(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) net.weights[size_t(l)](i, j) = S(rng.uniform(-bound, bound));
    net.biases[size_t(l)] = VecX<S>::Zero(d);
  }
  return net;
}

template <class S>
struct MlpCache {
  std::vector<MatX<S>> inputs;    // layer inputs X_l
  std::vector<MatX<S>> preacts;   // Z_l = X_l W_l + b_l
};

namespace detail {
template <class S>
inline S elu(S z) {
  return z >= S(0) ? z : std::expm1(z);
}
template <class S>
inline S elu_deriv(S z) {
  return z >= S(0) ? S(1) : std::exp(z);
}
}  // namespace detail

// Rows of X are points; the same weights act on every row.
template <class S>
MatX<S> mlp_forward(const Mlp<S>& net, const MatX<S>& x, MlpCache<S>* cache = nullptr) {
  if (x.cols() != net.dim())
    throw_usage("mlp_forward: input has " + std::to_string(x.cols()) + " columns, network expects " +
                std::to_string(net.dim()));
  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
    cache->inputs.reserve(size_t(net.layers()));
    cache->preacts.reserve(size_t(net.layers()));
  }
  MatX<S> cur = x;
  for (int l = 0; l < net.layers(); ++l) {
    MatX<S> z = cur * net.weights[size_t(l)];
    z.rowwise() += net.biases[size_t(l)].transpose();
    if (cache) {
      cache->inputs.push_back(cur);
      cache->preacts.push_back(z);
    }
    cur += z.unaryExpr([](S v) { return detail::elu(v); });
  }
  return cur;
}

template <class S>
struct MlpGrads {
  std::vector<MatX<S>> weights;
  std::vector<VecX<S>> biases;
  MatX<S> input;

  void setZero(const Mlp<S>& net) {
    weights.assign(size_t(net.layers()), MatX<S>::Zero(net.dim(), net.dim()));
    biases.assign(size_t(net.layers()), VecX<S>::Zero(net.dim()));
  }
  void accumulate(const MlpGrads<S>& other, S scale = S(1)) {
    for (size_t l = 0; l < weights.size(); ++l) {
      weights[l] += scale * other.weights[l];
      biases[l] += scale * other.biases[l];
    }
  }
  bool finite() const {
    for (const auto& w : weights)
      if (!w.allFinite()) return false;
    for (const auto& b : biases)
      if (!b.allFinite()) return false;
    return true;
  }
};

template <class S>
MlpGrads<S> mlp_backward(const Mlp<S>& net, const MlpCache<S>& cache, const MatX<S>& grad_output) {
  if (int(cache.inputs.size()) != net.layers() || int(cache.preacts.size()) != net.layers())
    throw_usage("mlp_backward: cache does not match the network");
  if (!cache.inputs.empty() && (grad_output.rows() != cache.inputs.front().rows() ||
                                grad_output.cols() != cache.inputs.front().cols()))
    throw_usage("mlp_backward: gradient shape does not match the cached forward pass");
  MlpGrads<S> grads;
  grads.weights.resize(size_t(net.layers()));
  grads.biases.resize(size_t(net.layers()));
  MatX<S> g = grad_output;
  for (int l = net.layers() - 1; l >= 0; --l) {
    MatX<S> dz =
        g.cwiseProduct(cache.preacts[size_t(l)].unaryExpr([](S v) { return detail::elu_deriv(v); }));
    grads.weights[size_t(l)].noalias() = cache.inputs[size_t(l)].transpose() * dz;
    grads.biases[size_t(l)] = dz.colwise().sum().transpose();
    g += dz * net.weights[size_t(l)].transpose();
  }
  grads.input = std::move(g);
  return grads;
}

template <class To, class From>
Mlp<To> cast_mlp(const Mlp<From>& net) {
  Mlp<To> out;
  out.weights.reserve(net.weights.size());
  out.biases.reserve(net.biases.size());
  for (const auto& w : net.weights) out.weights.push_back(w.template cast<To>());
  for (const auto& b : net.biases) out.biases.push_back(b.template cast<To>());
  return out;
}

// Versioned binary checkpoint; parameters are stored in double precision
// together with the hash of the training configuration that produced them.
void save_checkpoint(const std::string& path, const Mlp<double>& net, uint64_t config_hash);
Mlp<double> load_checkpoint(const std::string& path, uint64_t* config_hash = nullptr);

}  // namespace specmatch
