#include "specmatch/trainer.h"

#include <cmath>

namespace specmatch {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw_usage("learning rate must be positive");
  if (batch_pairs < 1) throw_usage("batch size must be at least 1");
  if (iterations < 1) throw_usage("iteration count must be at least 1");
  if (points_per_shape < 1) throw_usage("points per shape must be at least 1");
  if (!(e4_descriptor_fraction > 0.0) || e4_descriptor_fraction > 1.0)
    throw_usage("descriptor fraction must lie in (0, 1]");
  if (k < 1) throw_usage("basis size must be positive");
  if (layers < 1) throw_usage("network needs at least one layer");
  if (weights.w1 < 0 || weights.w2 < 0 || weights.w3 < 0 || weights.w4 < 0)
    throw_usage("penalty weights must be nonnegative");
}

uint64_t TrainConfig::hash() const {
  struct Packed {
    double w1, w2, w3, w4, lr, frac;
    int64_t batch, iters, points, k, layers;
    uint64_t seed;
  } packed{weights.w1, weights.w2, weights.w3, weights.w4, learning_rate, e4_descriptor_fraction,
           batch_pairs, iterations,           points_per_shape, k, layers, seed};
  return hash_bytes(&packed, sizeof(packed));
}

SampleSet draw_samples(int n1, int n2, int descriptor_dim, const TrainConfig& config, int step,
                       int pair_slot) {
  SampleSet samples;
  auto stream_seed = [&](uint64_t role) {
    return Rng(config.seed, {0x5a3fu, uint64_t(step), uint64_t(pair_slot), role}).next_u64();
  };
  samples.points1 = sample_points(n1, std::min(config.points_per_shape, n1), stream_seed(1));
  samples.points2 = sample_points(n2, std::min(config.points_per_shape, n2), stream_seed(2));
  int cols = int(std::ceil(config.e4_descriptor_fraction * double(descriptor_dim)));
  cols = std::min(std::max(cols, 1), descriptor_dim);
  samples.columns = sample_points(descriptor_dim, cols, stream_seed(3));
  return samples;
}

namespace {

template <class S>
TrainResult<S> train_impl(const std::vector<TrainShape<S>>& shapes,
                          std::vector<std::pair<int, int>> pairs, const TrainConfig& config,
                          const StepCallback<S>& callback) {
  config.validate();
  if (shapes.size() < 2) throw_usage("training needs at least two shapes");
  const int d = int(shapes.front().descriptors.cols());
  for (const auto& shape : shapes) {
    if (!shape.basis) throw_usage("training shape is missing its basis");
    if (shape.descriptors.cols() != d) throw_usage("descriptor dimensions differ across shapes");
  }
  if (pairs.empty()) {
    for (size_t i = 0; i < shapes.size(); ++i)
      for (size_t j = i + 1; j < shapes.size(); ++j) pairs.emplace_back(int(i), int(j));
  }
  for (const auto& [a, b] : pairs)
    if (a < 0 || b < 0 || a >= int(shapes.size()) || b >= int(shapes.size()) || a == b)
      throw_usage("invalid shape pair (" + std::to_string(a) + ", " + std::to_string(b) + ")");

  Mlp<S> net = init_mlp<S>(d, config.seed, config.layers);
  AdamState<S> adam = AdamState<S>::like(net);

  TrainResult<S> result;
  result.loss_history.reserve(size_t(config.iterations));
  result.penalty_history.reserve(size_t(config.iterations));

  for (int step = 0; step < config.iterations; ++step) {
    Rng batch_rng(config.seed, {0xba7c4u, uint64_t(step)});
    MlpGrads<S> grads;
    grads.setZero(net);
    double loss = 0.0;
    std::array<double, 4> energies{};
    StepStats<S> first_stats;

    const int batch = config.batch_pairs;
    for (int slot = 0; slot < batch; ++slot) {
      const auto& [i, j] = pairs[size_t(batch_rng.below(pairs.size()))];
      SampleSet samples = draw_samples(int(shapes[size_t(i)].descriptors.rows()),
                                       int(shapes[size_t(j)].descriptors.rows()), d, config, step,
                                       slot);
      StepStats<S> stats;
      try {
        stats = pair_loss_and_grads(shapes[size_t(i)], shapes[size_t(j)], net, config, samples,
                                    &grads);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::numerical) throw;
        SampleSet retry = draw_samples(int(shapes[size_t(i)].descriptors.rows()),
                                       int(shapes[size_t(j)].descriptors.rows()), d, config, step,
                                       slot + kResampleSlotOffset);
        stats = pair_loss_and_grads(shapes[size_t(i)], shapes[size_t(j)], net, config, retry,
                                    &grads);
      }
      loss += double(stats.loss);
      for (int e = 0; e < 4; ++e) energies[size_t(e)] += double(stats.energies[size_t(e)]);
      if (slot == 0) first_stats = std::move(stats);
    }

    loss /= batch;
    for (auto& e : energies) e /= batch;
    // Mean-over-batch gradient keeps the learning rate comparable across batch sizes.
    MlpGrads<S> mean_grads;
    mean_grads.setZero(net);
    mean_grads.accumulate(grads, S(1) / S(batch));
    first_stats.applied = adam_step(net, mean_grads, adam, S(config.learning_rate));
    first_stats.loss = S(loss);
    for (int e = 0; e < 4; ++e) first_stats.energies[size_t(e)] = S(energies[size_t(e)]);

    result.loss_history.push_back(loss);
    result.penalty_history.push_back(energies);
    if (callback) callback(step, first_stats, net);
  }
  result.params = std::move(net);
  return result;
}

}  // namespace

template <class S>
TrainResult<S> train(const std::vector<TrainShape<S>>& shapes,
                     std::vector<std::pair<int, int>> pairs, const TrainConfig& config,
                     const StepCallback<S>& callback) {
  return train_impl(shapes, std::move(pairs), config, callback);
}

template TrainResult<float> train<float>(const std::vector<TrainShape<float>>&,
                                         std::vector<std::pair<int, int>>, const TrainConfig&,
                                         const StepCallback<float>&);
template TrainResult<double> train<double>(const std::vector<TrainShape<double>>&,
                                           std::vector<std::pair<int, int>>, const TrainConfig&,
                                           const StepCallback<double>&);

}  // namespace specmatch
