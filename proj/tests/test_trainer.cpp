#include <doctest.h>

#include <cmath>
#include <set>

#include "specmatch/trainer.h"
#include "specmatch/synth.h"
#include "test_support.h"

using namespace specmatch;
using test_support::max_rel_error;
using test_support::random_matrix;

namespace {

// A small closed pair plus descriptors, shared across the trainer tests.
struct Fixture {
  TriangleMesh mesh1, mesh2;
  LaplaceBasis basis1, basis2;
  Eigen::MatrixXd desc1, desc2;

  Fixture(int subdivisions, int k, int d, bool perturb_second) {
    mesh1 = synth::bumpy_sphere(subdivisions);
    mesh2 = mesh1;
    if (perturb_second) {
      Rng rng(5);
      for (int v = 0; v < mesh2.num_vertices(); ++v)
        mesh2.vertices.row(v) *= 1.0 + 0.02 * rng.uniform(-1.0, 1.0);
    }
    basis1 = compute_basis(mesh1, k);
    basis2 = compute_basis(mesh2, k);
    Rng rng(6);
    desc1 = random_matrix<double>(mesh1.num_vertices(), d, rng);
    desc2 = perturb_second ? (desc1 + 0.05 * random_matrix<double>(mesh1.num_vertices(), d, rng))
                           : desc1;
  }

  template <class S>
  TrainShape<S> shape1() const {
    return {&basis1, desc1.cast<S>(), "s1"};
  }
  template <class S>
  TrainShape<S> shape2() const {
    return {&basis2, desc2.cast<S>(), "s2"};
  }
};

}  // namespace

TEST_CASE("adam first step moves by about the learning rate") {
  Mlp<double> net;
  net.weights = {Eigen::MatrixXd::Zero(1, 1)};
  net.biases = {Eigen::VectorXd::Zero(1)};
  AdamState<double> state = AdamState<double>::like(net);
  MlpGrads<double> grads;
  grads.weights = {Eigen::MatrixXd::Constant(1, 1, 0.5)};
  grads.biases = {Eigen::VectorXd::Zero(1)};

  CHECK(adam_step(net, grads, state, 0.001));
  CHECK(state.step == 1);
  // m_hat = g, v_hat = g^2 at step 1, so the update is lr * g/|g| up to eps.
  CHECK(net.weights[0](0, 0) == doctest::Approx(-0.001).epsilon(1e-4));
}

TEST_CASE("adam normalizes per coordinate at the first step") {
  Mlp<double> net;
  net.weights = {Eigen::MatrixXd::Zero(2, 2)};
  net.biases = {Eigen::VectorXd::Zero(2)};
  AdamState<double> state = AdamState<double>::like(net);
  MlpGrads<double> grads;
  grads.weights = {Eigen::MatrixXd::Zero(2, 2)};
  grads.biases = {Eigen::VectorXd::Zero(2)};
  grads.weights[0](0, 0) = 0.3;
  grads.weights[0](1, 1) = 0.6;  // double the gradient, same step size
  adam_step(net, grads, state, 0.01);
  CHECK(net.weights[0](0, 0) == doctest::Approx(net.weights[0](1, 1)).epsilon(1e-6));
}

TEST_CASE("adam leaves parameters alone for zero gradients") {
  Mlp<double> net = init_mlp<double>(3, 1, 1);
  Mlp<double> before = net;
  AdamState<double> state = AdamState<double>::like(net);
  state.m_w[0].setConstant(0.7);
  state.v_w[0].setConstant(0.2);
  MlpGrads<double> grads;
  grads.setZero(net);
  adam_step(net, grads, state, 0.01);
  // Moments decay toward zero; the parameter step uses the decayed first moment.
  CHECK(state.m_w[0](0, 0) == doctest::Approx(0.7 * 0.9));
  CHECK((net.weights[0] - before.weights[0]).cwiseAbs().maxCoeff() > 0.0);

  MlpGrads<double> nan_grads;
  nan_grads.setZero(net);
  nan_grads.weights[0](0, 0) = std::nan("");
  Mlp<double> frozen = net;
  set_warnings_enabled(false);
  CHECK_FALSE(adam_step(net, nan_grads, state, 0.01));
  set_warnings_enabled(true);
  CHECK((net.weights[0] - frozen.weights[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("self pair with identical sampling sits at the global minimum") {
  Fixture fx(2, 12, 10, false);
  TrainConfig config;
  config.k = 12;
  config.points_per_shape = 80;
  config.seed = 3;

  // Zero-parameter network: the transform is the identity.
  Mlp<double> net;
  net.weights.assign(1, Eigen::MatrixXd::Zero(10, 10));
  net.biases.assign(1, Eigen::VectorXd::Zero(10));

  SampleSet samples = draw_samples(fx.mesh1.num_vertices(), fx.mesh1.num_vertices(), 10, config, 0);
  samples.points2 = samples.points1;  // identical sampling on the self pair
  StepStats<double> stats =
      pair_loss_and_grads(fx.shape1<double>(), fx.shape1<double>(), net, config, samples, nullptr);
  CHECK(stats.loss <= 1e-10);
  for (double e : stats.energies) CHECK(e <= 1e-12);
}

TEST_CASE("reported loss is consistent with the returned maps") {
  Fixture fx(2, 10, 12, true);
  TrainConfig config;
  config.k = 10;
  config.points_per_shape = 90;
  config.seed = 11;
  Mlp<double> net = init_mlp<double>(12, 4, 2);
  SampleSet samples = draw_samples(fx.mesh1.num_vertices(), fx.mesh2.num_vertices(), 12, config, 0);
  StepStats<double> stats =
      pair_loss_and_grads(fx.shape1<double>(), fx.shape2<double>(), net, config, samples, nullptr);

  double recombined = config.weights.w1 * stats.energies[0] + config.weights.w2 * stats.energies[1] +
                      config.weights.w3 * stats.energies[2] + config.weights.w4 * stats.energies[3];
  CHECK(stats.loss == doctest::Approx(recombined).epsilon(1e-6));

  // E1 recomputed from the returned maps agrees with the logged component.
  double e1 = e1_bijectivity<double>(stats.c12, stats.c21).value;
  CHECK(e1 == doctest::Approx(stats.energies[0]).epsilon(1e-6));
}

TEST_CASE("training steps are bitwise deterministic") {
  Fixture fx(2, 8, 10, true);
  TrainConfig config;
  config.k = 8;
  config.points_per_shape = 70;
  config.layers = 2;
  config.seed = 21;

  auto run = [&]() {
    Mlp<float> net = init_mlp<float>(10, config.seed, config.layers);
    AdamState<float> adam = AdamState<float>::like(net);
    float last = 0;
    for (int step = 0; step < 3; ++step)
      last = training_step(fx.shape1<float>(), fx.shape2<float>(), net, adam, config, step).loss;
    return last;
  };
  float a = run();
  float b = run();
  CHECK(a == b);
}

TEST_CASE("point samples are independent per shape and columns vary per step") {
  TrainConfig config;
  config.points_per_shape = 50;
  config.e4_descriptor_fraction = 0.2;
  config.seed = 9;
  SampleSet s0 = draw_samples(500, 500, 40, config, 0);
  CHECK(s0.points1 != s0.points2);
  CHECK(s0.columns.size() == 8);  // ceil(0.2 * 40)

  SampleSet s1 = draw_samples(500, 500, 40, config, 1);
  CHECK(s0.columns != s1.columns);
  CHECK(s0.points1 != s1.points1);

  // Deterministic per (seed, step).
  SampleSet again = draw_samples(500, 500, 40, config, 0);
  CHECK(again.points1 == s0.points1);
  CHECK(again.columns == s0.columns);
}

TEST_CASE("end-to-end parameter gradients match finite differences") {
  // Tiny instance: ~30-vertex pair, k = 5, d = 8, one residual layer.
  TriangleMesh mesh1 = synth::sheet({6, 5, 1.0, 0.8, 0.05});
  TriangleMesh mesh2 = synth::bent_sheet({6, 5, 1.0, 0.8, 0.05}, 1.2);
  LaplaceBasis basis1 = compute_basis(mesh1, 5);
  LaplaceBasis basis2 = compute_basis(mesh2, 5);
  Rng rng(55);
  Eigen::MatrixXd desc1 = random_matrix<double>(mesh1.num_vertices(), 8, rng);
  Eigen::MatrixXd desc2 = desc1 + 0.1 * random_matrix<double>(mesh2.num_vertices(), 8, rng);

  TrainShape<double> shape1{&basis1, desc1, "a"};
  TrainShape<double> shape2{&basis2, desc2, "b"};
  TrainConfig config;
  config.k = 5;
  config.points_per_shape = 25;
  config.layers = 1;
  config.seed = 77;
  SampleSet samples = draw_samples(mesh1.num_vertices(), mesh2.num_vertices(), 8, config, 0);

  Mlp<double> net = init_mlp<double>(8, 99, 1);
  MlpGrads<double> grads;
  grads.setZero(net);
  pair_loss_and_grads(shape1, shape2, net, config, samples, &grads);

  auto loss_at = [&](const Mlp<double>& p) {
    return double(pair_loss_and_grads(shape1, shape2, p, config, samples, nullptr).loss);
  };

  Eigen::MatrixXd fd_w = test_support::finite_difference(
      [&](const Eigen::MatrixXd& w) {
        Mlp<double> p = net;
        p.weights[0] = w;
        return loss_at(p);
      },
      net.weights[0]);
  CHECK(max_rel_error(grads.weights[0], fd_w) < 1e-5);

  Eigen::MatrixXd fd_b = test_support::finite_difference(
      [&](const Eigen::MatrixXd& b) {
        Mlp<double> p = net;
        p.biases[0] = b.col(0);
        return loss_at(p);
      },
      net.biases[0]);
  CHECK(max_rel_error(grads.biases[0], fd_b) < 1e-5);
}

TEST_CASE("train runs the requested iterations over the given pair list") {
  Fixture fx(2, 8, 10, true);
  std::vector<TrainShape<float>> shapes = {fx.shape1<float>(), fx.shape2<float>()};
  TrainConfig config;
  config.k = 8;
  config.points_per_shape = 60;
  config.iterations = 12;
  config.batch_pairs = 2;
  config.layers = 2;
  config.seed = 31;

  int callback_count = 0;
  TrainResult<float> result = train<float>(
      shapes, {{0, 1}}, config,
      [&](int step, const StepStats<float>&, const Mlp<float>&) {
        CHECK(step == callback_count);
        ++callback_count;
      });
  CHECK(result.loss_history.size() == 12);
  CHECK(result.penalty_history.size() == 12);
  CHECK(callback_count == 12);
  CHECK(result.params.layers() == 2);

  CHECK_THROWS_AS(train<float>(shapes, {{0, 2}}, config, {}), Error);
}

TEST_CASE("a short optimization run reduces the loss") {
  Fixture fx(2, 10, 16, true);
  std::vector<TrainShape<float>> shapes = {fx.shape1<float>(), fx.shape2<float>()};
  TrainConfig config;
  config.k = 10;
  config.points_per_shape = 100;
  config.iterations = 60;
  config.batch_pairs = 1;
  config.layers = 2;
  config.seed = 13;

  TrainResult<float> result = train<float>(shapes, {{0, 1}}, config);
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 10; ++i) {
    head += result.loss_history[size_t(i)];
    tail += result.loss_history[result.loss_history.size() - 1 - size_t(i)];
  }
  CHECK(tail < head);
}

TEST_CASE("fmap_ours_opt is the regularized solve on transformed coefficients") {
  Rng rng(66);
  Eigen::MatrixXd a1 = random_matrix<double>(5, 14, rng);
  Eigen::MatrixXd a2 = random_matrix<double>(5, 14, rng);
  Eigen::VectorXd lam1 = random_matrix<double>(5, 1, rng).cwiseAbs();
  Eigen::VectorXd lam2 = random_matrix<double>(5, 1, rng).cwiseAbs();
  Eigen::MatrixXd direct = solve_fmap_regularized<double>(a1, a2, lam1, lam2, 0.2);
  Eigen::MatrixXd via = fmap_ours_opt<double>(a1, a2, lam1, lam2, 0.2);
  CHECK((direct - via).cwiseAbs().maxCoeff() == 0.0);

  // alpha = 0 reduces to the plain solve.
  CHECK((fmap_ours_opt<double>(a1, a2, lam1, lam2, 0.0) - solve_fmap<double>(a1, a2))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}
