#include <doctest.h>

#include <filesystem>

#include <Eigen/Dense>

#include "specmatch/fmap.h"
#include "test_support.h"

using namespace specmatch;
using test_support::max_rel_error;
using test_support::random_matrix;

TEST_CASE("solve_fmap with identity source coefficients copies the target") {
  Eigen::MatrixXd a1 = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd a2(2, 2);
  a2 << 0, 1, 1, 0;
  Eigen::MatrixXd c = solve_fmap<double>(a1, a2);
  CHECK(max_rel_error(c, a2) < 1e-8);
}

TEST_CASE("solve_fmap maps a shape to itself with the identity") {
  Rng rng(21);
  Eigen::MatrixXd a = random_matrix<double>(5, 20, rng);
  Eigen::MatrixXd c = solve_fmap<double>(a, a);
  CHECK((c - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("solve_fmap on orthogonal rows reduces to per-row scaling") {
  Eigen::MatrixXd a1(2, 3), a2(2, 3);
  a1 << 1, 0, 0, 0, 1, 0;
  a2 << 2, 0, 0, 0, 3, 0;
  Eigen::MatrixXd c = solve_fmap<double>(a1, a2);
  Eigen::MatrixXd expected = Eigen::Vector2d(2, 3).asDiagonal();
  CHECK(max_rel_error(c, expected) < 1e-8);
}

TEST_CASE("solved map is a local minimum of the Frobenius objective") {
  Rng rng(22);
  Eigen::MatrixXd a1 = random_matrix<double>(6, 25, rng);
  Eigen::MatrixXd a2 = random_matrix<double>(6, 25, rng);
  Eigen::MatrixXd c = solve_fmap<double>(a1, a2);
  double at_solution = (c * a1 - a2).squaredNorm();
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd delta = random_matrix<double>(6, 6, rng);
    delta *= 1e-3 / delta.norm();
    CHECK((((c + delta) * a1 - a2)).squaredNorm() >= at_solution);
  }
}

TEST_CASE("solve_fmap_backward returns zero for zero upstream gradient") {
  Rng rng(23);
  Eigen::MatrixXd a1 = random_matrix<double>(4, 12, rng);
  Eigen::MatrixXd a2 = random_matrix<double>(3, 12, rng);
  Eigen::MatrixXd c = solve_fmap<double>(a1, a2);
  auto [g1, g2] = solve_fmap_backward<double>(a1, a2, c, Eigen::MatrixXd::Zero(3, 4));
  CHECK(g1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solve_fmap_backward with identity source: d||C-B||^2/dA2 = 2(C-B)") {
  Rng rng(24);
  const int k = 4;
  Eigen::MatrixXd a1 = Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd a2 = random_matrix<double>(k, k, rng);
  Eigen::MatrixXd b = random_matrix<double>(k, k, rng);
  Eigen::MatrixXd c = solve_fmap<double>(a1, a2);
  Eigen::MatrixXd grad_c = 2.0 * (c - b);
  auto [g1, g2] = solve_fmap_backward<double>(a1, a2, c, grad_c);
  CHECK(max_rel_error(g2, grad_c) < 1e-6);
}

TEST_CASE("solve_fmap_backward matches finite differences") {
  // E = ||C||^2 / 2 over random instances, k <= 10, d <= 30.
  for (int trial = 0; trial < 20; ++trial) {
    Rng rng(100 + uint64_t(trial));
    int k1 = 2 + int(rng.below(9));
    int k2 = 2 + int(rng.below(9));
    int d = std::max(k1, k2) + 5 + int(rng.below(16));
    Eigen::MatrixXd a1 = random_matrix<double>(k1, d, rng);
    Eigen::MatrixXd a2 = random_matrix<double>(k2, d, rng);

    auto loss = [&](const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2) {
      return 0.5 * solve_fmap<double>(x1, x2).squaredNorm();
    };
    Eigen::MatrixXd c = solve_fmap<double>(a1, a2);
    auto [g1, g2] = solve_fmap_backward<double>(a1, a2, c, c);

    Eigen::MatrixXd fd1 = test_support::finite_difference(
        [&](const Eigen::MatrixXd& x) { return loss(x, a2); }, a1);
    Eigen::MatrixXd fd2 = test_support::finite_difference(
        [&](const Eigen::MatrixXd& x) { return loss(a1, x); }, a2);
    CHECK(max_rel_error(g1, fd1) < 1e-4);
    CHECK(max_rel_error(g2, fd2) < 1e-4);
  }
}

TEST_CASE("regularized solve with alpha = 0 equals the plain solve") {
  Rng rng(25);
  Eigen::MatrixXd a1 = random_matrix<double>(5, 18, rng);
  Eigen::MatrixXd a2 = random_matrix<double>(5, 18, rng);
  Eigen::VectorXd lam1 = random_matrix<double>(5, 1, rng).cwiseAbs();
  Eigen::VectorXd lam2 = random_matrix<double>(5, 1, rng).cwiseAbs();
  Eigen::MatrixXd plain = solve_fmap<double>(a1, a2);
  Eigen::MatrixXd reg = solve_fmap_regularized<double>(a1, a2, lam1, lam2, 0.0);
  CHECK((plain - reg).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("regularized solve returns the identity for identical inputs") {
  Rng rng(26);
  Eigen::MatrixXd a = random_matrix<double>(4, 16, rng);
  Eigen::VectorXd lam(4);
  lam << 0.0, 1.0, 2.5, 4.0;
  Eigen::MatrixXd c = solve_fmap_regularized<double>(a, a, lam, lam, 0.5);
  CHECK((c - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("large alpha suppresses off-diagonal coupling of distinct eigenvalues") {
  Rng rng(27);
  Eigen::MatrixXd a1 = random_matrix<double>(2, 10, rng);
  Eigen::MatrixXd a2 = random_matrix<double>(2, 10, rng);
  Eigen::VectorXd lam1(2), lam2(2);
  lam1 << 0.0, 1.0;
  lam2 << 0.0, 3.0;
  Eigen::MatrixXd c = solve_fmap_regularized<double>(a1, a2, lam1, lam2, 1e8);
  CHECK(std::abs(c(0, 1)) < 1e-3);
  CHECK(std::abs(c(1, 0)) < 1e-3);
}

TEST_CASE("row-decoupled regularized solve matches the dense normal equations") {
  // Oracle: solve the full k^2 x k^2 system over vec(C) built from Kronecker
  // identities, independent of the row-decoupling shortcut.
  Rng rng(28);
  const int k = 4, d = 15;
  Eigen::MatrixXd a1 = random_matrix<double>(k, d, rng);
  Eigen::MatrixXd a2 = random_matrix<double>(k, d, rng);
  Eigen::VectorXd lam1 = random_matrix<double>(k, 1, rng).cwiseAbs();
  Eigen::VectorXd lam2 = random_matrix<double>(k, 1, rng).cwiseAbs();
  const double alpha = 0.37;

  Eigen::MatrixXd gram = a1 * a1.transpose();
  const double ridge = fmap_ridge(gram);
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);
  auto kron = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    Eigen::MatrixXd out(x.rows() * y.rows(), x.cols() * y.cols());
    for (int i = 0; i < x.rows(); ++i)
      for (int j = 0; j < x.cols(); ++j)
        out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    return out;
  };
  Eigen::MatrixXd lam1_d = Eigen::MatrixXd(lam1.asDiagonal());
  Eigen::MatrixXd lam2_d = Eigen::MatrixXd(lam2.asDiagonal());
  Eigen::MatrixXd system = kron(gram.transpose(), eye) +
                           alpha * (kron(lam1_d * lam1_d, eye) - 2.0 * kron(lam1_d, lam2_d) +
                                    kron(eye, lam2_d * lam2_d)) +
                           ridge * Eigen::MatrixXd::Identity(k * k, k * k);
  Eigen::MatrixXd rhs_mat = a2 * a1.transpose();
  Eigen::VectorXd rhs = Eigen::Map<Eigen::VectorXd>(rhs_mat.data(), k * k);
  Eigen::VectorXd vec_c = system.ldlt().solve(rhs);
  Eigen::MatrixXd expected = Eigen::Map<Eigen::MatrixXd>(vec_c.data(), k, k);

  Eigen::MatrixXd c = solve_fmap_regularized<double>(a1, a2, lam1, lam2, alpha);
  CHECK(max_rel_error(c, expected) < 1e-8);
}

TEST_CASE("functional map CSV round-trip") {
  namespace fs = std::filesystem;
  Rng rng(29);
  FunctionalMap fmap;
  fmap.C = random_matrix<double>(3, 5, rng);
  fmap.source = "alpha";
  fmap.target = "beta";
  fs::path dir = fs::temp_directory_path() / "specmatch_fmap_tests";
  fs::create_directories(dir);
  std::string path = (dir / "map.fmap.csv").string();
  save_fmap_csv(path, fmap);
  FunctionalMap loaded = load_fmap_csv(path);
  CHECK(loaded.source == "alpha");
  CHECK(loaded.target == "beta");
  CHECK((loaded.C - fmap.C).cwiseAbs().maxCoeff() == 0.0);
}
