#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <Eigen/Geometry>

#include "specmatch/descriptors.h"
#include "specmatch/synth.h"
#include "test_support.h"

using namespace specmatch;
namespace fs = std::filesystem;

namespace {
fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "specmatch_desc_tests";
  fs::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST_CASE("SHOT rows are unit or zero and 352-dimensional by default") {
  set_warnings_enabled(false);
  TriangleMesh mesh = synth::bumpy_sphere(2);
  ShotParams params;
  params.radius = 0.5;
  DescriptorField field = compute_shot(mesh, params);
  set_warnings_enabled(true);
  CHECK(field.dim() == 352);
  CHECK(field.kind == DescriptorKind::shot);
  for (int v = 0; v < field.rows(); ++v) {
    double norm = field.values.row(v).norm();
    CHECK((std::abs(norm - 1.0) < 1e-6 || norm == 0.0));
  }
}

TEST_CASE("SHOT is invariant under rigid rotation") {
  TriangleMesh mesh = synth::bumpy_sphere(2);
  ShotParams params;
  params.radius = 0.5;
  DescriptorField base = compute_shot(mesh, params);

  TriangleMesh rotated = mesh;
  Eigen::Matrix3d rot =
      Eigen::AngleAxisd(1.1, Eigen::Vector3d(0.3, -1.0, 0.8).normalized()).toRotationMatrix();
  rotated.vertices = (mesh.vertices * rot.transpose()).rowwise() + Eigen::RowVector3d(5, -2, 1);
  DescriptorField moved = compute_shot(rotated, params);

  CHECK((base.values - moved.values).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("SHOT is deterministic") {
  TriangleMesh mesh = synth::bumpy_sphere(1);
  ShotParams params;
  params.radius = 0.8;
  DescriptorField a = compute_shot(mesh, params);
  DescriptorField b = compute_shot(mesh, params);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("HKS with only the constant mode is 1/area") {
  TriangleMesh mesh = synth::bumpy_sphere(1);
  LaplaceBasis basis = compute_basis(mesh, 5);
  basis.eigenvalues.conservativeResize(1);
  basis.eigenfunctions.conservativeResize(Eigen::NoChange, 1);
  basis.k = 1;
  DescriptorField field = compute_hks(basis, 3);
  const double expected = 1.0 / mesh.total_area();
  CHECK((field.values.array() - expected).abs().maxCoeff() < 1e-8 * expected);
}

TEST_CASE("HKS is nonnegative and nearly constant on the round sphere") {
  TriangleMesh mesh = synth::icosphere(3);
  LaplaceBasis basis = compute_basis(mesh, 20);
  DescriptorField field = compute_hks(basis, 8);
  CHECK(field.kind == DescriptorKind::hks);
  CHECK((field.values.array() >= 0.0).all());
  for (int j = 0; j < field.dim(); ++j) {
    double mean = field.values.col(j).mean();
    double dev = (field.values.col(j).array() - mean).abs().maxCoeff();
    CHECK(dev / mean < 0.02);
  }
}

TEST_CASE("HKS is invariant under rigid motion") {
  TriangleMesh mesh = synth::bumpy_sphere(2);
  LaplaceBasis basis = compute_basis(mesh, 12);
  TriangleMesh moved = mesh;
  Eigen::Matrix3d rot =
      Eigen::AngleAxisd(0.4, Eigen::Vector3d(1, 1, 1).normalized()).toRotationMatrix();
  moved.vertices = mesh.vertices * rot.transpose();
  LaplaceBasis basis2 = compute_basis(moved, 12);
  DescriptorField a = compute_hks(basis, 6);
  DescriptorField b = compute_hks(basis2, 6);
  CHECK(test_support::max_rel_error(b.values, a.values) < 1e-6);
}

TEST_CASE("descriptor CSV round-trip and validation") {
  DescriptorField field;
  field.kind = DescriptorKind::external;
  Rng rng(3);
  field.values = test_support::random_matrix<double>(7, 4, rng);
  auto path = temp_file("desc.csv");
  save_descriptors(path.string(), field);

  DescriptorField loaded = load_descriptors(path.string(), 7);
  CHECK(loaded.dim() == 4);
  CHECK((loaded.values - field.values).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_WITH_AS(load_descriptors(path.string(), 8), doctest::Contains("rows"), Error);

  auto bad = temp_file("bad.csv");
  std::ofstream(bad) << "1.0,2.0\n3.0,oops\n";
  CHECK_THROWS_WITH_AS(load_descriptors(bad.string(), 2), doctest::Contains("non-numeric"), Error);

  auto nan_file = temp_file("nan.csv");
  std::ofstream(nan_file) << "1.0,2.0\nNaN,4.0\n";
  CHECK_THROWS_WITH_AS(load_descriptors(nan_file.string(), 2), doctest::Contains("non-finite"),
                       Error);
}

TEST_CASE("sample_points draws distinct reproducible indices") {
  std::vector<int> a = sample_points(5000, 1500, 99);
  std::vector<int> b = sample_points(5000, 1500, 99);
  CHECK(a.size() == 1500);
  CHECK(a == b);
  CHECK(std::set<int>(a.begin(), a.end()).size() == 1500);
  CHECK(std::is_sorted(a.begin(), a.end()));
  for (int idx : a) {
    CHECK(idx >= 0);
    CHECK(idx < 5000);
  }
}

TEST_CASE("sample_points clamps when count exceeds n") {
  set_warnings_enabled(false);
  std::vector<int> all = sample_points(1000, 1500, 1);
  set_warnings_enabled(true);
  CHECK(all.size() == 1000);
  for (int i = 0; i < 1000; ++i) CHECK(all[size_t(i)] == i);
}

TEST_CASE("different seeds give different samples") {
  CHECK(sample_points(4000, 500, 1) != sample_points(4000, 500, 2));
}
