#include "specmatch/spectral.h"

#include <Eigen/Geometry>
#include <cmath>
#include <fstream>
#include <vector>

namespace specmatch {

namespace {
constexpr double kCotClamp = 1e8;
constexpr uint32_t kBasisMagic = 0x534d4231;  // "SMB1"

template <class T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
void read_pod(std::istream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
}
}  // namespace

Eigen::SparseMatrix<double> cotan_laplacian(const TriangleMesh& mesh) {
  const int n = mesh.num_vertices();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.faces.size() * 12);
  int clamped = 0;
  for (const auto& f : mesh.faces) {
    for (int c = 0; c < 3; ++c) {
      const int opp = f[size_t(c)];
      const int i = f[size_t((c + 1) % 3)];
      const int j = f[size_t((c + 2) % 3)];
      Eigen::Vector3d u = mesh.vertices.row(i) - mesh.vertices.row(opp);
      Eigen::Vector3d v = mesh.vertices.row(j) - mesh.vertices.row(opp);
      double cross = u.cross(v).norm();
      double cot;
      if (cross < u.dot(v) / kCotClamp || cross == 0.0) {
        cot = u.dot(v) >= 0.0 ? kCotClamp : -kCotClamp;
        ++clamped;
      } else {
        cot = u.dot(v) / cross;
        if (std::abs(cot) > kCotClamp) {
          cot = cot > 0 ? kCotClamp : -kCotClamp;
          ++clamped;
        }
      }
      const double w = -0.5 * cot;
      triplets.emplace_back(i, j, w);
      triplets.emplace_back(j, i, w);
      triplets.emplace_back(i, i, -w);
      triplets.emplace_back(j, j, -w);
    }
  }
  if (clamped > 0)
    warn("clamped " + std::to_string(clamped) + " near-degenerate cotangents in mesh '" +
         mesh.name + "'");
  Eigen::SparseMatrix<double> W(n, n);
  W.setFromTriplets(triplets.begin(), triplets.end());
  return W;
}

LaplaceBasis compute_basis(const TriangleMesh& mesh, int k, const EigsOptions& opts) {
  const int n = mesh.num_vertices();
  if (k < 1) throw_usage("basis size must be positive");
  if (k >= n)
    throw_usage("basis size k=" + std::to_string(k) + " must be smaller than the vertex count " +
                std::to_string(n));
  Eigen::SparseMatrix<double> W = cotan_laplacian(mesh);
  Eigen::VectorXd mass = vertex_areas(mesh);
  EigsResult eig = smallest_eigenpairs(W, mass, k, opts);

  LaplaceBasis basis;
  basis.k = k;
  basis.mass = std::move(mass);
  basis.eigenvalues = std::move(eig.eigenvalues);
  basis.eigenfunctions = std::move(eig.eigenvectors);
  basis.mesh_hash = mesh.content_hash();

  const double lambda_max = std::abs(basis.eigenvalues[k - 1]);
  for (int i = 0; i < k; ++i) {
    // The pencil is positive semidefinite; only roundoff puts modes below zero.
    if (basis.eigenvalues[i] < 0.0 && basis.eigenvalues[i] > -1e-8 * std::max(lambda_max, 1.0))
      basis.eigenvalues[i] = 0.0;
    int max_row = 0;
    basis.eigenfunctions.col(i).cwiseAbs().maxCoeff(&max_row);
    if (basis.eigenfunctions(max_row, i) < 0.0) basis.eigenfunctions.col(i) *= -1.0;
  }
  return basis;
}

Eigen::VectorXd project(const LaplaceBasis& basis, const Eigen::VectorXd& f) {
  if (f.size() != basis.num_vertices())
    throw_usage("project: function has " + std::to_string(f.size()) + " entries, mesh has " +
                std::to_string(basis.num_vertices()));
  return basis.eigenfunctions.transpose() * (basis.mass.asDiagonal() * f);
}

Eigen::MatrixXd project_columns(const LaplaceBasis& basis, const Eigen::MatrixXd& fields) {
  if (fields.rows() != basis.num_vertices()) throw_usage("project_columns: row count mismatch");
  return basis.eigenfunctions.transpose() * (basis.mass.asDiagonal() * fields);
}

Eigen::VectorXd reconstruct(const LaplaceBasis& basis, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != basis.k)
    throw_usage("reconstruct: coefficient vector has " + std::to_string(coeffs.size()) +
                " entries, basis has k=" + std::to_string(basis.k));
  return basis.eigenfunctions * coeffs;
}

void save_basis(const std::string& path, const LaplaceBasis& basis) {
  write_file_atomic(path, [&](std::ostream& out) {
    write_pod(out, kBasisMagic);
    write_pod(out, uint32_t{1});
    write_pod(out, basis.mesh_hash);
    write_pod(out, uint32_t(basis.num_vertices()));
    write_pod(out, uint32_t(basis.k));
    out.write(reinterpret_cast<const char*>(basis.eigenvalues.data()),
              std::streamsize(sizeof(double)) * basis.k);
    out.write(reinterpret_cast<const char*>(basis.mass.data()),
              std::streamsize(sizeof(double)) * basis.num_vertices());
    // Row-major layout so the file is independent of Eigen's default ordering.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> phi =
        basis.eigenfunctions;
    out.write(reinterpret_cast<const char*>(phi.data()), std::streamsize(sizeof(double)) * phi.size());
  });
}

LaplaceBasis load_basis(const std::string& path, uint64_t expected_mesh_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open basis cache '" + path + "'");
  uint32_t magic = 0, version = 0, n = 0, k = 0;
  uint64_t hash = 0;
  read_pod(in, magic);
  read_pod(in, version);
  read_pod(in, hash);
  read_pod(in, n);
  read_pod(in, k);
  if (!in || magic != kBasisMagic) throw_data("'" + path + "' is not a basis cache");
  if (version != 1) throw_data("unsupported basis cache version in '" + path + "'");
  if (hash != expected_mesh_hash)
    throw_data("basis cache '" + path + "' was built from a different mesh (stale cache)");
  LaplaceBasis basis;
  basis.k = int(k);
  basis.mesh_hash = hash;
  basis.eigenvalues.resize(k);
  basis.mass.resize(n);
  in.read(reinterpret_cast<char*>(basis.eigenvalues.data()), std::streamsize(sizeof(double)) * k);
  in.read(reinterpret_cast<char*>(basis.mass.data()), std::streamsize(sizeof(double)) * n);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> phi(n, k);
  in.read(reinterpret_cast<char*>(phi.data()), std::streamsize(sizeof(double)) * phi.size());
  if (!in) throw_data("basis cache '" + path + "' is truncated");
  basis.eigenfunctions = phi;
  return basis;
}

}  // namespace specmatch
