#include "specmatch/descriptors.h"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "specmatch/kdtree.h"

namespace specmatch {

Eigen::MatrixX3d vertex_normals(const TriangleMesh& mesh) {
  Eigen::MatrixX3d normals = Eigen::MatrixX3d::Zero(mesh.num_vertices(), 3);
  for (const auto& f : mesh.faces) {
    Eigen::Vector3d a = mesh.vertices.row(f[0]);
    Eigen::Vector3d b = mesh.vertices.row(f[1]);
    Eigen::Vector3d c = mesh.vertices.row(f[2]);
    Eigen::Vector3d fn = (b - a).cross(c - a);  // magnitude = 2 * area
    for (int idx : f) normals.row(idx) += fn;
  }
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    double len = normals.row(v).norm();
    if (len > 0.0) normals.row(v) /= len;
    if (!normals.row(v).allFinite())
      throw_numerical("non-finite normal at vertex " + std::to_string(v));
  }
  return normals;
}

namespace {

// Repeatable local reference frame: eigenvectors of the distance-weighted
// scatter matrix, signs fixed toward the neighbor majority.
struct LocalFrame {
  Eigen::Vector3d x, y, z;
};

LocalFrame local_frame(const Eigen::MatrixX3d& verts, const std::vector<int>& neighbors,
                       const Eigen::Vector3d& center, double radius) {
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  double total_w = 0.0;
  for (int idx : neighbors) {
    Eigen::Vector3d d = verts.row(idx).transpose() - center;
    double w = radius - d.norm();
    if (w <= 0.0) continue;
    scatter += w * d * d.transpose();
    total_w += w;
  }
  LocalFrame frame;
  if (total_w <= 0.0) {
    frame.x = Eigen::Vector3d::UnitX();
    frame.y = Eigen::Vector3d::UnitY();
    frame.z = Eigen::Vector3d::UnitZ();
    return frame;
  }
  scatter /= total_w;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(scatter);
  frame.x = es.eigenvectors().col(2);  // largest spread
  frame.z = es.eigenvectors().col(0);  // smallest spread, ~surface normal
  int pos_x = 0, pos_z = 0, count = 0;
  for (int idx : neighbors) {
    Eigen::Vector3d d = verts.row(idx).transpose() - center;
    if (d.squaredNorm() == 0.0) continue;
    ++count;
    if (d.dot(frame.x) >= 0.0) ++pos_x;
    if (d.dot(frame.z) >= 0.0) ++pos_z;
  }
  if (2 * pos_x < count) frame.x = -frame.x;
  if (2 * pos_z < count) frame.z = -frame.z;
  frame.y = frame.z.cross(frame.x);
  return frame;
}

// Soft assignment of `coord` (bin units, centered) over `bins` slots.
inline void interp_bins(double coord, int bins, bool wrap, int out_bins[2], double out_w[2]) {
  double shifted = coord - 0.5;
  double base = std::floor(shifted);
  double frac = shifted - base;
  int b0 = int(base), b1 = int(base) + 1;
  if (wrap) {
    b0 = ((b0 % bins) + bins) % bins;
    b1 = ((b1 % bins) + bins) % bins;
  } else {
    b0 = std::clamp(b0, 0, bins - 1);
    b1 = std::clamp(b1, 0, bins - 1);
  }
  out_bins[0] = b0;
  out_bins[1] = b1;
  out_w[0] = 1.0 - frac;
  out_w[1] = frac;
}

}  // namespace

DescriptorField compute_shot(const TriangleMesh& mesh, const ShotParams& params) {
  const int n = mesh.num_vertices();
  double radius = params.radius > 0.0 ? params.radius : 0.05 * mesh.bbox_diagonal();
  if (radius <= 0.0) throw_usage("SHOT radius must be positive");
  const int d = params.dim();
  Eigen::MatrixX3d normals = vertex_normals(mesh);
  KdTree tree(mesh.vertices);

  // Flag vertices whose support may be empty (radius below local edge length).
  int sparse_support = 0;

  DescriptorField field;
  field.kind = DescriptorKind::shot;
  field.values.setZero(n, d);

  const int ab = params.azimuth_bins, eb = params.elevation_bins;
  const int rb = params.radial_bins, hb = params.histogram_bins;

  for (int v = 0; v < n; ++v) {
    Eigen::Vector3d center = mesh.vertices.row(v);
    std::vector<int> neighbors = tree.radius_search(mesh.vertices.row(v), radius);
    if (neighbors.size() <= 1) ++sparse_support;
    LocalFrame frame = local_frame(mesh.vertices, neighbors, center, radius);

    Eigen::VectorXd hist = Eigen::VectorXd::Zero(d);
    for (int idx : neighbors) {
      Eigen::Vector3d delta = mesh.vertices.row(idx).transpose() - center;
      double dist = delta.norm();
      if (dist <= 1e-12 * radius) continue;  // the vertex itself
      double lx = delta.dot(frame.x), ly = delta.dot(frame.y), lz = delta.dot(frame.z);
      Eigen::Vector3d neighbor_normal = normals.row(idx).transpose();
      double cosine = std::clamp(neighbor_normal.dot(frame.z), -1.0, 1.0);

      double azimuth = std::atan2(ly, lx);           // (-pi, pi]
      double elevation = std::clamp(lz / dist, -1.0, 1.0);

      int abin[2], ebin[2], rbin[2], hbin[2];
      double aw[2], ew[2], rw[2], hw[2];
      interp_bins((azimuth + M_PI) / (2.0 * M_PI) * ab, ab, true, abin, aw);
      interp_bins((elevation + 1.0) / 2.0 * eb, eb, false, ebin, ew);
      interp_bins(dist / radius * rb, rb, false, rbin, rw);
      interp_bins((cosine + 1.0) / 2.0 * hb, hb, false, hbin, hw);

      for (int ia = 0; ia < 2; ++ia)
        for (int ie = 0; ie < 2; ++ie)
          for (int ir = 0; ir < 2; ++ir)
            for (int ih = 0; ih < 2; ++ih) {
              double w = aw[ia] * ew[ie] * rw[ir] * hw[ih];
              if (w <= 0.0) continue;
              int slot = ((rbin[ir] * eb + ebin[ie]) * ab + abin[ia]) * hb + hbin[ih];
              hist[slot] += w;
            }
    }
    double norm = hist.norm();
    if (norm > 0.0) hist /= norm;
    field.values.row(v) = hist.transpose();
  }
  if (sparse_support > 0)
    warn("SHOT support radius " + std::to_string(radius) + " leaves " +
         std::to_string(sparse_support) + " vertices with (near-)empty neighborhoods");
  if (!field.values.allFinite()) throw_numerical("SHOT produced non-finite values");
  return field;
}

DescriptorField compute_hks(const LaplaceBasis& basis, int num_times) {
  if (num_times < 1) throw_usage("HKS needs at least one time sample");
  const int k = basis.k;
  Eigen::VectorXd times(num_times);
  if (k == 1) {
    // Only the constant mode: the signature is time independent.
    times.setOnes();
  } else {
    double lambda2 = basis.eigenvalues[1];
    double lambda_k = basis.eigenvalues[k - 1];
    if (lambda2 <= 0.0)
      throw_data("HKS: second eigenvalue is zero (disconnected mesh?)");
    double t_min = 4.0 * std::log(10.0) / lambda_k;
    double t_max = 4.0 * std::log(10.0) / lambda2;
    for (int j = 0; j < num_times; ++j) {
      double s = num_times == 1 ? 0.0 : double(j) / double(num_times - 1);
      times[j] = std::exp(std::log(t_min) + s * (std::log(t_max) - std::log(t_min)));
    }
  }
  DescriptorField field;
  field.kind = DescriptorKind::hks;
  field.values.resize(basis.num_vertices(), num_times);
  Eigen::MatrixXd phi_sq = basis.eigenfunctions.array().square();
  for (int j = 0; j < num_times; ++j) {
    Eigen::VectorXd weights = (-times[j] * basis.eigenvalues.array()).exp();
    field.values.col(j) = phi_sq * weights;
  }
  return field;
}

DescriptorField load_descriptors(const std::string& path, int expected_n) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open descriptor file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    rows.emplace_back();
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      char* end = nullptr;
      double value = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str())
        throw_data(path + ":" + std::to_string(line_no) + ": non-numeric token '" + tok + "'");
      if (!std::isfinite(value))
        throw_data(path + ":" + std::to_string(line_no) + ": non-finite descriptor value");
      rows.back().push_back(value);
    }
    if (rows.size() > 1 && rows.back().size() != rows.front().size())
      throw_data(path + ":" + std::to_string(line_no) + ": ragged row (expected " +
                 std::to_string(rows.front().size()) + " columns)");
  }
  if (int(rows.size()) != expected_n)
    throw_data("descriptor file '" + path + "' has " + std::to_string(rows.size()) +
               " rows, mesh has " + std::to_string(expected_n) + " vertices");
  DescriptorField field;
  field.kind = DescriptorKind::external;
  field.values.resize(long(rows.size()), long(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) field.values(long(i), long(j)) = rows[i][j];
  return field;
}

void save_descriptors(const std::string& path, const DescriptorField& field) {
  write_file_atomic(path, [&](std::ostream& out) {
    out.precision(17);
    for (int i = 0; i < field.rows(); ++i) {
      for (int j = 0; j < field.dim(); ++j) {
        if (j) out << ',';
        out << field.values(i, j);
      }
      out << '\n';
    }
  });
}

std::vector<int> sample_points(int n, int count, uint64_t seed) {
  if (count > n) {
    warn("requested " + std::to_string(count) + " sample points from " + std::to_string(n) +
         " vertices; taking all of them");
    std::vector<int> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  Rng rng(seed, {0x9a3d1eu});
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = 0; i < count; ++i) {
    int j = i + int(rng.below(uint64_t(n - i)));
    std::swap(perm[size_t(i)], perm[size_t(j)]);
  }
  std::vector<int> out(perm.begin(), perm.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace specmatch
