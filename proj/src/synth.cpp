#include "specmatch/synth.h"

#include <cmath>
#include <map>
#include <ostream>

namespace specmatch {
namespace synth {

TriangleMesh tetrahedron(double edge) {
  // Regular tetrahedron inscribed in a cube of side edge/sqrt(2).
  const double s = edge / std::sqrt(2.0);
  TriangleMesh mesh;
  mesh.name = "tetrahedron";
  mesh.vertices.resize(4, 3);
  mesh.vertices << s / 2, s / 2, s / 2,
                   s / 2, -s / 2, -s / 2,
                   -s / 2, s / 2, -s / 2,
                   -s / 2, -s / 2, s / 2;
  mesh.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return mesh;
}

namespace {

TriangleMesh icosahedron() {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh mesh;
  mesh.vertices.resize(12, 3);
  mesh.vertices << -1, phi, 0, 1, phi, 0, -1, -phi, 0, 1, -phi, 0,
                    0, -1, phi, 0, 1, phi, 0, -1, -phi, 0, 1, -phi,
                    phi, 0, -1, phi, 0, 1, -phi, 0, -1, -phi, 0, 1;
  mesh.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  return mesh;
}

TriangleMesh subdivide_projected(TriangleMesh mesh, int subdivisions) {
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    std::vector<Eigen::RowVector3d> verts;
    verts.reserve(size_t(mesh.num_vertices()) * 4);
    for (int v = 0; v < mesh.num_vertices(); ++v) verts.emplace_back(mesh.vertices.row(v));
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Eigen::RowVector3d p = 0.5 * (verts[size_t(a)] + verts[size_t(b)]);
      verts.push_back(p);
      int idx = int(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> faces;
    faces.reserve(mesh.faces.size() * 4);
    for (const auto& f : mesh.faces) {
      int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      faces.push_back({f[0], ab, ca});
      faces.push_back({f[1], bc, ab});
      faces.push_back({f[2], ca, bc});
      faces.push_back({ab, bc, ca});
    }
    mesh.vertices.resize(long(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(long(i)) = verts[i];
    mesh.faces = std::move(faces);
  }
  for (int v = 0; v < mesh.num_vertices(); ++v) mesh.vertices.row(v).normalize();
  return mesh;
}

double bump_profile(double theta, double phi_angle) {
  // Smooth, asymmetric, and free of symmetries that would make the shape
  // self-similar under reflections.
  return 0.5 * std::sin(2.0 * theta) * std::cos(phi_angle) +
         0.3 * std::cos(3.0 * phi_angle + 0.7) * std::sin(theta) +
         0.2 * std::sin(theta + 0.3) * std::sin(2.0 * phi_angle + 1.1);
}

}  // namespace

TriangleMesh icosphere(int subdivisions, double radius) {
  if (subdivisions < 0 || subdivisions > 7) throw_usage("icosphere: subdivisions out of range");
  TriangleMesh mesh = subdivide_projected(icosahedron(), subdivisions);
  mesh.vertices *= radius;
  mesh.name = "icosphere" + std::to_string(subdivisions);
  return mesh;
}

TriangleMesh bumpy_sphere(int subdivisions, double amplitude) {
  TriangleMesh mesh = subdivide_projected(icosahedron(), subdivisions);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    Eigen::RowVector3d p = mesh.vertices.row(v);
    double theta = std::acos(std::clamp(p.z(), -1.0, 1.0));
    double phi_angle = std::atan2(p.y(), p.x());
    mesh.vertices.row(v) = p * (1.0 + amplitude * bump_profile(theta, phi_angle));
  }
  mesh.name = "bumpy_sphere" + std::to_string(subdivisions);
  return mesh;
}

namespace {

double sheet_height(const SheetParams& params, double x, double y) {
  const double a = params.bump_amplitude;
  auto gaussian = [](double dx, double dy, double s) {
    return std::exp(-(dx * dx + dy * dy) / (s * s));
  };
  double u = x / params.width, v = y / params.height;
  return a * gaussian(u - 0.3, v - 0.35, 0.16) + 0.7 * a * gaussian(u - 0.72, v - 0.62, 0.12) -
         0.5 * a * gaussian(u - 0.55, v - 0.2, 0.1);
}

void sheet_topology(const SheetParams& params, TriangleMesh& mesh) {
  mesh.faces.clear();
  mesh.faces.reserve(size_t(params.nx - 1) * size_t(params.ny - 1) * 2);
  auto vid = [&](int i, int j) { return j * params.nx + i; };
  for (int j = 0; j + 1 < params.ny; ++j) {
    for (int i = 0; i + 1 < params.nx; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.faces.push_back({v00, v10, v11});
        mesh.faces.push_back({v00, v11, v01});
      } else {
        mesh.faces.push_back({v00, v10, v01});
        mesh.faces.push_back({v10, v11, v01});
      }
    }
  }
}

}  // namespace

TriangleMesh sheet(const SheetParams& params) {
  if (params.nx < 2 || params.ny < 2) throw_usage("sheet: grid must be at least 2x2");
  TriangleMesh mesh;
  mesh.name = "sheet";
  mesh.vertices.resize(params.nx * params.ny, 3);
  for (int j = 0; j < params.ny; ++j) {
    for (int i = 0; i < params.nx; ++i) {
      double x = params.width * double(i) / double(params.nx - 1);
      double y = params.height * double(j) / double(params.ny - 1);
      mesh.vertices.row(j * params.nx + i) << x, y, sheet_height(params, x, y);
    }
  }
  sheet_topology(params, mesh);
  return mesh;
}

TriangleMesh bent_sheet(const SheetParams& params, double bend_angle) {
  if (!(bend_angle > 0.0) || bend_angle > 2.0 * M_PI)
    throw_usage("bent_sheet: bend angle must lie in (0, 2*pi]");
  TriangleMesh mesh;
  mesh.name = "bent_sheet";
  mesh.vertices.resize(params.nx * params.ny, 3);
  const double radius = params.width / bend_angle;
  for (int j = 0; j < params.ny; ++j) {
    for (int i = 0; i < params.nx; ++i) {
      double x = params.width * double(i) / double(params.nx - 1);
      double y = params.height * double(j) / double(params.ny - 1);
      double h = sheet_height(params, x, y);
      double t = x / radius;
      // Cylinder development plus the height field along the cylinder normal.
      Eigen::RowVector3d base(radius * std::sin(t), y, radius * (1.0 - std::cos(t)));
      Eigen::RowVector3d normal(-std::sin(t), 0.0, std::cos(t));
      mesh.vertices.row(j * params.nx + i) = base + h * normal;
    }
  }
  sheet_topology(params, mesh);
  return mesh;
}

void write_off(const TriangleMesh& mesh, const std::string& path) {
  write_file_atomic(path, [&](std::ostream& out) {
    out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_faces() << " 0\n";
    out.precision(17);
    for (int v = 0; v < mesh.num_vertices(); ++v)
      out << mesh.vertices(v, 0) << ' ' << mesh.vertices(v, 1) << ' ' << mesh.vertices(v, 2) << '\n';
    for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  });
}

void write_obj(const TriangleMesh& mesh, const std::string& path) {
  write_file_atomic(path, [&](std::ostream& out) {
    out.precision(17);
    for (int v = 0; v < mesh.num_vertices(); ++v)
      out << "v " << mesh.vertices(v, 0) << ' ' << mesh.vertices(v, 1) << ' '
          << mesh.vertices(v, 2) << '\n';
    for (const auto& f : mesh.faces)
      out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  });
}

}  // namespace synth
}  // namespace specmatch
