#include "specmatch/mesh.h"

#include <Eigen/Geometry>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace specmatch {

namespace {

[[noreturn]] void parse_error(const std::string& path, int line, const std::string& what) {
  throw_data(path + ":" + std::to_string(line) + ": " + what);
}

bool next_content_line(std::istream& in, std::string& line, int& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    size_t start = line.find_first_not_of(" \t\r\n");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    return true;
  }
  return false;
}

TriangleMesh load_off(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open mesh file '" + path + "'");
  TriangleMesh mesh;
  std::string line;
  int line_no = 0;

  if (!next_content_line(in, line, line_no)) parse_error(path, line_no, "empty OFF file");
  {
    std::istringstream ss(line);
    std::string magic;
    ss >> magic;
    if (magic != "OFF") parse_error(path, line_no, "expected OFF header, got '" + magic + "'");
  }
  if (!next_content_line(in, line, line_no)) parse_error(path, line_no, "missing counts line");
  long n = 0, m = 0, e = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> n >> m >> e) || n < 0 || m < 0)
      parse_error(path, line_no, "malformed counts line '" + line + "'");
  }
  mesh.vertices.resize(n, 3);
  for (long i = 0; i < n; ++i) {
    if (!next_content_line(in, line, line_no)) parse_error(path, line_no, "unexpected end of vertex list");
    std::istringstream ss(line);
    double x, y, z;
    if (!(ss >> x >> y >> z)) parse_error(path, line_no, "malformed vertex line '" + line + "'");
    mesh.vertices.row(i) << x, y, z;
  }
  mesh.faces.reserve(size_t(m));
  for (long f = 0; f < m; ++f) {
    if (!next_content_line(in, line, line_no)) parse_error(path, line_no, "unexpected end of face list");
    std::istringstream ss(line);
    int count;
    if (!(ss >> count)) parse_error(path, line_no, "malformed face line '" + line + "'");
    if (count != 3) parse_error(path, line_no, "only triangular faces are supported (got " + std::to_string(count) + ")");
    std::array<int, 3> face{};
    for (int& idx : face)
      if (!(ss >> idx)) parse_error(path, line_no, "malformed face line '" + line + "'");
    mesh.faces.push_back(face);
  }
  return mesh;
}

TriangleMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open mesh file '" + path + "'");
  TriangleMesh mesh;
  std::vector<Eigen::RowVector3d> verts;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) parse_error(path, line_no, "malformed vertex line '" + line + "'");
      verts.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::array<int, 3> face{};
      int k = 0;
      std::string token;
      while (ss >> token) {
        if (k >= 3) parse_error(path, line_no, "only triangular faces are supported");
        // "i", "i/t", "i/t/n", "i//n" all start with the vertex index.
        size_t slash = token.find('/');
        std::string head = slash == std::string::npos ? token : token.substr(0, slash);
        try {
          face[size_t(k)] = std::stoi(head) - 1;  // OBJ is 1-based
        } catch (const std::exception&) {
          parse_error(path, line_no, "malformed face token '" + token + "'");
        }
        ++k;
      }
      if (k != 3) parse_error(path, line_no, "face with " + std::to_string(k) + " vertices");
      mesh.faces.push_back(face);
    }
    // vn/vt/usemtl etc. are skipped; only geometry is read.
  }
  mesh.vertices.resize(long(verts.size()), 3);
  for (size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(long(i)) = verts[i];
  return mesh;
}

}  // namespace

double TriangleMesh::bbox_diagonal() const {
  if (vertices.rows() == 0) return 0.0;
  Eigen::RowVector3d lo = vertices.colwise().minCoeff();
  Eigen::RowVector3d hi = vertices.colwise().maxCoeff();
  return (hi - lo).norm();
}

double face_area(const TriangleMesh& mesh, int face) {
  const auto& f = mesh.faces[size_t(face)];
  Eigen::Vector3d a = mesh.vertices.row(f[0]);
  Eigen::Vector3d b = mesh.vertices.row(f[1]);
  Eigen::Vector3d c = mesh.vertices.row(f[2]);
  return 0.5 * (b - a).cross(c - a).norm();
}

double TriangleMesh::total_area() const {
  double sum = 0.0;
  for (int f = 0; f < num_faces(); ++f) sum += face_area(*this, f);
  return sum;
}

uint64_t TriangleMesh::content_hash() const {
  uint64_t h = hash_bytes(vertices.data(), sizeof(double) * size_t(vertices.size()));
  if (!faces.empty()) h = hash_bytes(faces.data(), sizeof(faces[0]) * faces.size(), h);
  return h;
}

void validate_mesh(const TriangleMesh& mesh) {
  const int n = mesh.num_vertices();
  if (!mesh.vertices.allFinite()) throw_data("mesh '" + mesh.name + "' has non-finite vertex positions");
  const double diag = mesh.bbox_diagonal();
  const double area_floor = 1e-12 * diag * diag;
  std::map<std::pair<int, int>, int> edge_count;
  for (int fi = 0; fi < mesh.num_faces(); ++fi) {
    const auto& f = mesh.faces[size_t(fi)];
    for (int c = 0; c < 3; ++c) {
      if (f[size_t(c)] < 0 || f[size_t(c)] >= n)
        throw_data("mesh '" + mesh.name + "': face " + std::to_string(fi) + " references vertex " +
                   std::to_string(f[size_t(c)]) + " outside [0, " + std::to_string(n) + ")");
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2])
      throw_data("mesh '" + mesh.name + "': face " + std::to_string(fi) + " repeats a vertex index");
    if (face_area(mesh, fi) <= area_floor)
      throw_data("mesh '" + mesh.name + "': face " + std::to_string(fi) + " is degenerate (area " +
                 std::to_string(face_area(mesh, fi)) + ")");
    for (int c = 0; c < 3; ++c) {
      int a = f[size_t(c)], b = f[size_t((c + 1) % 3)];
      edge_count[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  int nonmanifold = 0;
  for (const auto& [edge, count] : edge_count)
    if (count > 2) ++nonmanifold;
  if (nonmanifold > 0)
    warn("mesh '" + mesh.name + "' has " + std::to_string(nonmanifold) +
         " non-manifold edges; continuing");
}

TriangleMesh load_mesh(const std::string& path, MeshFormat format) {
  TriangleMesh mesh = format == MeshFormat::off ? load_off(path) : load_obj(path);
  mesh.name = std::filesystem::path(path).stem().string();
  validate_mesh(mesh);
  return mesh;
}

TriangleMesh load_mesh(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".off") return load_mesh(path, MeshFormat::off);
  if (ext == ".obj") return load_mesh(path, MeshFormat::obj);
  throw_data("unsupported mesh extension '" + ext + "' (expected .off or .obj)");
}

Eigen::VectorXd vertex_areas(const TriangleMesh& mesh) {
  Eigen::VectorXd areas = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (int fi = 0; fi < mesh.num_faces(); ++fi) {
    const double third = face_area(mesh, fi) / 3.0;
    for (int idx : mesh.faces[size_t(fi)]) areas[idx] += third;
  }
  return areas;
}

std::vector<Edge> edge_graph(const TriangleMesh& mesh) {
  std::map<std::pair<int, int>, double> edges;
  for (const auto& f : mesh.faces) {
    for (int c = 0; c < 3; ++c) {
      int a = f[size_t(c)], b = f[size_t((c + 1) % 3)];
      if (a > b) std::swap(a, b);
      edges.emplace(std::make_pair(a, b), (mesh.vertices.row(a) - mesh.vertices.row(b)).norm());
    }
  }
  std::vector<Edge> out;
  out.reserve(edges.size());
  for (const auto& [key, len] : edges) out.push_back({key.first, key.second, len});
  return out;
}

}  // namespace specmatch
