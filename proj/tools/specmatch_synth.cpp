// Generates the synthetic meshes used by the demos and tests: spheres with
// smooth bumps and near-isometric sheet pairs with identity ground truth.

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "specmatch/pointwise.h"
#include "specmatch/synth.h"

using namespace specmatch;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Synthetic shape generator"};
  std::string kind = "sheet-pair";
  std::string out = ".";
  int subdivisions = 3;
  int nx = 33, ny = 31;
  double bend = 2.0;
  double amplitude = 0.12;
  app.add_option("--kind", kind, "sheet-pair | icosphere | bumpy-sphere | tetrahedron");
  app.add_option("--out", out, "output directory");
  app.add_option("--subdivisions", subdivisions, "sphere subdivision level");
  app.add_option("--nx", nx, "sheet grid resolution (x)");
  app.add_option("--ny", ny, "sheet grid resolution (y)");
  app.add_option("--bend", bend, "sheet bend angle in radians");
  app.add_option("--amplitude", amplitude, "bump amplitude");
  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(out);
    if (kind == "sheet-pair") {
      synth::SheetParams params;
      params.nx = nx;
      params.ny = ny;
      params.bump_amplitude = amplitude;
      TriangleMesh a = synth::sheet(params);
      TriangleMesh b = synth::bent_sheet(params, bend);
      synth::write_off(a, (fs::path(out) / "sheet_a.off").string());
      synth::write_off(b, (fs::path(out) / "sheet_b.off").string());
      PointMap gt;
      gt.source = "sheet_a";
      gt.target = "sheet_b";
      gt.target_to_source.resize(size_t(a.num_vertices()));
      for (int v = 0; v < a.num_vertices(); ++v) gt.target_to_source[size_t(v)] = v;
      save_point_map((fs::path(out) / "sheet_gt.map.txt").string(), gt);
      std::printf("wrote sheet_a.off, sheet_b.off, sheet_gt.map.txt (%d vertices)\n",
                  a.num_vertices());
    } else if (kind == "icosphere") {
      TriangleMesh m = synth::icosphere(subdivisions);
      synth::write_off(m, (fs::path(out) / (m.name + ".off")).string());
      std::printf("wrote %s.off (%d vertices)\n", m.name.c_str(), m.num_vertices());
    } else if (kind == "bumpy-sphere") {
      TriangleMesh m = synth::bumpy_sphere(subdivisions, amplitude);
      synth::write_off(m, (fs::path(out) / (m.name + ".off")).string());
      std::printf("wrote %s.off (%d vertices)\n", m.name.c_str(), m.num_vertices());
    } else if (kind == "tetrahedron") {
      TriangleMesh m = synth::tetrahedron();
      synth::write_off(m, (fs::path(out) / "tetrahedron.off").string());
      std::printf("wrote tetrahedron.off\n");
    } else {
      std::fprintf(stderr, "unknown kind '%s'\n", kind.c_str());
      return 2;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.kind() == ErrorKind::usage ? 2 : 3;
  }
  return 0;
}
