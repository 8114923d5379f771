#pragma once

#include <string>

#include "specmatch/mesh.h"

namespace specmatch {
namespace synth {

TriangleMesh tetrahedron(double edge = 1.0);

// Subdivided icosahedron projected to the sphere. Subdivision levels 0..5 give
// 12, 42, 162, 642, 2562, 10242 vertices.
TriangleMesh icosphere(int subdivisions, double radius = 1.0);

// Sphere with a smooth asymmetric radius modulation; geometry varies
// everywhere, which keeps local descriptors informative.
TriangleMesh bumpy_sphere(int subdivisions, double amplitude = 0.15);

struct SheetParams {
  int nx = 33, ny = 31;          // grid resolution (nx*ny vertices)
  double width = 2.0, height = 1.5;
  double bump_amplitude = 0.12;  // two asymmetric smooth bumps and one dent
};

// Flat sheet with smooth height bumps.
TriangleMesh sheet(const SheetParams& params = {});

// The same sheet wrapped around a cylinder of arc `bend_angle` (radians) as an
// offset surface. Shares connectivity and vertex order with sheet(), so the
// identity map is the ground-truth correspondence; near-isometric for small
// bump amplitudes.
TriangleMesh bent_sheet(const SheetParams& params = {}, double bend_angle = 2.0);

void write_off(const TriangleMesh& mesh, const std::string& path);
void write_obj(const TriangleMesh& mesh, const std::string& path);

}  // namespace synth
}  // namespace specmatch
