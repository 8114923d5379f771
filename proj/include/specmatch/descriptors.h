#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "specmatch/mesh.h"
#include "specmatch/spectral.h"

namespace specmatch {

enum class DescriptorKind { shot, hks, external, transformed };

struct DescriptorField {
  Eigen::MatrixXd values;  // n x d
  DescriptorKind kind = DescriptorKind::external;

  int dim() const { return int(values.cols()); }
  int rows() const { return int(values.rows()); }
};

struct ShotParams {
  double radius = 0.0;  // 0 => 5% of the bounding-box diagonal
  int azimuth_bins = 8;
  int elevation_bins = 2;
  int radial_bins = 2;
  int histogram_bins = 11;

  int dim() const { return azimuth_bins * elevation_bins * radial_bins * histogram_bins; }
};

// Area-weighted vertex normals (unit length). Throws on non-finite results.
Eigen::MatrixX3d vertex_normals(const TriangleMesh& mesh);

// Histograms of normal-cosines over an oriented local frame, one row per
// vertex, L2-normalized (empty neighborhoods give zero rows). Default bin
// counts yield 352 values per vertex.
DescriptorField compute_shot(const TriangleMesh& mesh, const ShotParams& params = {});

// Heat kernel signature columns at log-spaced times derived from the spectrum.
DescriptorField compute_hks(const LaplaceBasis& basis, int num_times);

// CSV, one vertex per row, comma separated, no header.
DescriptorField load_descriptors(const std::string& path, int expected_n);
void save_descriptors(const std::string& path, const DescriptorField& field);

// `count` distinct uniform indices in [0, n), sorted ascending, deterministic
// per seed. count > n clamps to all indices with a warning.
std::vector<int> sample_points(int n, int count, uint64_t seed);

}  // namespace specmatch
