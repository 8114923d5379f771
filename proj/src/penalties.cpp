#include "specmatch/penalties.h"

namespace specmatch {

Eigen::MatrixXd mult_operator(const LaplaceBasis& basis, const Eigen::VectorXd& f) {
  if (f.size() != basis.num_vertices())
    throw_usage("mult_operator: function has " + std::to_string(f.size()) + " entries, mesh has " +
                std::to_string(basis.num_vertices()));
  Eigen::VectorXd mf = basis.mass.cwiseProduct(f);
  Eigen::MatrixXd op =
      basis.eigenfunctions.transpose() * (mf.asDiagonal() * basis.eigenfunctions);
  // Diag(f) and the diagonal mass commute, so the operator is exactly symmetric.
  double scale = std::max(1.0, op.cwiseAbs().maxCoeff());
  if ((op - op.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw_numerical("mult_operator: operator lost symmetry");
  return op;
}

}  // namespace specmatch
