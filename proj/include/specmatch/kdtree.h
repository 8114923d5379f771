#pragma once

#include <vector>

#include <Eigen/Core>

namespace specmatch {

// Exact nearest-neighbor search over the rows of a point matrix, any dimension.
// Ties are broken toward the smallest row index.
class KdTree {
public:
  explicit KdTree(const Eigen::MatrixXd& points);

  int nearest(const Eigen::Ref<const Eigen::RowVectorXd>& query) const;
  std::vector<int> radius_search(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                 double radius) const;

private:
  struct Node {
    int axis = -1;       // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // index range for leaves
  };

  int build(int begin, int end);
  void search(int node, const Eigen::RowVectorXd& query, double& best_d2, int& best_idx) const;
  void search_radius(int node, const Eigen::RowVectorXd& query, double r2,
                     std::vector<int>& out) const;

  Eigen::MatrixXd points_;
  std::vector<int> indices_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Index of the nearest row of `points` for every row of `queries`. KD-tree in
// low dimension; blocked matrix products in high dimension, where a tree
// cannot prune. Both paths are exact and use the same tie rule.
std::vector<int> nearest_rows(const Eigen::MatrixXd& points, const Eigen::MatrixXd& queries);

}  // namespace specmatch
