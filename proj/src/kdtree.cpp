#include "specmatch/kdtree.h"

#include <algorithm>
#include <limits>
#include <numeric>

#include "specmatch/common.h"

namespace specmatch {

namespace {
constexpr int kLeafSize = 16;
constexpr int kBruteForceDim = 24;
}  // namespace

KdTree::KdTree(const Eigen::MatrixXd& points) : points_(points) {
  if (points_.rows() == 0) throw_usage("KdTree: empty point set");
  indices_.resize(size_t(points_.rows()));
  std::iota(indices_.begin(), indices_.end(), 0);
  nodes_.reserve(size_t(2 * points_.rows() / kLeafSize + 2));
  root_ = build(0, int(indices_.size()));
}

int KdTree::build(int begin, int end) {
  Node node;
  if (end - begin <= kLeafSize) {
    node.begin = begin;
    node.end = end;
    // Ordered leaves make the smallest-index tie rule independent of build order.
    std::sort(indices_.begin() + begin, indices_.begin() + end);
    nodes_.push_back(node);
    return int(nodes_.size()) - 1;
  }
  // Split the widest axis at the median.
  int axis = 0;
  double best_spread = -1.0;
  for (int d = 0; d < points_.cols(); ++d) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int i = begin; i < end; ++i) {
      double v = points_(indices_[size_t(i)], d);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      axis = d;
    }
  }
  int mid = (begin + end) / 2;
  std::nth_element(indices_.begin() + begin, indices_.begin() + mid, indices_.begin() + end,
                   [&](int a, int b) { return points_(a, axis) < points_(b, axis); });
  node.axis = axis;
  node.split = points_(indices_[size_t(mid)], axis);
  int self = int(nodes_.size());
  nodes_.push_back(node);
  int left = build(begin, mid);
  int right = build(mid, end);
  nodes_[size_t(self)].left = left;
  nodes_[size_t(self)].right = right;
  return self;
}

void KdTree::search(int node_id, const Eigen::RowVectorXd& query, double& best_d2,
                    int& best_idx) const {
  const Node& node = nodes_[size_t(node_id)];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      int idx = indices_[size_t(i)];
      double d2 = (points_.row(idx) - query).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
        best_d2 = d2;
        best_idx = idx;
      }
    }
    return;
  }
  double delta = query[node.axis] - node.split;
  int near = delta < 0.0 ? node.left : node.right;
  int far = delta < 0.0 ? node.right : node.left;
  search(near, query, best_d2, best_idx);
  if (delta * delta <= best_d2) search(far, query, best_d2, best_idx);
}

int KdTree::nearest(const Eigen::Ref<const Eigen::RowVectorXd>& query) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_idx = std::numeric_limits<int>::max();
  Eigen::RowVectorXd q = query;
  search(root_, q, best_d2, best_idx);
  return best_idx;
}

void KdTree::search_radius(int node_id, const Eigen::RowVectorXd& query, double r2,
                           std::vector<int>& out) const {
  const Node& node = nodes_[size_t(node_id)];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      int idx = indices_[size_t(i)];
      if ((points_.row(idx) - query).squaredNorm() <= r2) out.push_back(idx);
    }
    return;
  }
  double delta = query[node.axis] - node.split;
  int near = delta < 0.0 ? node.left : node.right;
  int far = delta < 0.0 ? node.right : node.left;
  search_radius(near, query, r2, out);
  if (delta * delta <= r2) search_radius(far, query, r2, out);
}

std::vector<int> KdTree::radius_search(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                       double radius) const {
  std::vector<int> out;
  Eigen::RowVectorXd q = query;
  search_radius(root_, q, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> nearest_rows(const Eigen::MatrixXd& points, const Eigen::MatrixXd& queries) {
  if (points.cols() != queries.cols()) throw_usage("nearest_rows: dimension mismatch");
  if (points.rows() == 0) throw_usage("nearest_rows: empty point set");
  std::vector<int> result(static_cast<size_t>(queries.rows()));

  if (points.cols() < kBruteForceDim) {
    KdTree tree(points);
    for (int q = 0; q < queries.rows(); ++q) result[size_t(q)] = tree.nearest(queries.row(q));
    return result;
  }

  // High dimension: argmin over ||p||^2 - 2 p.q computed blockwise with GEMM.
  Eigen::VectorXd p2 = points.rowwise().squaredNorm();
  const int block = 256;
  for (int q0 = 0; q0 < queries.rows(); q0 += block) {
    int qn = std::min<int>(block, int(queries.rows()) - q0);
    Eigen::MatrixXd scores = points * queries.middleRows(q0, qn).transpose();  // n x qn
    scores = (-2.0 * scores).colwise() + p2;
    for (int j = 0; j < qn; ++j) {
      double best = std::numeric_limits<double>::infinity();
      int best_idx = 0;
      for (int i = 0; i < scores.rows(); ++i) {
        if (scores(i, j) < best) {  // strict '<' keeps the smallest index on ties
          best = scores(i, j);
          best_idx = i;
        }
      }
      result[size_t(q0 + j)] = best_idx;
    }
  }
  return result;
}

}  // namespace specmatch
