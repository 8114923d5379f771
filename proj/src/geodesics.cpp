#include "specmatch/geodesics.h"

#include <limits>
#include <queue>

namespace specmatch {

AdjacencyGraph build_adjacency(const std::vector<Edge>& edges, int n) {
  AdjacencyGraph graph;
  graph.n = n;
  std::vector<int> degree(size_t(n), 0);
  for (const auto& e : edges) {
    if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n) throw_usage("edge endpoint out of range");
    ++degree[size_t(e.a)];
    ++degree[size_t(e.b)];
  }
  graph.offsets.assign(size_t(n) + 1, 0);
  for (int v = 0; v < n; ++v) graph.offsets[size_t(v) + 1] = graph.offsets[size_t(v)] + degree[size_t(v)];
  graph.targets.resize(size_t(graph.offsets.back()));
  graph.weights.resize(graph.targets.size());
  std::vector<int> cursor(graph.offsets.begin(), graph.offsets.end() - 1);
  for (const auto& e : edges) {
    graph.targets[size_t(cursor[size_t(e.a)])] = e.b;
    graph.weights[size_t(cursor[size_t(e.a)]++)] = e.length;
    graph.targets[size_t(cursor[size_t(e.b)])] = e.a;
    graph.weights[size_t(cursor[size_t(e.b)]++)] = e.length;
  }
  return graph;
}

AdjacencyGraph build_adjacency(const TriangleMesh& mesh) {
  return build_adjacency(edge_graph(mesh), mesh.num_vertices());
}

Eigen::VectorXd dijkstra(const AdjacencyGraph& graph, int source) {
  if (source < 0 || source >= graph.n) throw_usage("dijkstra: source out of range");
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd dist = Eigen::VectorXd::Constant(graph.n, inf);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;  // stale entry
    for (int e = graph.offsets[size_t(v)]; e < graph.offsets[size_t(v) + 1]; ++e) {
      int u = graph.targets[size_t(e)];
      double nd = d + graph.weights[size_t(e)];
      if (nd < dist[u]) {
        dist[u] = nd;
        queue.emplace(nd, u);
      }
    }
  }
  return dist;
}

Eigen::MatrixXd geodesic_distances_from(const TriangleMesh& mesh, const std::vector<int>& sources) {
  AdjacencyGraph graph = build_adjacency(mesh);
  Eigen::MatrixXd rows(long(sources.size()), mesh.num_vertices());
  int unreachable = 0;
  for (size_t i = 0; i < sources.size(); ++i) {
    rows.row(long(i)) = dijkstra(graph, sources[i]).transpose();
    unreachable += int((rows.row(long(i)).array() == std::numeric_limits<double>::infinity()).count());
  }
  if (unreachable > 0)
    warn("geodesic distances: " + std::to_string(unreachable) +
         " unreachable source/target combinations (disconnected mesh?)");
  return rows;
}

}  // namespace specmatch
