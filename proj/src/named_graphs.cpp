#include <random>
#include <stdexcept>

#include "hdse/gdwl.hpp"

namespace hdse {

Graph generalized_petersen(NodeId n, NodeId k) {
  if (n < 3 || k < 1 || 2 * k >= n) throw std::invalid_argument("generalized_petersen: need n >= 3, 1 <= k < n/2");
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) {
    edges.emplace_back(i, (i + 1) % n);
    edges.emplace_back(i, n + i);
    edges.emplace_back(n + i, n + (i + k) % n);
  }
  return Graph::from_edges(2 * n, edges);
}

Graph dodecahedron() { return generalized_petersen(10, 2); }

Graph desargues() { return generalized_petersen(10, 3); }

Graph cycle_graph(NodeId n) {
  if (n < 3) throw std::invalid_argument("cycle_graph: need n >= 3");
  std::vector<Edge> edges;
  for (NodeId i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return Graph::from_edges(n, edges);
}

Graph barbell(NodeId k) {
  if (k < 2) throw std::invalid_argument("barbell: clique size must be >= 2");
  std::vector<Edge> edges;
  for (NodeId block = 0; block < 2; ++block) {
    for (NodeId i = 0; i < k; ++i) {
      for (NodeId j = i + 1; j < k; ++j) edges.emplace_back(block * k + i, block * k + j);
    }
  }
  edges.emplace_back(k - 1, k);
  return Graph::from_edges(2 * k, edges);
}

namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
}

}  // namespace

Graph erdos_renyi(NodeId n, double p, std::uint64_t seed) {
  check_probability(p, "edge probability");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (coin(rng)) edges.emplace_back(u, v);
    }
  }
  return Graph::from_edges(n, edges);
}

Graph community_pair(NodeId n, double p, double q, std::uint64_t seed) {
  check_probability(p, "intra-block probability");
  check_probability(q, "inter-block probability");
  if (n < 2) throw std::invalid_argument("community_pair: need at least 2 nodes");
  const NodeId first = (n + 1) / 2;
  std::vector<int> labels(n);
  for (NodeId u = 0; u < n; ++u) labels[u] = u < first ? 0 : 1;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const double prob = labels[u] == labels[v] ? p : q;
      if (unit(rng) < prob) edges.emplace_back(u, v);
    }
  }
  return Graph::from_edges(n, edges).with_labels(std::move(labels));
}

Graph make_named_graph(const NamedGraphSpec& spec) {
  if (spec.name == "dodecahedron") return dodecahedron();
  if (spec.name == "desargues") return desargues();
  if (spec.name == "cycle") return cycle_graph(spec.n);
  if (spec.name == "barbell") return barbell(spec.k);
  if (spec.name == "petersen") return generalized_petersen(spec.n, spec.k);
  if (spec.name == "community_pair") return community_pair(spec.n, spec.p, spec.q, spec.seed);
  if (spec.name == "erdos_renyi") return erdos_renyi(spec.n, spec.p, spec.seed);
  throw std::invalid_argument("unknown named graph '" + spec.name + "'");
}

}  // namespace hdse
