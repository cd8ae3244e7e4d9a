/*
 * coarsening.hpp
 *
 * Graph hierarchies (G^0 ... G^K) built by repeatedly coarsening a graph
 * with a community-detection or matching algorithm. Level k+1 has one node
 * per cluster of level k; the cluster map phi_k is a surjective Partition,
 * and the one-hot projection P^k together with its size-normalized variant
 * P^k C^{-1/2} carries features upward.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hdse/graph.hpp"

namespace hdse {

using ClusterId = std::uint32_t;

/* Surjective map from nodes onto [0, num_clusters). */
struct Partition {
  std::vector<ClusterId> assign;
  ClusterId num_clusters{0};

  // Renumbers arbitrary labels by order of first appearance, which makes the
  // numbering canonical for a given node order.
  static Partition from_labels(std::span<const std::uint32_t> labels);
  static Partition singletons(NodeId n);
  static Partition whole(NodeId n);

  std::vector<std::uint32_t> cluster_sizes() const;
  void validate(NodeId num_nodes) const;

  friend bool operator==(const Partition&, const Partition&) = default;
};

class ProjectionMatrix {
 public:
  ProjectionMatrix() = default;
  explicit ProjectionMatrix(const Partition& p);

  Eigen::Index rows() const noexcept { return static_cast<Eigen::Index>(assign_.size()); }
  Eigen::Index cols() const noexcept { return static_cast<Eigen::Index>(sizes_.size()); }
  const std::vector<ClusterId>& assignment() const noexcept { return assign_; }
  const std::vector<std::uint32_t>& cluster_sizes() const noexcept { return sizes_; }

  // Dense one-hot matrix (|V^k| x |V^{k+1}|).
  Eigen::MatrixXd raw() const;
  // raw * C^{-1/2}; columns are orthonormal.
  Eigen::MatrixXd normalized() const;
  // normalized^T * x without materializing the projection.
  Eigen::MatrixXd project(const Eigen::MatrixXd& x) const;
  // Per-cluster mean of the rows of x.
  Eigen::MatrixXd cluster_mean(const Eigen::MatrixXd& x) const;

 private:
  std::vector<ClusterId> assign_;
  std::vector<std::uint32_t> sizes_;
};

enum class CoarseningAlgo { kLouvain, kNewman, kHem };

CoarseningAlgo parse_algo(std::string_view name);
std::string_view algo_name(CoarseningAlgo algo);

// Standard Newman-Girvan modularity of p on the unweighted graph g. Zero for
// an edgeless graph.
double modularity(const Graph& g, const Partition& p);

// Multi-level Louvain modularity optimization. Nodes are visited in an order
// shuffled by seed; a node moves only on strict gain and the smallest
// community index wins ties among candidate targets.
Partition louvain(const Graph& g, std::uint64_t seed);

// Exact edge betweenness (Brandes), indexed by canonical edge id.
std::vector<double> edge_betweenness(const Graph& g);

/* Girvan-Newman stopping rule: a cluster count, or the modularity peak. */
struct GirvanNewmanTarget {
  std::optional<std::size_t> clusters;

  static GirvanNewmanTarget cluster_count(std::size_t k) { return {k}; }
  static GirvanNewmanTarget modularity_peak() { return {}; }
};

// Removes the maximum-betweenness edge one at a time (smallest edge id on
// ties), recomputing betweenness after every removal. Connected components
// of the remaining graph are the clusters.
Partition girvan_newman(const Graph& g, GirvanNewmanTarget target);

// The first max_steps edges girvan_newman removes, in order.
std::vector<Edge> girvan_newman_removals(const Graph& g, std::size_t max_steps);

// Contracts maximal heavy-edge matchings (smallest node id first, heaviest
// then smallest neighbor) until the cluster count is at most
// ratio * num_nodes or no edge is left.
Partition heavy_edge_matching(const Graph& g, double ratio);

struct CoarseLevel {
  // Features, when present, are P^T X with the normalized projection.
  Graph graph;
  // Plain per-cluster feature mean.
  std::optional<Eigen::MatrixXd> mean_features;
  // Fine edges whose endpoints share a cluster; they do not become self-loops.
  std::size_t intra_cluster_edges{0};
};

CoarseLevel build_coarse_graph(const Graph& g, const Partition& p);

struct Hierarchy {
  std::vector<Graph> levels;
  std::vector<Partition> maps;
  std::vector<ProjectionMatrix> projections;
  std::vector<double> ratios;
  std::vector<std::optional<Eigen::MatrixXd>> mean_features;
  std::vector<std::size_t> intra_cluster_edges;
  std::string algo;
  std::uint64_t seed{0};

  std::size_t max_level() const noexcept { return levels.empty() ? 0 : levels.size() - 1; }

  // Level-k cluster of every base node, k in [0, K].
  std::vector<ClusterId> base_assignment(std::size_t k) const;
  // Level-`to` cluster of every level-`from` node.
  std::vector<ClusterId> lift(std::size_t from, std::size_t to) const;

  void validate() const;
};

// levels[0] = g, then `max_level` coarsening steps with algo. A level with a
// single node is repeated for the remaining steps. For the deterministic
// algorithms (newman, hem) a non-zero seed runs the algorithm on a seeded
// relabeling of the level, which changes only how ties are broken.
Hierarchy build_hierarchy(const Graph& g, CoarseningAlgo algo, std::size_t max_level, double ratio,
                          std::uint64_t seed);

// Assembles a hierarchy from explicit cluster maps (maps[k] partitions level k).
Hierarchy hierarchy_from_maps(const Graph& g, std::vector<Partition> maps, std::string algo = "custom",
                              std::uint64_t seed = 0);

// One-hot map from base nodes to level-c clusters, 1 <= c <= K.
ProjectionMatrix composed_projection(const Hierarchy& h, std::size_t c);

// Relabels G^0 by sigma and composes sigma into phi_0; coarser levels are
// reused as-is, so no coarsening algorithm runs again.
Hierarchy permute_hierarchy(const Hierarchy& h, const NodePermutation& sigma);

nlohmann::json hierarchy_to_json(const Hierarchy& h);
Hierarchy hierarchy_from_json(const nlohmann::json& j);

}  // namespace hdse
