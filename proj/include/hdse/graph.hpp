/*
 * graph.hpp
 *
 * Immutable undirected graph in CSR form, text/JSON loaders and node
 * permutation utilities. Every other module consumes hdse::Graph.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace hdse {

using NodeId = std::uint32_t;
using EdgeIndex = std::uint64_t;
using Edge = std::pair<NodeId, NodeId>;

/* Malformed input text. line() is 1-based, 0 when not line-oriented. */
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/* Structurally invalid graph, partition, tensor or parameter set. */
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Graph {
 public:
  Graph() = default;

  // Builds from an arbitrary edge list: reversed and duplicate pairs are
  // merged, self-loops and out-of-range endpoints are rejected.
  static Graph from_edges(NodeId num_nodes, std::span<const Edge> edges);

  // Takes ownership of an already-built CSR layout and validates it.
  Graph(NodeId num_nodes, std::vector<EdgeIndex> offsets, std::vector<NodeId> neighbors);

  NodeId num_nodes() const noexcept { return num_nodes_; }
  EdgeIndex num_edges() const noexcept { return neighbors_.size() / 2; }
  NodeId degree(NodeId u) const { return static_cast<NodeId>(offsets_[u + 1] - offsets_[u]); }

  std::span<const NodeId> neighbors(NodeId u) const {
    return {neighbors_.data() + offsets_[u], neighbors_.data() + offsets_[u + 1]};
  }
  bool has_edge(NodeId u, NodeId v) const;

  const std::vector<EdgeIndex>& offsets() const noexcept { return offsets_; }
  const std::vector<NodeId>& adjacency() const noexcept { return neighbors_; }

  // Canonical edge list: u < v, lexicographically sorted. Position in this
  // list is the edge id used for deterministic tie-breaking.
  std::vector<Edge> edges() const;

  bool has_features() const noexcept { return features_.has_value(); }
  const Eigen::MatrixXd& features() const;
  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::vector<int>& labels() const;

  Graph with_features(Eigen::MatrixXd features) const;
  Graph with_labels(std::vector<int> labels) const;
  Graph without_attributes() const;

  // Throws ValidationError naming the first violated invariant.
  void validate() const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  NodeId num_nodes_{0};
  std::vector<EdgeIndex> offsets_{0};
  std::vector<NodeId> neighbors_{};
  std::optional<Eigen::MatrixXd> features_{};
  std::optional<std::vector<int>> labels_{};
};

/* Bijection on [0, n). forward(i) is the new index of node i. */
class NodePermutation {
 public:
  explicit NodePermutation(std::vector<NodeId> forward);

  static NodePermutation identity(NodeId n);
  static NodePermutation random(NodeId n, std::uint64_t seed);

  NodeId size() const noexcept { return static_cast<NodeId>(forward_.size()); }
  NodeId operator()(NodeId i) const { return forward_[i]; }
  const std::vector<NodeId>& forward() const noexcept { return forward_; }
  NodePermutation inverse() const;

 private:
  std::vector<NodeId> forward_;
};

// Node sigma(i) of the result carries the neighbors, features and label of
// node i of g.
Graph permute(const Graph& g, const NodePermutation& sigma);

// Edge-list text: "#" starts a comment, optional "n <count>" header, "u v" per line.
Graph load_edge_list(std::string_view text);
std::string write_edge_list(const Graph& g);

// {"num_nodes": n, "edges": [[u,v],...], "features": [[...],...], "labels": [...]}
Graph load_json_graph(std::string_view text);
Graph graph_from_json(const nlohmann::json& j);
nlohmann::json graph_to_json(const Graph& g);

// Reads a file and dispatches on extension (.json or edge list).
// Throws ParseError when the file cannot be read.
std::string read_file(const std::string& path);
Graph load_graph_file(const std::string& path);

std::vector<NodeId> sorted_degrees(const Graph& g);

}  // namespace hdse
