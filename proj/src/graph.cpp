#include "hdse/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace hdse {

Graph Graph::from_edges(NodeId num_nodes, std::span<const Edge> edges) {
  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw ValidationError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                            ") references a node outside [0, " + std::to_string(num_nodes) + ")");
    }
    if (u == v) {
      throw ValidationError("self-loop on node " + std::to_string(u));
    }
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  std::vector<EdgeIndex> offsets(static_cast<std::size_t>(num_nodes) + 1, 0);
  std::vector<NodeId> neighbors;
  neighbors.reserve(directed.size());
  for (const auto& [u, v] : directed) {
    ++offsets[u + 1];
    neighbors.push_back(v);
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return Graph(num_nodes, std::move(offsets), std::move(neighbors));
}

Graph::Graph(NodeId num_nodes, std::vector<EdgeIndex> offsets, std::vector<NodeId> neighbors)
    : num_nodes_(num_nodes), offsets_(std::move(offsets)), neighbors_(std::move(neighbors)) {
  validate();
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes_; ++u) {
    for (NodeId v : neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

const Eigen::MatrixXd& Graph::features() const {
  if (!features_) throw std::logic_error("graph has no features");
  return *features_;
}

const std::vector<int>& Graph::labels() const {
  if (!labels_) throw std::logic_error("graph has no labels");
  return *labels_;
}

Graph Graph::with_features(Eigen::MatrixXd features) const {
  Graph g = *this;
  g.features_ = std::move(features);
  g.validate();
  return g;
}

Graph Graph::with_labels(std::vector<int> labels) const {
  Graph g = *this;
  g.labels_ = std::move(labels);
  g.validate();
  return g;
}

Graph Graph::without_attributes() const {
  Graph g = *this;
  g.features_.reset();
  g.labels_.reset();
  return g;
}

void Graph::validate() const {
  if (offsets_.size() != static_cast<std::size_t>(num_nodes_) + 1) {
    throw ValidationError("offset array length must be num_nodes + 1");
  }
  if (offsets_.front() != 0 || offsets_.back() != neighbors_.size()) {
    throw ValidationError("offset array does not span the adjacency array");
  }
  for (NodeId u = 0; u < num_nodes_; ++u) {
    if (offsets_[u] > offsets_[u + 1]) {
      throw ValidationError("offsets not monotone at node " + std::to_string(u));
    }
    const auto nb = neighbors(u);
    for (std::size_t i = 0; i < nb.size(); ++i) {
      const NodeId v = nb[i];
      if (v >= num_nodes_) throw ValidationError("neighbor index out of range at node " + std::to_string(u));
      if (v == u) throw ValidationError("self-loop on node " + std::to_string(u));
      if (i > 0 && nb[i - 1] >= v) {
        throw ValidationError("neighbor list of node " + std::to_string(u) +
                              " is not strictly ascending (unsorted or duplicate edge)");
      }
    }
  }
  // Symmetry, checked after the per-list invariants so binary search is valid.
  for (NodeId u = 0; u < num_nodes_; ++u) {
    for (NodeId v : neighbors(u)) {
      if (!has_edge(v, u)) {
        throw ValidationError("adjacency not symmetric: " + std::to_string(u) + "->" + std::to_string(v));
      }
    }
  }
  if (features_ && features_->rows() != static_cast<Eigen::Index>(num_nodes_)) {
    throw ValidationError("feature matrix has " + std::to_string(features_->rows()) + " rows, expected " +
                          std::to_string(num_nodes_));
  }
  if (labels_ && labels_->size() != num_nodes_) {
    throw ValidationError("label vector has " + std::to_string(labels_->size()) + " entries, expected " +
                          std::to_string(num_nodes_));
  }
}

bool operator==(const Graph& a, const Graph& b) {
  if (a.num_nodes_ != b.num_nodes_ || a.offsets_ != b.offsets_ || a.neighbors_ != b.neighbors_) return false;
  if (a.features_.has_value() != b.features_.has_value()) return false;
  if (a.features_ && (a.features_->cols() != b.features_->cols() || *a.features_ != *b.features_)) return false;
  return a.labels_ == b.labels_;
}

// ---------------------------------------------------------------------------

NodePermutation::NodePermutation(std::vector<NodeId> forward) : forward_(std::move(forward)) {
  std::vector<bool> seen(forward_.size(), false);
  for (NodeId target : forward_) {
    if (target >= forward_.size() || seen[target]) {
      throw ValidationError("node permutation is not a bijection");
    }
    seen[target] = true;
  }
}

NodePermutation NodePermutation::identity(NodeId n) {
  std::vector<NodeId> f(n);
  std::iota(f.begin(), f.end(), NodeId{0});
  return NodePermutation(std::move(f));
}

NodePermutation NodePermutation::random(NodeId n, std::uint64_t seed) {
  std::vector<NodeId> f(n);
  std::iota(f.begin(), f.end(), NodeId{0});
  std::mt19937_64 rng(seed);
  std::shuffle(f.begin(), f.end(), rng);
  return NodePermutation(std::move(f));
}

NodePermutation NodePermutation::inverse() const {
  std::vector<NodeId> inv(forward_.size());
  for (NodeId i = 0; i < forward_.size(); ++i) inv[forward_[i]] = i;
  return NodePermutation(std::move(inv));
}

Graph permute(const Graph& g, const NodePermutation& sigma) {
  if (sigma.size() != g.num_nodes()) {
    throw ValidationError("permutation size does not match graph");
  }
  std::vector<Edge> edges = g.edges();
  for (auto& [u, v] : edges) {
    u = sigma(u);
    v = sigma(v);
  }
  Graph out = Graph::from_edges(g.num_nodes(), edges);
  if (g.has_features()) {
    const Eigen::MatrixXd& x = g.features();
    Eigen::MatrixXd y(x.rows(), x.cols());
    for (NodeId i = 0; i < g.num_nodes(); ++i) y.row(sigma(i)) = x.row(i);
    out = out.with_features(std::move(y));
  }
  if (g.has_labels()) {
    std::vector<int> labels(g.num_nodes());
    for (NodeId i = 0; i < g.num_nodes(); ++i) labels[sigma(i)] = g.labels()[i];
    out = out.with_labels(std::move(labels));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_node(std::string_view token, NodeId& out) {
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace

Graph load_edge_list(std::string_view text) {
  std::optional<NodeId> declared;
  std::vector<Edge> edges;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const auto line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto tokens = split_ws(line);
    if (tokens.size() == 2 && tokens[0] == "n") {
      NodeId n = 0;
      if (!parse_node(tokens[1], n)) throw ParseError("invalid node count '" + std::string(tokens[1]) + "'", line_no);
      if (declared || !edges.empty()) throw ParseError("'n' header must appear once, before any edge", line_no);
      declared = n;
      continue;
    }
    NodeId u = 0;
    NodeId v = 0;
    if (tokens.size() != 2 || !parse_node(tokens[0], u) || !parse_node(tokens[1], v)) {
      throw ParseError("expected 'u v', got '" + std::string(line) + "'", line_no);
    }
    if (u == v) throw ValidationError("self-loop on node " + std::to_string(u) + " (line " + std::to_string(line_no) + ")");
    if (declared && (u >= *declared || v >= *declared)) {
      throw ValidationError("edge on line " + std::to_string(line_no) + " exceeds declared node count");
    }
    edges.emplace_back(u, v);
  }

  NodeId n = 0;
  if (declared) {
    n = *declared;
  } else {
    std::vector<bool> used;
    for (const auto& [u, v] : edges) {
      const NodeId hi = std::max(u, v);
      if (hi >= used.size()) used.resize(static_cast<std::size_t>(hi) + 1, false);
      used[u] = used[v] = true;
    }
    const auto gap = std::find(used.begin(), used.end(), false);
    if (gap != used.end()) {
      throw ValidationError("node " + std::to_string(gap - used.begin()) +
                            " has no edges; declare isolated nodes with an 'n <count>' header");
    }
    n = static_cast<NodeId>(used.size());
  }
  return Graph::from_edges(n, edges);
}

std::string write_edge_list(const Graph& g) {
  std::ostringstream os;
  os << "n " << g.num_nodes() << '\n';
  for (const auto& [u, v] : g.edges()) os << u << ' ' << v << '\n';
  return os.str();
}

Graph graph_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw ParseError("graph JSON must be an object");
    const auto n = j.at("num_nodes").get<NodeId>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError("each edge must be a two-element array");
      edges.emplace_back(e[0].get<NodeId>(), e[1].get<NodeId>());
    }
    Graph g = Graph::from_edges(n, edges);
    if (j.contains("features") && !j["features"].is_null()) {
      const auto& rows = j["features"];
      const std::size_t width = rows.empty() ? 0 : rows[0].size();
      Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != width) throw ValidationError("ragged feature matrix at row " + std::to_string(r));
        for (std::size_t c = 0; c < width; ++c) x(r, c) = rows[r][c].get<double>();
      }
      g = g.with_features(std::move(x));
    }
    if (j.contains("labels") && !j["labels"].is_null()) {
      g = g.with_labels(j["labels"].get<std::vector<int>>());
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("graph JSON: ") + e.what());
  }
}

Graph load_json_graph(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return graph_from_json(j);
}

nlohmann::json graph_to_json(const Graph& g) {
  nlohmann::json j;
  j["num_nodes"] = g.num_nodes();
  auto edges = nlohmann::json::array();
  for (const auto& [u, v] : g.edges()) edges.push_back({u, v});
  j["edges"] = std::move(edges);
  if (g.has_features()) {
    const auto& x = g.features();
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      auto row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < x.cols(); ++c) row.push_back(x(r, c));
      rows.push_back(std::move(row));
    }
    j["features"] = std::move(rows);
  }
  if (g.has_labels()) j["labels"] = g.labels();
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Graph load_graph_file(const std::string& path) {
  const std::string text = read_file(path);
  if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) return load_json_graph(text);
  return load_edge_list(text);
}

std::vector<NodeId> sorted_degrees(const Graph& g) {
  std::vector<NodeId> deg(g.num_nodes());
  for (NodeId u = 0; u < g.num_nodes(); ++u) deg[u] = g.degree(u);
  std::sort(deg.begin(), deg.end());
  return deg;
}

}  // namespace hdse
