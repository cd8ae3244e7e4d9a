#include "hdse/coarsening.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace hdse {

// ---------------------------------------------------------------------------
// Partition / ProjectionMatrix

Partition Partition::from_labels(std::span<const std::uint32_t> labels) {
  Partition p;
  p.assign.resize(labels.size());
  std::vector<std::pair<std::uint32_t, ClusterId>> seen;  // label -> canonical id
  std::vector<ClusterId> lookup;
  constexpr ClusterId kUnset = std::numeric_limits<ClusterId>::max();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto l = labels[i];
    if (l >= lookup.size()) lookup.resize(static_cast<std::size_t>(l) + 1, kUnset);
    if (lookup[l] == kUnset) lookup[l] = p.num_clusters++;
    p.assign[i] = lookup[l];
  }
  return p;
}

Partition Partition::singletons(NodeId n) {
  Partition p;
  p.assign.resize(n);
  std::iota(p.assign.begin(), p.assign.end(), ClusterId{0});
  p.num_clusters = n;
  return p;
}

Partition Partition::whole(NodeId n) {
  Partition p;
  p.assign.assign(n, 0);
  p.num_clusters = n == 0 ? 0 : 1;
  return p;
}

std::vector<std::uint32_t> Partition::cluster_sizes() const {
  std::vector<std::uint32_t> sizes(num_clusters, 0);
  for (ClusterId c : assign) ++sizes.at(c);
  return sizes;
}

void Partition::validate(NodeId num_nodes) const {
  if (assign.size() != num_nodes) {
    throw ValidationError("partition covers " + std::to_string(assign.size()) + " nodes, expected " +
                          std::to_string(num_nodes));
  }
  if (num_clusters > num_nodes) throw ValidationError("more clusters than nodes");
  std::vector<bool> used(num_clusters, false);
  for (ClusterId c : assign) {
    if (c >= num_clusters) throw ValidationError("cluster index " + std::to_string(c) + " out of range");
    used[c] = true;
  }
  if (std::find(used.begin(), used.end(), false) != used.end()) {
    throw ValidationError("partition is not surjective: empty cluster");
  }
}

ProjectionMatrix::ProjectionMatrix(const Partition& p) : assign_(p.assign), sizes_(p.cluster_sizes()) {}

Eigen::MatrixXd ProjectionMatrix::raw() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows(), cols());
  for (std::size_t i = 0; i < assign_.size(); ++i) m(static_cast<Eigen::Index>(i), assign_[i]) = 1.0;
  return m;
}

Eigen::MatrixXd ProjectionMatrix::normalized() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(rows(), cols());
  for (std::size_t i = 0; i < assign_.size(); ++i) {
    m(static_cast<Eigen::Index>(i), assign_[i]) = 1.0 / std::sqrt(static_cast<double>(sizes_[assign_[i]]));
  }
  return m;
}

Eigen::MatrixXd ProjectionMatrix::project(const Eigen::MatrixXd& x) const {
  if (x.rows() != rows()) throw ValidationError("projection: feature row count mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(cols(), x.cols());
  for (std::size_t i = 0; i < assign_.size(); ++i) out.row(assign_[i]) += x.row(static_cast<Eigen::Index>(i));
  for (Eigen::Index c = 0; c < cols(); ++c) out.row(c) /= std::sqrt(static_cast<double>(sizes_[c]));
  return out;
}

Eigen::MatrixXd ProjectionMatrix::cluster_mean(const Eigen::MatrixXd& x) const {
  if (x.rows() != rows()) throw ValidationError("projection: feature row count mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(cols(), x.cols());
  for (std::size_t i = 0; i < assign_.size(); ++i) out.row(assign_[i]) += x.row(static_cast<Eigen::Index>(i));
  for (Eigen::Index c = 0; c < cols(); ++c) out.row(c) /= static_cast<double>(sizes_[c]);
  return out;
}

CoarseningAlgo parse_algo(std::string_view name) {
  if (name == "louvain") return CoarseningAlgo::kLouvain;
  if (name == "newman") return CoarseningAlgo::kNewman;
  if (name == "hem") return CoarseningAlgo::kHem;
  throw std::invalid_argument("unknown coarsening algorithm '" + std::string(name) + "'");
}

std::string_view algo_name(CoarseningAlgo algo) {
  switch (algo) {
    case CoarseningAlgo::kLouvain: return "louvain";
    case CoarseningAlgo::kNewman: return "newman";
    case CoarseningAlgo::kHem: return "hem";
  }
  return "unknown";
}

double modularity(const Graph& g, const Partition& p) {
  p.validate(g.num_nodes());
  const double m = static_cast<double>(g.num_edges());
  if (m == 0) return 0.0;
  std::vector<double> internal(p.num_clusters, 0.0);
  std::vector<double> degree(p.num_clusters, 0.0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    degree[p.assign[u]] += g.degree(u);
    for (NodeId v : g.neighbors(u)) {
      if (u < v && p.assign[u] == p.assign[v]) internal[p.assign[u]] += 1.0;
    }
  }
  double q = 0.0;
  for (ClusterId c = 0; c < p.num_clusters; ++c) {
    const double share = degree[c] / (2.0 * m);
    q += internal[c] / m - share * share;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Louvain

namespace {

struct WeightedGraph {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;  // no self entries
  std::vector<double> loops;   // degree contribution of internal edges (2w per edge)
  std::vector<double> degree;  // weighted degree including loops
  double total{0.0};           // sum of degrees = 2m

  std::uint32_t size() const { return static_cast<std::uint32_t>(adj.size()); }
};

WeightedGraph to_weighted(const Graph& g) {
  WeightedGraph w;
  w.adj.resize(g.num_nodes());
  w.loops.assign(g.num_nodes(), 0.0);
  w.degree.assign(g.num_nodes(), 0.0);
  for (NodeId u = 0; u < g.num_nodes(); ++u) {
    for (NodeId v : g.neighbors(u)) w.adj[u].emplace_back(v, 1.0);
    w.degree[u] = g.degree(u);
    w.total += g.degree(u);
  }
  return w;
}

WeightedGraph aggregate(const WeightedGraph& w, const std::vector<std::uint32_t>& comm, std::uint32_t nc) {
  WeightedGraph out;
  out.adj.resize(nc);
  out.loops.assign(nc, 0.0);
  out.degree.assign(nc, 0.0);
  out.total = w.total;
  std::vector<double> acc(nc, 0.0);
  std::vector<std::uint32_t> touched;
  std::vector<std::vector<std::uint32_t>> members(nc);
  for (std::uint32_t i = 0; i < w.size(); ++i) members[comm[i]].push_back(i);
  for (std::uint32_t c = 0; c < nc; ++c) {
    touched.clear();
    for (std::uint32_t i : members[c]) {
      out.degree[c] += w.degree[i];
      out.loops[c] += w.loops[i];
      for (const auto& [j, wt] : w.adj[i]) {
        const auto d = comm[j];
        if (d == c) {
          out.loops[c] += wt;  // visited from both endpoints: 2w in total
        } else {
          if (acc[d] == 0.0) touched.push_back(d);
          acc[d] += wt;
        }
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::uint32_t d : touched) {
      out.adj[c].emplace_back(d, acc[d]);
      acc[d] = 0.0;
    }
  }
  return out;
}

// One local-moving phase. Returns true when at least one node moved.
bool local_moving(const WeightedGraph& w, std::vector<std::uint32_t>& comm, std::mt19937_64& rng) {
  const std::uint32_t n = w.size();
  std::vector<double> tot(n, 0.0);
  for (std::uint32_t i = 0; i < n; ++i) tot[comm[i]] += w.degree[i];

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> link(n, 0.0);
  std::vector<std::uint32_t> touched;
  bool any_move = false;
  bool moved = true;
  constexpr double kMinGain = 1e-12;
  while (moved) {
    moved = false;
    for (std::uint32_t i : order) {
      const std::uint32_t own = comm[i];
      const double ki = w.degree[i];
      touched.clear();
      for (const auto& [j, wt] : w.adj[i]) {
        const auto c = comm[j];
        if (link[c] == 0.0) touched.push_back(c);
        link[c] += wt;
      }
      tot[own] -= ki;
      std::uint32_t best = own;
      double best_gain = link[own] - tot[own] * ki / w.total;
      std::sort(touched.begin(), touched.end());
      for (std::uint32_t c : touched) {
        if (c == own) continue;
        const double gain = link[c] - tot[c] * ki / w.total;
        if (gain > best_gain + kMinGain) {
          best = c;
          best_gain = gain;
        }
      }
      tot[best] += ki;
      for (std::uint32_t c : touched) link[c] = 0.0;
      link[own] = 0.0;
      if (best != own) {
        comm[i] = best;
        moved = true;
        any_move = true;
      }
    }
  }
  return any_move;
}

}  // namespace

Partition louvain(const Graph& g, std::uint64_t seed) {
  if (g.num_nodes() == 0) throw std::invalid_argument("louvain: empty graph");
  if (g.num_edges() == 0) return Partition::singletons(g.num_nodes());

  std::mt19937_64 rng(seed);
  WeightedGraph w = to_weighted(g);
  std::vector<std::uint32_t> node_to_comm(g.num_nodes());
  std::iota(node_to_comm.begin(), node_to_comm.end(), 0u);

  for (;;) {
    std::vector<std::uint32_t> comm(w.size());
    std::iota(comm.begin(), comm.end(), 0u);
    const bool moved = local_moving(w, comm, rng);
    if (!moved) break;
    const Partition level = Partition::from_labels(comm);
    for (auto& c : node_to_comm) c = level.assign[c];
    if (level.num_clusters == w.size()) break;
    w = aggregate(w, level.assign, level.num_clusters);
  }
  return Partition::from_labels(node_to_comm);
}

// ---------------------------------------------------------------------------
// Girvan-Newman

namespace {

struct EdgeAdjacency {
  // Per node: (neighbor, canonical edge id), neighbor-sorted.
  std::vector<std::vector<std::pair<NodeId, std::size_t>>> adj;
};

EdgeAdjacency edge_adjacency(const Graph& g) {
  EdgeAdjacency a;
  a.adj.resize(g.num_nodes());
  const auto edges = g.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    a.adj[edges[e].first].emplace_back(edges[e].second, e);
    a.adj[edges[e].second].emplace_back(edges[e].first, e);
  }
  for (auto& l : a.adj) std::sort(l.begin(), l.end());
  return a;
}

std::vector<double> brandes(const EdgeAdjacency& a, const std::vector<bool>& alive, std::size_t num_edges) {
  const std::size_t n = a.adj.size();
  std::vector<double> eb(num_edges, 0.0);
  std::vector<double> sigma(n);
  std::vector<double> delta(n);
  std::vector<std::int64_t> dist(n);
  std::vector<NodeId> order;
  order.reserve(n);
  for (NodeId s = 0; s < n; ++s) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    order.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    order.push_back(s);
    for (std::size_t head = 0; head < order.size(); ++head) {
      const NodeId v = order[head];
      for (const auto& [w, e] : a.adj[v]) {
        if (!alive[e]) continue;
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          order.push_back(w);
        }
        if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
      }
    }
    for (std::size_t idx = order.size(); idx-- > 0;) {
      const NodeId w = order[idx];
      for (const auto& [v, e] : a.adj[w]) {
        if (!alive[e] || dist[v] != dist[w] - 1) continue;
        const double c = sigma[v] / sigma[w] * (1.0 + delta[w]);
        eb[e] += c;
        delta[v] += c;
      }
    }
  }
  for (double& x : eb) x /= 2.0;
  return eb;
}

Partition components(const EdgeAdjacency& a, const std::vector<bool>& alive) {
  const std::size_t n = a.adj.size();
  constexpr std::uint32_t kUnset = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> label(n, kUnset);
  std::uint32_t next = 0;
  std::deque<NodeId> queue;
  for (NodeId s = 0; s < n; ++s) {
    if (label[s] != kUnset) continue;
    label[s] = next;
    queue.push_back(s);
    while (!queue.empty()) {
      const NodeId v = queue.front();
      queue.pop_front();
      for (const auto& [w, e] : a.adj[v]) {
        if (alive[e] && label[w] == kUnset) {
          label[w] = next;
          queue.push_back(w);
        }
      }
    }
    ++next;
  }
  Partition p;
  p.assign = std::move(label);
  p.num_clusters = next;
  return p;
}

std::size_t argmax_edge(const std::vector<double>& eb, const std::vector<bool>& alive) {
  double best = -1.0;
  for (std::size_t e = 0; e < eb.size(); ++e) {
    if (alive[e]) best = std::max(best, eb[e]);
  }
  const double cutoff = best - 1e-9 * std::max(1.0, best);
  for (std::size_t e = 0; e < eb.size(); ++e) {
    if (alive[e] && eb[e] >= cutoff) return e;
  }
  return eb.size();
}

}  // namespace

std::vector<double> edge_betweenness(const Graph& g) {
  const auto a = edge_adjacency(g);
  return brandes(a, std::vector<bool>(g.num_edges(), true), g.num_edges());
}

Partition girvan_newman(const Graph& g, GirvanNewmanTarget target) {
  if (target.clusters && (*target.clusters == 0 || *target.clusters > g.num_nodes())) {
    throw std::invalid_argument("girvan_newman: target cluster count " + std::to_string(*target.clusters) +
                                " outside [1, " + std::to_string(g.num_nodes()) + "]");
  }
  const auto a = edge_adjacency(g);
  const std::size_t m = g.num_edges();
  std::vector<bool> alive(m, true);
  std::size_t remaining = m;

  Partition current = components(a, alive);
  Partition best = current;
  double best_q = modularity(g, current);

  while (remaining > 0) {
    if (target.clusters && current.num_clusters >= *target.clusters) break;
    const auto eb = brandes(a, alive, m);
    const std::size_t e = argmax_edge(eb, alive);
    alive[e] = false;
    --remaining;
    Partition next = components(a, alive);
    if (next.num_clusters != current.num_clusters && !target.clusters) {
      const double q = modularity(g, next);
      if (q > best_q + 1e-12) {
        best_q = q;
        best = next;
      }
    }
    current = std::move(next);
  }
  return target.clusters ? current : best;
}

std::vector<Edge> girvan_newman_removals(const Graph& g, std::size_t max_steps) {
  const auto a = edge_adjacency(g);
  const auto edges = g.edges();
  const std::size_t m = edges.size();
  std::vector<bool> alive(m, true);
  std::vector<Edge> removed;
  while (removed.size() < std::min(max_steps, m)) {
    const std::size_t e = argmax_edge(brandes(a, alive, m), alive);
    alive[e] = false;
    removed.push_back(edges[e]);
  }
  return removed;
}

// ---------------------------------------------------------------------------
// Heavy-edge matching

Partition heavy_edge_matching(const Graph& g, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("heavy_edge_matching: ratio must lie in (0,1)");
  const NodeId n = g.num_nodes();
  std::vector<ClusterId> fine(n);
  std::iota(fine.begin(), fine.end(), ClusterId{0});

  // Cluster graph with edge weights = number of fine edges between clusters.
  std::vector<std::vector<std::pair<ClusterId, double>>> adj(n);
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : g.neighbors(u)) adj[u].emplace_back(v, 1.0);
  }
  const double limit = ratio * static_cast<double>(n);

  auto has_edges = [&] {
    return std::any_of(adj.begin(), adj.end(), [](const auto& l) { return !l.empty(); });
  };

  while (static_cast<double>(adj.size()) > limit && has_edges()) {
    const auto nc = static_cast<ClusterId>(adj.size());
    constexpr ClusterId kNone = std::numeric_limits<ClusterId>::max();
    std::vector<ClusterId> mate(nc, kNone);
    for (ClusterId u = 0; u < nc; ++u) {
      if (mate[u] != kNone) continue;
      ClusterId best = kNone;
      double best_w = 0.0;
      for (const auto& [v, w] : adj[u]) {
        if (mate[v] == kNone && w > best_w) {
          best = v;
          best_w = w;
        }
      }
      if (best != kNone) {
        mate[u] = best;
        mate[best] = u;
      }
    }
    std::vector<ClusterId> next_id(nc, kNone);
    ClusterId next = 0;
    for (ClusterId u = 0; u < nc; ++u) {
      if (next_id[u] != kNone) continue;
      next_id[u] = next;
      if (mate[u] != kNone) next_id[mate[u]] = next;
      ++next;
    }
    if (next == nc) break;

    std::vector<std::vector<std::pair<ClusterId, double>>> coarse(next);
    std::vector<double> acc(next, 0.0);
    std::vector<ClusterId> touched;
    std::vector<std::vector<ClusterId>> members(next);
    for (ClusterId u = 0; u < nc; ++u) members[next_id[u]].push_back(u);
    for (ClusterId c = 0; c < next; ++c) {
      touched.clear();
      for (ClusterId u : members[c]) {
        for (const auto& [v, w] : adj[u]) {
          const ClusterId d = next_id[v];
          if (d == c) continue;
          if (acc[d] == 0.0) touched.push_back(d);
          acc[d] += w;
        }
      }
      std::sort(touched.begin(), touched.end());
      for (ClusterId d : touched) {
        coarse[c].emplace_back(d, acc[d]);
        acc[d] = 0.0;
      }
    }
    for (auto& c : fine) c = next_id[c];
    adj = std::move(coarse);
  }
  return Partition::from_labels(fine);
}

// ---------------------------------------------------------------------------
// Coarse graphs and hierarchies

CoarseLevel build_coarse_graph(const Graph& g, const Partition& p) {
  p.validate(g.num_nodes());
  CoarseLevel out;
  std::vector<Edge> coarse_edges;
  for (const auto& [u, v] : g.edges()) {
    const ClusterId a = p.assign[u];
    const ClusterId b = p.assign[v];
    if (a == b) {
      ++out.intra_cluster_edges;
    } else {
      coarse_edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  out.graph = Graph::from_edges(p.num_clusters, coarse_edges);
  if (g.has_features()) {
    const ProjectionMatrix proj(p);
    out.graph = out.graph.with_features(proj.project(g.features()));
    out.mean_features = proj.cluster_mean(g.features());
  }
  return out;
}

std::vector<ClusterId> Hierarchy::lift(std::size_t from, std::size_t to) const {
  if (from > to || to > max_level()) throw std::out_of_range("hierarchy level out of range");
  std::vector<ClusterId> a(levels[from].num_nodes());
  std::iota(a.begin(), a.end(), ClusterId{0});
  for (std::size_t k = from; k < to; ++k) {
    for (auto& c : a) c = maps[k].assign[c];
  }
  return a;
}

std::vector<ClusterId> Hierarchy::base_assignment(std::size_t k) const { return lift(0, k); }

void Hierarchy::validate() const {
  if (levels.empty()) throw ValidationError("hierarchy has no levels");
  if (maps.size() + 1 != levels.size() || projections.size() != maps.size() || ratios.size() != maps.size()) {
    throw ValidationError("hierarchy level/map counts disagree");
  }
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const Graph& fine = levels[k];
    const Graph& coarse = levels[k + 1];
    maps[k].validate(fine.num_nodes());
    if (maps[k].num_clusters != coarse.num_nodes()) {
      throw ValidationError("level " + std::to_string(k + 1) + " node count differs from cluster count");
    }
    const CoarseLevel expected = build_coarse_graph(fine.without_attributes(), maps[k]);
    if (expected.graph.edges() != coarse.edges()) {
      throw ValidationError("level " + std::to_string(k + 1) + " edges are not the contraction of level " +
                            std::to_string(k));
    }
    if (fine.has_features()) {
      if (!coarse.has_features()) throw ValidationError("coarse level lost its features");
      const Eigen::MatrixXd want = projections[k].project(fine.features());
      if ((want - coarse.features()).cwiseAbs().maxCoeff() > 1e-9) {
        throw ValidationError("coarse features differ from P^T X at level " + std::to_string(k + 1));
      }
    }
  }
}

namespace {

void append_level(Hierarchy& h, Partition p) {
  const Graph& fine = h.levels.back();
  CoarseLevel cl = build_coarse_graph(fine, p);
  h.ratios.push_back(fine.num_nodes() == 0
                         ? 1.0
                         : static_cast<double>(p.num_clusters) / static_cast<double>(fine.num_nodes()));
  h.projections.emplace_back(p);
  h.maps.push_back(std::move(p));
  h.mean_features.push_back(std::move(cl.mean_features));
  h.intra_cluster_edges.push_back(cl.intra_cluster_edges);
  h.levels.push_back(std::move(cl.graph));
}

Partition run_algo(const Graph& g, CoarseningAlgo algo, double ratio, std::uint64_t seed) {
  switch (algo) {
    case CoarseningAlgo::kLouvain: return louvain(g, seed);
    case CoarseningAlgo::kNewman: return girvan_newman(g, GirvanNewmanTarget::modularity_peak());
    case CoarseningAlgo::kHem: return heavy_edge_matching(g, ratio);
  }
  throw std::invalid_argument("unknown coarsening algorithm");
}

Partition coarsen_level(const Graph& g, CoarseningAlgo algo, double ratio, std::uint64_t seed) {
  if (algo == CoarseningAlgo::kLouvain || seed == 0) return run_algo(g, algo, ratio, seed);
  const auto sigma = NodePermutation::random(g.num_nodes(), seed);
  const Partition relabeled = run_algo(permute(g.without_attributes(), sigma), algo, ratio, seed);
  std::vector<std::uint32_t> labels(g.num_nodes());
  for (NodeId i = 0; i < g.num_nodes(); ++i) labels[i] = relabeled.assign[sigma(i)];
  return Partition::from_labels(labels);
}

}  // namespace

Hierarchy build_hierarchy(const Graph& g, CoarseningAlgo algo, std::size_t max_level, double ratio,
                          std::uint64_t seed) {
  if (g.num_nodes() == 0) throw std::invalid_argument("build_hierarchy: empty graph");
  if (algo == CoarseningAlgo::kHem && !(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("build_hierarchy: ratio must lie in (0,1)");
  }
  Hierarchy h;
  h.algo = std::string(algo_name(algo));
  h.seed = seed;
  h.levels.push_back(g);
  for (std::size_t k = 0; k < max_level; ++k) {
    const Graph& cur = h.levels.back();
    Partition p = cur.num_nodes() == 1 ? Partition::whole(1)
                                       : coarsen_level(cur, algo, ratio, seed == 0 ? 0 : seed + k);
    append_level(h, std::move(p));
  }
  return h;
}

Hierarchy hierarchy_from_maps(const Graph& g, std::vector<Partition> maps, std::string algo, std::uint64_t seed) {
  Hierarchy h;
  h.algo = std::move(algo);
  h.seed = seed;
  h.levels.push_back(g);
  for (auto& p : maps) append_level(h, std::move(p));
  return h;
}

ProjectionMatrix composed_projection(const Hierarchy& h, std::size_t c) {
  if (c < 1 || c > h.max_level()) {
    throw std::out_of_range("composed_projection: level " + std::to_string(c) + " outside [1, " +
                            std::to_string(h.max_level()) + "]");
  }
  Partition p;
  p.assign = h.base_assignment(c);
  p.num_clusters = h.levels[c].num_nodes();
  return ProjectionMatrix(p);
}

Hierarchy permute_hierarchy(const Hierarchy& h, const NodePermutation& sigma) {
  Hierarchy out = h;
  out.levels[0] = permute(h.levels[0], sigma);
  if (!h.maps.empty()) {
    Partition& p = out.maps[0];
    for (NodeId i = 0; i < sigma.size(); ++i) p.assign[sigma(i)] = h.maps[0].assign[i];
    out.projections[0] = ProjectionMatrix(p);
  }
  return out;
}

nlohmann::json hierarchy_to_json(const Hierarchy& h) {
  nlohmann::json j;
  auto levels = nlohmann::json::array();
  for (const auto& g : h.levels) levels.push_back(graph_to_json(g));
  j["levels"] = std::move(levels);
  auto maps = nlohmann::json::array();
  for (const auto& p : h.maps) maps.push_back(p.assign);
  j["maps"] = std::move(maps);
  j["ratios"] = h.ratios;
  j["algo"] = h.algo;
  j["seed"] = h.seed;
  return j;
}

Hierarchy hierarchy_from_json(const nlohmann::json& j) {
  try {
    const auto& levels = j.at("levels");
    if (!levels.is_array() || levels.empty()) throw ParseError("hierarchy JSON: 'levels' must be a non-empty array");
    std::vector<Graph> stored;
    for (const auto& l : levels) stored.push_back(graph_from_json(l));
    std::vector<Partition> maps;
    for (const auto& m : j.at("maps")) {
      Partition p;
      p.assign = m.get<std::vector<ClusterId>>();
      p.num_clusters = p.assign.empty() ? 0 : *std::max_element(p.assign.begin(), p.assign.end()) + 1;
      maps.push_back(std::move(p));
    }
    if (maps.size() + 1 != stored.size()) throw ValidationError("hierarchy JSON: need one map per coarse level");
    Hierarchy h = hierarchy_from_maps(stored[0], std::move(maps), j.value("algo", std::string("custom")),
                                      j.value("seed", std::uint64_t{0}));
    for (std::size_t k = 1; k < stored.size(); ++k) {
      if (stored[k].num_nodes() != h.levels[k].num_nodes() || stored[k].edges() != h.levels[k].edges()) {
        throw ValidationError("hierarchy JSON: level " + std::to_string(k) + " is inconsistent with its map");
      }
    }
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("hierarchy JSON: ") + e.what());
  }
}

}  // namespace hdse
