// Slow reference implementations used as test oracles. None of them shares
// code with the library beyond the Graph accessors.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "hdse/attention.hpp"
#include "hdse/graph.hpp"

namespace oracle {

using hdse::Graph;
using hdse::NodeId;

inline constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

inline std::vector<std::vector<std::int64_t>> floyd_warshall(const Graph& g) {
  const NodeId n = g.num_nodes();
  std::vector<std::vector<std::int64_t>> d(n, std::vector<std::int64_t>(n, kInf));
  for (NodeId i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& [u, v] : g.edges()) d[u][v] = d[v][u] = 1;
  for (NodeId k = 0; k < n; ++k) {
    for (NodeId i = 0; i < n; ++i) {
      for (NodeId j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    }
  }
  return d;
}

// Q = 1/(2m) sum_ij (A_ij - k_i k_j / 2m) [c_i == c_j]
inline double modularity(const Graph& g, const std::vector<std::uint32_t>& labels) {
  const NodeId n = g.num_nodes();
  const double m = static_cast<double>(g.num_edges());
  if (m == 0) return 0.0;
  double q = 0.0;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = 0; j < n; ++j) {
      if (labels[i] != labels[j]) continue;
      const double a = g.has_edge(i, j) ? 1.0 : 0.0;
      q += a - static_cast<double>(g.degree(i)) * g.degree(j) / (2.0 * m);
    }
  }
  return q / (2.0 * m);
}

// Visits every set partition of [0, n) as a restricted growth string.
inline void for_each_set_partition(NodeId n, const std::function<void(const std::vector<std::uint32_t>&)>& fn) {
  std::vector<std::uint32_t> a(n, 0);
  std::function<void(NodeId, std::uint32_t)> rec = [&](NodeId i, std::uint32_t used) {
    if (i == n) {
      fn(a);
      return;
    }
    for (std::uint32_t c = 0; c <= used; ++c) {
      a[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  if (n == 0) {
    fn(a);
    return;
  }
  a[0] = 0;
  rec(1, 1);
}

inline std::vector<std::uint32_t> best_modularity_partition(const Graph& g) {
  std::vector<std::uint32_t> best;
  double best_q = -std::numeric_limits<double>::infinity();
  for_each_set_partition(g.num_nodes(), [&](const std::vector<std::uint32_t>& p) {
    const double q = modularity(g, p);
    if (q > best_q + 1e-12) {
      best_q = q;
      best = p;
    }
  });
  return best;
}

// Edge betweenness by explicit enumeration of all shortest paths between
// every unordered pair. Keyed by the (u < v) edge.
inline std::map<hdse::Edge, double> edge_betweenness(const Graph& g) {
  const auto dist = floyd_warshall(g);
  std::map<hdse::Edge, double> eb;
  for (const auto& e : g.edges()) eb[e] = 0.0;
  const NodeId n = g.num_nodes();
  for (NodeId s = 0; s < n; ++s) {
    for (NodeId t = s + 1; t < n; ++t) {
      if (dist[s][t] >= kInf) continue;
      std::vector<std::vector<NodeId>> paths;
      std::vector<NodeId> path{s};
      std::function<void(NodeId)> walk = [&](NodeId v) {
        if (v == t) {
          paths.push_back(path);
          return;
        }
        for (NodeId w : g.neighbors(v)) {
          if (dist[s][w] == dist[s][v] + 1 && dist[w][t] == dist[v][t] - 1) {
            path.push_back(w);
            walk(w);
            path.pop_back();
          }
        }
      };
      walk(s);
      for (const auto& p : paths) {
        for (std::size_t i = 0; i + 1 < p.size(); ++i) {
          eb[{std::min(p[i], p[i + 1]), std::max(p[i], p[i + 1])}] += 1.0 / static_cast<double>(paths.size());
        }
      }
    }
  }
  return eb;
}

// Girvan-Newman at the modularity peak: remove the highest-betweenness edge
// (lowest (u, v) on ties within 1e-9 relative), keep the earliest partition
// with the best modularity of the original graph. Returns component labels.
inline std::vector<std::uint32_t> girvan_newman_peak(const Graph& g) {
  std::vector<hdse::Edge> alive = g.edges();
  auto components = [&](const std::vector<hdse::Edge>& edges) {
    const Graph h = Graph::from_edges(g.num_nodes(), edges);
    const auto d = floyd_warshall(h);
    std::vector<std::uint32_t> label(g.num_nodes());
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      NodeId first = v;
      for (NodeId u = 0; u < v; ++u) {
        if (d[u][v] < kInf) {
          first = u;
          break;
        }
      }
      label[v] = first == v ? v : label[first];
    }
    return label;
  };
  auto best = components(alive);
  double best_q = oracle::modularity(g, best);
  while (!alive.empty()) {
    const auto eb = oracle::edge_betweenness(Graph::from_edges(g.num_nodes(), alive));
    double top = 0.0;
    for (const auto& [e, b] : eb) top = std::max(top, b);
    for (const auto& [e, b] : eb) {
      if (b >= top - 1e-9 * std::max(1.0, top)) {
        alive.erase(std::find(alive.begin(), alive.end(), e));
        break;
      }
    }
    const auto labels = components(alive);
    const double q = oracle::modularity(g, labels);
    if (q > best_q + 1e-12) {
      best_q = q;
      best = labels;
    }
  }
  return best;
}

// Dense attention with the bias MLP evaluated separately for every pair.
// codes(i, j) returns the per-level codes of pair (i, j); empty bias params
// mean no bias.
inline Eigen::MatrixXd naive_attention(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xkv,
                                       const hdse::AttentionParams& p, const std::optional<hdse::BiasParams>& bias,
                                       const std::function<std::vector<std::uint8_t>(std::size_t, std::size_t)>& codes) {
  const auto n = x.rows();
  const auto m = xkv.rows();
  const auto dh = p.head_dim();
  const auto heads = static_cast<Eigen::Index>(p.heads());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, dh * heads);

  std::vector<std::vector<std::vector<double>>> h(n, std::vector<std::vector<double>>(m));
  if (bias) {
    const auto de = bias->embed_dim();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        const auto c = codes(i, j);
        std::vector<double> z;
        for (std::size_t k = 0; k < c.size(); ++k) {
          for (Eigen::Index t = 0; t < de; ++t) z.push_back(bias->tables[k](c[k], t));
        }
        std::vector<double> hidden(bias->hidden());
        for (Eigen::Index a = 0; a < bias->hidden(); ++a) {
          double s = bias->b1(0, a);
          for (std::size_t r = 0; r < z.size(); ++r) s += z[r] * bias->w1(static_cast<Eigen::Index>(r), a);
          hidden[a] = s > 0 ? s : 0.0;
        }
        for (Eigen::Index hd = 0; hd < heads; ++hd) {
          double s = bias->b2(0, hd);
          for (Eigen::Index a = 0; a < bias->hidden(); ++a) s += hidden[a] * bias->w2(a, hd);
          h[i][j].push_back(s);
        }
      }
    }
  }

  for (Eigen::Index hd = 0; hd < heads; ++hd) {
    const auto& wq = p.wq[hd];
    const auto& wk = p.wk[hd];
    const auto& wv = p.wv[hd];
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<double> score(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        double s = 0.0;
        for (Eigen::Index t = 0; t < dh; ++t) {
          double q = 0.0, k = 0.0;
          for (Eigen::Index c = 0; c < x.cols(); ++c) {
            q += x(i, c) * wq(c, t);
            k += xkv(j, c) * wk(c, t);
          }
          s += q * k;
        }
        score[j] = s / std::sqrt(static_cast<double>(dh)) + (bias ? h[i][j][hd] : 0.0);
      }
      const double mx = *std::max_element(score.begin(), score.end());
      double z = 0.0;
      for (double& s : score) z += (s = std::exp(s - mx));
      for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index t = 0; t < dh; ++t) {
          double v = 0.0;
          for (Eigen::Index c = 0; c < x.cols(); ++c) v += xkv(j, c) * wv(c, t);
          out(i, hd * dh + t) += score[j] / z * v;
        }
      }
    }
  }
  return out;
}

// Entrywise relative error with a floor on the denominator, so entries where
// both values are essentially zero are compared absolutely.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline Graph random_graph(NodeId n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(p);
  std::vector<hdse::Edge> edges;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      if (coin(rng)) edges.emplace_back(u, v);
    }
  }
  return Graph::from_edges(n, edges);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(rng);
  return m;
}

}  // namespace oracle
