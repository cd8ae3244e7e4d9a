/*
 * gdwl.hpp
 *
 * Generalized-distance Weisfeiler-Leman color refinement. Each round gives
 * node v the color of the multiset {(D(v,u), color(u)) : u in V}, where D is
 * either plain SPD or the HDSE vector of a hierarchy built over the graph.
 * Two graphs are compared by refining them jointly with one shared color
 * dictionary and comparing their color histograms.
 */
#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hdse/coarsening.hpp"
#include "hdse/graph.hpp"

namespace hdse {

using Color = std::uint32_t;

struct EncodingKind {
  enum class Tag { kSpd, kHdse };

  Tag tag{Tag::kSpd};
  std::size_t max_level{1};
  CoarseningAlgo algo{CoarseningAlgo::kNewman};
  std::uint32_t clip{30};
  std::uint64_t seed{0};
  double ratio{0.5};

  static EncodingKind spd() { return {}; }
  static EncodingKind hdse(std::size_t max_level, CoarseningAlgo algo, std::uint32_t clip = 30,
                           std::uint64_t seed = 0, double ratio = 0.5) {
    return {Tag::kHdse, max_level, algo, clip, seed, ratio};
  }

  void validate() const;
  std::string describe() const;
};

struct ColorMap {
  // colors[t][v]: color of node v after t refinement rounds (t = 0 is the
  // initial coloring).
  std::vector<std::vector<Color>> colors;
  // Number of distinct colors per round.
  std::vector<std::size_t> history;

  std::size_t iterations() const noexcept { return colors.empty() ? 0 : colors.size() - 1; }
  const std::vector<Color>& final_colors() const { return colors.back(); }
};

using ColorHistogram = std::map<Color, std::size_t>;

ColorHistogram histogram(std::span<const Color> colors);

// Refines one graph until the color partition stops changing or max_iter
// rounds have run. Initial colors come from feature rows when present.
ColorMap gd_wl_refine(const Graph& g, const EncodingKind& enc, std::size_t max_iter);

struct PairVerdict {
  bool distinguished{false};
  std::size_t iterations{0};
  ColorHistogram histogram_g1;
  ColorHistogram histogram_g2;
};

// Joint refinement with a shared dictionary. Graphs of different sizes are
// trivially distinguished (zero iterations).
PairVerdict compare_graphs(const Graph& g1, const Graph& g2, const EncodingKind& enc, std::size_t max_iter = 0);

bool distinguishes(const Graph& g1, const Graph& g2, const EncodingKind& enc);

nlohmann::json verdict_to_json(const PairVerdict& v);

// ---------------------------------------------------------------------------
// Named graphs

// GP(n, k): outer cycle 0..n-1, spokes i -- n+i, inner edges n+i -- n+(i+k)%n.
Graph generalized_petersen(NodeId n, NodeId k);
Graph dodecahedron();  // GP(10, 2)
Graph desargues();     // GP(10, 3)
Graph cycle_graph(NodeId n);
// Two k-cliques joined by a single bridge between node k-1 and node k.
Graph barbell(NodeId k);
Graph erdos_renyi(NodeId n, double p, std::uint64_t seed);
// Two Erdos-Renyi blocks of sizes ceil(n/2) and floor(n/2); intra-block
// edges with probability p, inter-block with q. Labels are the block index.
Graph community_pair(NodeId n, double p, double q, std::uint64_t seed);

struct NamedGraphSpec {
  std::string name;
  NodeId n{0};
  NodeId k{0};
  double p{0.3};
  double q{0.05};
  std::uint64_t seed{0};
};

Graph make_named_graph(const NamedGraphSpec& spec);

}  // namespace hdse
