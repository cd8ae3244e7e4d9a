#include "hdse/gdwl.hpp"

#include <algorithm>
#include <stdexcept>

#include "hdse/distance.hpp"

namespace hdse {

void EncodingKind::validate() const {
  if (tag == Tag::kSpd) return;
  if (clip < 1 || clip > HdseTensor::kMaxClip) throw std::invalid_argument("HDSE clip length must lie in [1, 254]");
  if (algo == CoarseningAlgo::kHem && !(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("HDSE with hem needs a ratio in (0,1)");
  }
}

std::string EncodingKind::describe() const {
  if (tag == Tag::kSpd) return "spd";
  return "hdse(K=" + std::to_string(max_level) + ", algo=" + std::string(algo_name(algo)) +
         ", L=" + std::to_string(clip) + ", seed=" + std::to_string(seed) + ")";
}

ColorHistogram histogram(std::span<const Color> colors) {
  ColorHistogram h;
  for (Color c : colors) ++h[c];
  return h;
}

namespace {

struct EncodedGraph {
  std::size_t n{0};
  std::size_t width{0};
  std::vector<std::uint32_t> codes;  // n * n * width
  const Graph* graph{nullptr};
};

EncodedGraph encode(const Graph& g, const EncodingKind& enc) {
  EncodedGraph e;
  e.n = g.num_nodes();
  e.graph = &g;
  if (enc.tag == EncodingKind::Tag::kSpd) {
    const DistanceMatrix d = spd_all_pairs(g);
    e.width = 1;
    e.codes.assign(d.values().begin(), d.values().end());
    return e;
  }
  const Hierarchy h = build_hierarchy(g.without_attributes(), enc.algo, enc.max_level, enc.ratio, enc.seed);
  const HdseTensor t = hdse(h, enc.clip);
  e.width = t.levels();
  e.codes.assign(t.data().begin(), t.data().end());
  return e;
}

// Initial colors shared across graphs: rank of the feature row (graphs without
// features all map to the empty row).
std::vector<std::vector<Color>> initial_colors(std::span<const EncodedGraph> graphs) {
  std::map<std::vector<double>, Color> dict;
  auto row_of = [](const Graph& g, NodeId v) {
    if (!g.has_features()) return std::vector<double>{};
    const auto& x = g.features();
    std::vector<double> row(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) row[c] = x(v, c);
    return row;
  };
  for (const auto& e : graphs) {
    for (NodeId v = 0; v < e.n; ++v) dict.emplace(row_of(*e.graph, v), 0);
  }
  Color next = 0;
  for (auto& [row, c] : dict) c = next++;
  std::vector<std::vector<Color>> out;
  for (const auto& e : graphs) {
    std::vector<Color> colors(e.n);
    for (NodeId v = 0; v < e.n; ++v) colors[v] = dict.at(row_of(*e.graph, v));
    out.push_back(std::move(colors));
  }
  return out;
}

std::size_t distinct(const std::vector<std::vector<Color>>& colors) {
  std::vector<Color> all;
  for (const auto& c : colors) all.insert(all.end(), c.begin(), c.end());
  std::sort(all.begin(), all.end());
  return static_cast<std::size_t>(std::unique(all.begin(), all.end()) - all.begin());
}

// One refinement round over all graphs with a shared dictionary. New color
// ids are ranks of the sorted signatures, hence independent of node order.
std::vector<std::vector<Color>> refine_round(std::span<const EncodedGraph> graphs,
                                             const std::vector<std::vector<Color>>& prev) {
  std::vector<std::vector<std::vector<std::uint32_t>>> signatures(graphs.size());
  std::map<std::vector<std::uint32_t>, Color> dict;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const auto& e = graphs[gi];
    const std::size_t tuple = e.width + 1;
    signatures[gi].resize(e.n);
    std::vector<std::vector<std::uint32_t>> tuples(e.n, std::vector<std::uint32_t>(tuple));
    for (std::size_t v = 0; v < e.n; ++v) {
      for (std::size_t u = 0; u < e.n; ++u) {
        const auto* code = e.codes.data() + (v * e.n + u) * e.width;
        std::copy(code, code + e.width, tuples[u].begin());
        tuples[u][e.width] = prev[gi][u];
      }
      std::sort(tuples.begin(), tuples.end());
      auto& sig = signatures[gi][v];
      sig.reserve(e.n * tuple);
      for (const auto& t : tuples) sig.insert(sig.end(), t.begin(), t.end());
      dict.emplace(sig, 0);
    }
  }
  Color next = 0;
  for (auto& [sig, c] : dict) c = next++;
  std::vector<std::vector<Color>> out(graphs.size());
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    out[gi].resize(graphs[gi].n);
    for (std::size_t v = 0; v < graphs[gi].n; ++v) out[gi][v] = dict.at(signatures[gi][v]);
  }
  return out;
}

struct JointRun {
  std::vector<std::vector<std::vector<Color>>> rounds;  // rounds[t][graph][node]
  std::vector<std::size_t> history;
};

JointRun refine_jointly(std::span<const EncodedGraph> graphs, std::size_t max_iter) {
  JointRun run;
  run.rounds.push_back(initial_colors(graphs));
  run.history.push_back(distinct(run.rounds.back()));
  for (std::size_t t = 0; t < max_iter; ++t) {
    auto next = refine_round(graphs, run.rounds.back());
    const std::size_t count = distinct(next);
    run.rounds.push_back(std::move(next));
    run.history.push_back(count);
    if (count == run.history[run.history.size() - 2]) break;
  }
  return run;
}

}  // namespace

ColorMap gd_wl_refine(const Graph& g, const EncodingKind& enc, std::size_t max_iter) {
  if (max_iter < 1) throw std::invalid_argument("gd_wl_refine: max_iter must be >= 1");
  enc.validate();
  const EncodedGraph e = encode(g, enc);
  const JointRun run = refine_jointly(std::span(&e, 1), max_iter);
  ColorMap cm;
  for (const auto& round : run.rounds) cm.colors.push_back(round[0]);
  cm.history = run.history;
  return cm;
}

PairVerdict compare_graphs(const Graph& g1, const Graph& g2, const EncodingKind& enc, std::size_t max_iter) {
  enc.validate();
  PairVerdict v;
  if (g1.num_nodes() != g2.num_nodes()) {
    v.distinguished = true;
    return v;
  }
  if (max_iter == 0) max_iter = static_cast<std::size_t>(g1.num_nodes()) + g2.num_nodes() + 1;
  const std::vector<EncodedGraph> encoded{encode(g1, enc), encode(g2, enc)};
  const JointRun run = refine_jointly(encoded, max_iter);
  v.iterations = run.rounds.size() - 1;
  v.histogram_g1 = histogram(run.rounds.back()[0]);
  v.histogram_g2 = histogram(run.rounds.back()[1]);
  v.distinguished = v.histogram_g1 != v.histogram_g2;
  return v;
}

bool distinguishes(const Graph& g1, const Graph& g2, const EncodingKind& enc) {
  return compare_graphs(g1, g2, enc).distinguished;
}

nlohmann::json verdict_to_json(const PairVerdict& v) {
  auto hist = [](const ColorHistogram& h) {
    auto arr = nlohmann::json::array();
    for (const auto& [color, count] : h) arr.push_back({color, count});
    return arr;
  };
  nlohmann::json j;
  j["distinguished"] = v.distinguished;
  j["iterations"] = v.iterations;
  j["histogram_g1"] = hist(v.histogram_g1);
  j["histogram_g2"] = hist(v.histogram_g2);
  return j;
}

}  // namespace hdse
