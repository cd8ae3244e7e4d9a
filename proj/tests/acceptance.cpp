// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "gradcheck.hpp"
#include "hdse/attention.hpp"
#include "hdse/coarsening.hpp"
#include "hdse/distance.hpp"
#include "hdse/gdwl.hpp"
#include "hdse/train.hpp"
#include "oracles.hpp"

using namespace hdse;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kC1Seconds = 5.0;
constexpr int kC2Graphs = 100;
constexpr NodeId kC2MaxNodes = 60;
constexpr int kC3Hierarchies = 50;
constexpr NodeId kC3MaxNodes = 30;
constexpr int kC4Configs = 20;
constexpr double kC4Step = 1e-5;
constexpr double kC4MaxRelError = 1e-4;
constexpr double kC4Seconds = 60.0;
constexpr double kC5Tolerance = 1e-12;
constexpr int kC6Permutations = 50;
constexpr double kC6Tolerance = 1e-12;
constexpr std::size_t kC7Seeds = 5;
constexpr double kC7MinGap = 0.05;
constexpr double kC7Seconds = 300.0;
constexpr int kC9Runs = 3;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Partition cliques(NodeId k) {
  std::vector<std::uint32_t> labels(2 * k, 0);
  for (NodeId i = k; i < 2 * k; ++i) labels[i] = 1;
  return Partition::from_labels(labels);
}

// 1 ------------------------------------------------------------------------
Outcome expressiveness() {
  const auto t0 = std::chrono::steady_clock::now();
  const Graph a = dodecahedron();
  const Graph b = desargues();
  const bool spd = distinguishes(a, b, EncodingKind::spd());
  int hits = 0;
  for (std::uint64_t seed : {0u, 1u, 2u}) hits += distinguishes(a, b, EncodingKind::hdse(1, CoarseningAlgo::kNewman, 30, seed));
  const double secs = seconds_since(t0);
  return {!spd && hits == 3 && secs < kC1Seconds,
          std::string("spd ") + (spd ? "distinguished" : "not distinguished") + ", hdse(newman, K=1) " +
              std::to_string(hits) + "/3 seeds, " + fmt(secs) + " s"};
}

// 2 ------------------------------------------------------------------------
Outcome ghd0_is_spd() {
  std::mt19937_64 rng(2002);
  std::uniform_int_distribution<NodeId> size(1, kC2MaxNodes);
  const double ps[] = {0.05, 0.2, 0.5};
  std::size_t mismatches = 0, pairs = 0;
  for (int t = 0; t < kC2Graphs; ++t) {
    const Graph g = oracle::random_graph(size(rng), ps[t % 3], rng);
    const Hierarchy h = build_hierarchy(g, CoarseningAlgo::kLouvain, 1, 0.5, static_cast<std::uint64_t>(t));
    const DistanceMatrix d = ghd(h, 0);
    const auto ref = oracle::floyd_warshall(g);
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
      for (NodeId j = 0; j < g.num_nodes(); ++j) {
        ++pairs;
        const bool inf = ref[i][j] >= oracle::kInf;
        if (inf ? d(i, j) != kUnreachable : d(i, j) != static_cast<HopCount>(ref[i][j])) ++mismatches;
      }
    }
  }
  return {mismatches == 0, std::to_string(kC2Graphs) + " graphs, " + std::to_string(pairs) + " pairs, " +
                               std::to_string(mismatches) + " mismatches vs Floyd-Warshall"};
}

// 3 ------------------------------------------------------------------------
Outcome pseudometric() {
  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<NodeId> size(2, kC3MaxNodes);
  const CoarseningAlgo algos[] = {CoarseningAlgo::kLouvain, CoarseningAlgo::kNewman, CoarseningAlgo::kHem};
  std::size_t symmetry = 0, diagonal = 0, triangle = 0, triples = 0;
  for (int t = 0; t < kC3Hierarchies; ++t) {
    const NodeId n = size(rng);
    const Graph g = oracle::random_graph(n, 0.15, rng);
    const Hierarchy h = build_hierarchy(g, algos[t % 3], 2, 0.5, static_cast<std::uint64_t>(t));
    for (std::size_t k = 0; k <= h.max_level(); ++k) {
      const DistanceMatrix d = ghd(h, k);
      for (NodeId i = 0; i < n; ++i) {
        diagonal += d(i, i) != 0;
        for (NodeId j = 0; j < n; ++j) {
          symmetry += d(i, j) != d(j, i);
          for (NodeId m = 0; m < n; ++m) {
            ++triples;
            // kUnreachable acts as infinity; the 64-bit sum cannot overflow.
            const std::uint64_t via = static_cast<std::uint64_t>(d(i, m)) + d(m, j);
            triangle += static_cast<std::uint64_t>(d(i, j)) > via;
          }
        }
      }
    }
  }
  return {symmetry + diagonal + triangle == 0,
          std::to_string(kC3Hierarchies) + " hierarchies (K=2), " + std::to_string(triples) +
              " triples; violations: symmetry " + std::to_string(symmetry) + ", diagonal " + std::to_string(diagonal) +
              ", triangle " + std::to_string(triangle)};
}

// 4 ------------------------------------------------------------------------
Outcome gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string where;
  std::size_t entries = 0;
  for (int c = 0; c < kC4Configs; ++c) {
    const bool linear = c % 2 == 1;
    const auto r = gradcheck::check(gradcheck::make_case(static_cast<std::uint64_t>(c / 2), linear), kC4Step);
    entries += r.entries;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      where = std::string(linear ? "linear" : "dense") + " config " + std::to_string(c / 2) + " " + r.worst;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < kC4MaxRelError && secs < kC4Seconds,
          std::to_string(kC4Configs) + " configs (dense + linear), " + std::to_string(entries) +
              " entries, max rel error " + fmt(worst, 3) + (where.empty() ? "" : " at " + where) + ", " + fmt(secs) +
              " s"};
}

// 5 ------------------------------------------------------------------------
Outcome reductions() {
  std::mt19937_64 rng(5005);
  double zero_bias = 0.0, identity = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const NodeId n = 8 + static_cast<NodeId>(s);
    const Graph g = oracle::random_graph(n, 0.3, rng);
    const Matrix x = oracle::random_matrix(n, 4, rng);
    LayerParams plain;
    plain.attention = AttentionParams::init(4, 3, 2, s);

    // H == 0: output layer of the bias MLP zeroed.
    const HdseTensor t = hdse::hdse(build_hierarchy(g, CoarseningAlgo::kLouvain, 1, 0.5, s), 30);
    LayerParams zeroed = plain;
    zeroed.bias = BiasParams::init(2, 30, 4, 4, 2, s + 1);
    zeroed.bias->w2.setZero();
    zeroed.bias->b2.setZero();
    BiasedAttentionLayer a(plain), b(zeroed);
    zero_bias = std::max(zero_bias, max_abs(a.forward(x, nullptr) - b.forward(x, &t)));

    // Identity partition: level-1 clusters are the nodes themselves.
    LayerParams biased = plain;
    biased.bias = BiasParams::init(1, 30, 4, 4, 2, s + 2);
    const Hierarchy id = hierarchy_from_maps(g, {Partition::singletons(n)});
    const HdseTensor spd = hdse::hdse(hierarchy_from_maps(g, {}), 30);
    const HdseTensor high = high_level_hdse(id, 1, 30);
    const Matrix xk = composed_projection(id, 1).project(x);
    BiasedAttentionLayer dense(biased), lin(biased);
    identity = std::max(identity, max_abs(dense.forward(x, &spd) - lin.forward_linear(x, xk, &high)));
  }
  return {zero_bias <= kC5Tolerance && identity <= kC5Tolerance,
          "max |diff|: H=0 vs plain " + fmt(zero_bias, 3) + ", linear(identity) vs biased " + fmt(identity, 3)};
}

// 6 ------------------------------------------------------------------------
Outcome equivariance() {
  std::mt19937_64 rng(6006);
  const NodeId n = 24;
  const Graph g = oracle::random_graph(n, 0.2, rng);
  const Hierarchy h = build_hierarchy(g, CoarseningAlgo::kLouvain, 2, 0.5, 6);
  const HdseTensor t = hdse::hdse(h, 30);
  const HdseTensor th = high_level_hdse(h, 1, 30);
  const Matrix x = oracle::random_matrix(n, 4, rng);
  const Matrix xk = composed_projection(h, 1).project(x);
  LayerParams p;
  p.attention = AttentionParams::init(4, 3, 2, 60);
  p.bias = BiasParams::init(3, 30, 4, 4, 2, 61);
  LayerParams pl = p;
  pl.bias = BiasParams::init(2, 30, 4, 4, 2, 62);
  BiasedAttentionLayer dense(p), lin(pl);
  const Matrix out = dense.forward(x, &t);
  const Matrix out_lin = lin.forward_linear(x, xk, &th);

  std::size_t tensor_mismatch = 0;
  double worst = 0.0;
  for (int s = 0; s < kC6Permutations; ++s) {
    const auto sigma = NodePermutation::random(n, 600 + static_cast<std::uint64_t>(s));
    const Hierarchy ph = permute_hierarchy(h, sigma);
    const HdseTensor pt = hdse::hdse(ph, 30);
    const HdseTensor pth = high_level_hdse(ph, 1, 30);
    for (NodeId i = 0; i < n; ++i) {
      for (NodeId j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < t.levels(); ++k) tensor_mismatch += pt(sigma(i), sigma(j), k) != t(i, j, k);
      }
      for (std::size_t j = 0; j < th.cols(); ++j) {
        for (std::size_t k = 0; k < th.levels(); ++k) tensor_mismatch += pth(sigma(i), j, k) != th(i, j, k);
      }
    }
    Matrix px(n, x.cols());
    for (NodeId i = 0; i < n; ++i) px.row(sigma(i)) = x.row(i);
    const Matrix pout = dense.forward(px, &pt);
    const Matrix pout_lin = lin.forward_linear(px, xk, &pth);
    for (NodeId i = 0; i < n; ++i) {
      worst = std::max(worst, (pout.row(sigma(i)) - out.row(i)).cwiseAbs().maxCoeff());
      worst = std::max(worst, (pout_lin.row(sigma(i)) - out_lin.row(i)).cwiseAbs().maxCoeff());
    }
  }
  return {tensor_mismatch == 0 && worst <= kC6Tolerance,
          std::to_string(kC6Permutations) + " permutations; tensor mismatches " + std::to_string(tensor_mismatch) +
              ", max attention |diff| " + fmt(worst, 3)};
}

// 7 ------------------------------------------------------------------------
Outcome community_demo() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::uint64_t> seeds(kC7Seeds);
  for (std::size_t i = 0; i < kC7Seeds; ++i) seeds[i] = i;
  const DemoSummary s = run_demo(DemoConfig{}, seeds);
  const double none = s.mean(DemoEncoding::kNone);
  const double spd = s.mean(DemoEncoding::kSpd);
  const double hd = s.mean(DemoEncoding::kHdse);
  const double secs = seconds_since(t0);
  return {hd - none >= kC7MinGap && hd >= spd && secs < kC7Seconds,
          "mean test acc over " + std::to_string(kC7Seeds) + " seeds: none " + fmt(none) + ", spd " + fmt(spd) +
              ", hdse " + fmt(hd) + " (hdse-none " + fmt(100 * (hd - none), 3) + " points), " + fmt(secs) + " s"};
}

// 8 ------------------------------------------------------------------------
Outcome coarsening_quality() {
  const Graph two = barbell(4);
  const bool oracle_agrees = Partition::from_labels(oracle::best_modularity_partition(two)) == cliques(4);
  int louvain_ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) louvain_ok += louvain(two, seed) == cliques(4);

  const Graph bb = barbell(5);
  const Edge bridge{4, 5};
  const auto eb = oracle::edge_betweenness(bb);
  bool bridge_max = true;
  for (const auto& [e, b] : eb) {
    if (e != bridge && b >= eb.at(bridge)) bridge_max = false;
  }
  const auto first = girvan_newman_removals(bb, 1);
  const bool gn_first = first.size() == 1 && first[0] == bridge;
  return {oracle_agrees && louvain_ok == 10 && bridge_max && gn_first,
          "louvain clique split " + std::to_string(louvain_ok) + "/10 seeds (brute-force optimum " +
              (oracle_agrees ? "agrees" : "differs") + "); oracle betweenness max at bridge: " +
              (bridge_max ? "yes" : "no") + "; GN first removal " +
              (first.empty() ? "none" : std::to_string(first[0].first) + "-" + std::to_string(first[0].second))};
}

// 9 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "hdse_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = HDSE_CLI_PATH;
  auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };

  struct Command {
    std::string name;
    std::string args;     // {out} is replaced by the run directory
    std::vector<std::string> files;
  };
  const fs::path g1 = dir / "dodecahedron.txt";
  const fs::path g2 = dir / "desargues.txt";
  const fs::path cg = dir / "community.json";
  for (const std::string& setup : {" named-graph dodecahedron -o " + q(g1), " named-graph desargues -o " + q(g2),
                                    " named-graph community_pair --n 30 --seed 4 --format json -o " + q(cg)}) {
    if (std::system((cli + setup).c_str()) != 0) return {false, "setup failed:" + setup};
  }

  const std::vector<Command> commands{
      {"named-graph", "named-graph erdos_renyi --n 40 --p 0.1 --seed 9 -o {out}/g.txt", {"g.txt", "stdout"}},
      {"coarsen", "coarsen " + q(cg) + " --algo louvain -K 2 --seed 3 -o {out}/h.json", {"h.json", "stdout"}},
      {"encode", "coarsen " + q(cg) + " --algo louvain -K 2 --seed 3 -o {out}/h.json && " + cli +
                     " --threads 1 encode {out}/h.json -o {out}/t.bin",
       {"t.bin", "stdout"}},
      {"gdwl", "gdwl " + q(g1) + " " + q(g2) + " --enc hdse --algo newman --seed 1 -o {out}/v.json",
       {"v.json", "stdout"}},
      {"demo", "demo --seeds 2 --epochs 20 --graphs 6 -o {out}/acc.csv --metrics-dir {out}/m",
       {"acc.csv", "m/hdse_seed1.csv", "m/none_seed0.csv", "stdout"}},
  };

  std::vector<std::string> failed;
  std::size_t compared = 0;
  for (const auto& c : commands) {
    std::vector<std::vector<std::string>> outputs;
    for (int r = 0; r < kC9Runs; ++r) {
      const fs::path run_dir = dir / (c.name + "_" + std::to_string(r));
      fs::create_directories(run_dir);
      std::string args = c.args;
      for (std::size_t pos; (pos = args.find("{out}")) != std::string::npos;) args.replace(pos, 5, q(run_dir));
      const std::string cmd = "(" + cli + " --threads 1 " + args + ") > " + q(run_dir / "stdout") + " 2>/dev/null";
      const int rc = std::system(cmd.c_str());
      const int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
      if (code != 0) failed.push_back(c.name + " exit " + std::to_string(code));
      std::vector<std::string> files;
      for (const auto& f : c.files) files.push_back(slurp(run_dir / f));
      outputs.push_back(std::move(files));
    }
    for (int r = 1; r < kC9Runs; ++r) {
      for (std::size_t f = 0; f < c.files.size(); ++f) {
        ++compared;
        if (outputs[r][f] != outputs[0][f]) failed.push_back(c.name + ":" + c.files[f]);
        if (outputs[0][f].empty() && c.files[f] != "stdout") failed.push_back(c.name + ":" + c.files[f] + " empty");
      }
    }
  }
  fs::remove_all(dir);
  std::string detail = std::to_string(commands.size()) + " subcommands x " + std::to_string(kC9Runs) + " runs, " +
                       std::to_string(compared) + " file comparisons";
  if (!failed.empty()) {
    detail += "; differing/failed:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"expressiveness: dodecahedron vs desargues", expressiveness},
      {"GHD^0 equals SPD", ghd0_is_spd},
      {"pseudometric axioms", pseudometric},
      {"analytic gradients vs finite differences", gradients},
      {"reduction identities", reductions},
      {"permutation equivariance", equivariance},
      {"community ordering", community_demo},
      {"coarsening quality", coarsening_quality},
      {"CLI determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " (" << criteria[i].first
              << "): " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
