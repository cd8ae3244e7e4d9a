#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "hdse/coarsening.hpp"
#include "hdse/distance.hpp"
#include "hdse/gdwl.hpp"
#include "hdse/graph.hpp"
#include "hdse/train.hpp"

namespace hdse::cli {
namespace {

struct Options {
  unsigned threads{1};

  struct {
    std::string input, output, algo{"louvain"};
    std::size_t levels{1};
    double ratio{0.5};
    std::uint64_t seed{0};
  } coarsen;

  struct {
    std::string hierarchy, output, format{"bin"};
    std::uint32_t clip{30};
    std::size_t base_level{0};
  } encode;

  struct {
    std::string g1, g2, enc{"hdse"}, algo{"newman"}, output;
    std::size_t levels{1};
    std::uint32_t clip{30};
    double ratio{0.5};
    std::uint64_t seed{0};
    std::size_t max_iter{0};
    std::size_t stability_seeds{3};
  } gdwl;

  struct {
    std::size_t seeds{5};
    std::uint64_t first_seed{0};
    std::string output, algo{"louvain"}, metrics_dir, checkpoint_dir;
    DemoConfig cfg;
  } demo;

  struct {
    std::string name, output, format{"edges"};
    NamedGraphSpec spec;
  } named;
};

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw ParseError("write to '" + path + "' failed");
}

unsigned default_threads() {
  const char* env = std::getenv(kThreadsEnv);
  if (env == nullptr || *env == '\0') return 1;
  try {
    const unsigned long v = std::stoul(env);
    return v == 0 ? 1u : static_cast<unsigned>(v);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string(kThreadsEnv) + " must be a positive integer");
  }
}

int cmd_coarsen(const Options& o, std::ostream& out, std::ostream& err) {
  const auto& c = o.coarsen;
  const CoarseningAlgo algo = parse_algo(c.algo);
  if (!(c.ratio > 0 && c.ratio < 1)) throw std::invalid_argument("--ratio must lie in (0,1)");
  const Graph g = load_graph_file(c.input);
  const Hierarchy h = build_hierarchy(g, algo, c.levels, c.ratio, c.seed);
  write_text(c.output, hierarchy_to_json(h).dump(2) + "\n", out);
  for (std::size_t k = 0; k < h.levels.size(); ++k) {
    err << "level " << k << ": " << h.levels[k].num_nodes() << " nodes, " << h.levels[k].num_edges() << " edges";
    if (k > 0) err << ", ratio " << std::fixed << std::setprecision(4) << h.ratios[k - 1] << std::defaultfloat;
    err << '\n';
  }
  return kExitOk;
}

int cmd_encode(const Options& o, std::ostream& out, std::ostream& err) {
  const auto& e = o.encode;
  if (e.format != "bin" && e.format != "json") throw std::invalid_argument("--format must be bin or json");
  if (e.clip < 1 || e.clip > HdseTensor::kMaxClip) throw std::invalid_argument("--clip must lie in [1, 254]");
  const Hierarchy h = hierarchy_from_json(nlohmann::json::parse(read_file(e.hierarchy)));
  if (e.base_level > h.max_level()) {
    throw std::out_of_range("--base-level " + std::to_string(e.base_level) + " exceeds hierarchy depth " +
                            std::to_string(h.max_level()));
  }
  const HdseTensor t =
      e.base_level == 0 ? hdse(h, e.clip, o.threads) : high_level_hdse(h, e.base_level, e.clip, o.threads);
  if (e.format == "json") {
    write_text(e.output, tensor_to_json(t).dump() + "\n", out);
  } else {
    const auto bytes = encode_tensor(t);
    write_text(e.output, std::string(bytes.begin(), bytes.end()), out);
  }
  err << "tensor " << t.rows() << " x " << t.cols() << " x " << t.levels() << ", clip " << t.clip() << '\n';
  return kExitOk;
}

int cmd_gdwl(const Options& o, std::ostream& out, std::ostream& err) {
  const auto& a = o.gdwl;
  EncodingKind enc;
  if (a.enc == "spd") {
    enc = EncodingKind::spd();
  } else if (a.enc == "hdse") {
    enc = EncodingKind::hdse(a.levels, parse_algo(a.algo), a.clip, a.seed, a.ratio);
  } else {
    throw std::invalid_argument("--enc must be spd or hdse");
  }
  enc.validate();
  const Graph g1 = load_graph_file(a.g1);
  const Graph g2 = load_graph_file(a.g2);
  const PairVerdict v = compare_graphs(g1, g2, enc, a.max_iter);
  nlohmann::json j = verdict_to_json(v);
  j["encoding"] = enc.describe();

  if (enc.tag == EncodingKind::Tag::kHdse && v.distinguished && a.stability_seeds > 0) {
    auto runs = nlohmann::json::array();
    std::size_t hits = 0;
    for (std::size_t i = 1; i <= a.stability_seeds; ++i) {
      EncodingKind other = enc;
      other.seed = a.seed + i;
      const bool d = compare_graphs(g1, g2, other, a.max_iter).distinguished;
      hits += d;
      runs.push_back({{"seed", other.seed}, {"distinguished", d}});
    }
    j["stability"] = {{"runs", runs}, {"distinguished", hits}, {"total", a.stability_seeds}};
    err << "stability: distinguished under " << hits << " of " << a.stability_seeds << " further seeds\n";
  }
  write_text(a.output, j.dump(2) + "\n", out);
  err << (v.distinguished ? "distinguished" : "not distinguished") << " after " << v.iterations
      << " iterations (" << enc.describe() << ")\n";
  return v.distinguished ? kExitOk : kExitNegative;
}

int cmd_demo(const Options& o, std::ostream& out, std::ostream& err) {
  const auto& a = o.demo;
  DemoConfig cfg = a.cfg;
  cfg.algo = parse_algo(a.algo);
  cfg.validate();
  if (a.seeds < 1) throw std::invalid_argument("--seeds must be >= 1");

  DemoSummary summary;
  summary.accuracy.assign(3, {});
  const std::vector<DemoEncoding> encodings{DemoEncoding::kNone, DemoEncoding::kSpd, DemoEncoding::kHdse};
  for (std::size_t s = 0; s < a.seeds; ++s) {
    const std::uint64_t seed = a.first_seed + s;
    summary.seeds.push_back(seed);
    const auto dataset = make_community_dataset(cfg.data, seed);
    for (DemoEncoding enc : encodings) {
      const DemoRun run = train_demo(dataset, enc, seed, cfg);
      summary.accuracy[static_cast<std::size_t>(enc)].push_back(run.test_accuracy);
      const std::string stem = std::string(demo_encoding_name(enc)) + "_seed" + std::to_string(seed);
      if (!a.metrics_dir.empty()) {
        std::filesystem::create_directories(a.metrics_dir);
        write_text((std::filesystem::path(a.metrics_dir) / (stem + ".csv")).string(), metrics_to_csv(run.metrics), out);
      }
      if (!a.checkpoint_dir.empty()) {
        std::filesystem::create_directories(a.checkpoint_dir);
        write_text((std::filesystem::path(a.checkpoint_dir) / (stem + ".json")).string(),
                   checkpoint_to_json(run).dump() + "\n", out);
      }
    }
  }
  write_text(a.output, summary_to_csv(summary), out);

  const double none = summary.mean(DemoEncoding::kNone);
  const double spd = summary.mean(DemoEncoding::kSpd);
  const double hd = summary.mean(DemoEncoding::kHdse);
  std::ostringstream line;
  line << std::fixed << std::setprecision(4) << "ordering: hdse=" << hd << " spd=" << spd << " none=" << none
       << "; hdse>none " << (hd > none ? "yes" : "no") << "; hdse>=spd " << (hd >= spd ? "yes" : "no") << '\n';
  err << line.str();
  return kExitOk;
}

int cmd_named(const Options& o, std::ostream& out, std::ostream&) {
  const auto& a = o.named;
  if (a.format != "edges" && a.format != "json") throw std::invalid_argument("--format must be edges or json");
  NamedGraphSpec spec = a.spec;
  spec.name = a.name;
  const Graph g = make_named_graph(spec);
  write_text(a.output, a.format == "json" ? graph_to_json(g).dump() + "\n" : write_edge_list(g), out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Hierarchical distance structural encodings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "hdse_cli 1.0");

  std::optional<unsigned> threads_flag;
  app.add_option("--threads", threads_flag, "worker threads (default: $" + std::string(kThreadsEnv) + " or 1)")
      ->check(CLI::PositiveNumber);

  auto* coarsen = app.add_subcommand("coarsen", "build a coarsening hierarchy");
  coarsen->add_option("input", o.coarsen.input, "graph file (edge list or .json)")->required();
  coarsen->add_option("-o,--output", o.coarsen.output, "hierarchy JSON (default: stdout)");
  coarsen->add_option("--algo", o.coarsen.algo, "louvain | newman | hem")->capture_default_str();
  coarsen->add_option("-K,--levels", o.coarsen.levels, "number of coarsening steps")->capture_default_str();
  coarsen->add_option("--ratio", o.coarsen.ratio, "hem target ratio")->capture_default_str();
  coarsen->add_option("--seed", o.coarsen.seed)->capture_default_str();

  auto* encode = app.add_subcommand("encode", "compute the HDSE tensor of a hierarchy");
  encode->add_option("hierarchy", o.encode.hierarchy, "hierarchy JSON")->required();
  encode->add_option("-o,--output", o.encode.output, "tensor file (default: stdout)");
  encode->add_option("-L,--clip", o.encode.clip, "maximum distance length")->capture_default_str();
  encode->add_option("--base-level", o.encode.base_level, "0 for full HDSE, c >= 1 for the high-level tensor")
      ->capture_default_str();
  encode->add_option("--format", o.encode.format, "bin | json")->capture_default_str();

  auto* gdwl = app.add_subcommand("gdwl", "GD-WL test on two graphs");
  gdwl->add_option("g1", o.gdwl.g1)->required();
  gdwl->add_option("g2", o.gdwl.g2)->required();
  gdwl->add_option("--enc", o.gdwl.enc, "spd | hdse")->capture_default_str();
  gdwl->add_option("--algo", o.gdwl.algo, "louvain | newman | hem")->capture_default_str();
  gdwl->add_option("-K,--levels", o.gdwl.levels)->capture_default_str();
  gdwl->add_option("-L,--clip", o.gdwl.clip)->capture_default_str();
  gdwl->add_option("--ratio", o.gdwl.ratio)->capture_default_str();
  gdwl->add_option("--seed", o.gdwl.seed)->capture_default_str();
  gdwl->add_option("--max-iter", o.gdwl.max_iter, "0 = until stable")->capture_default_str();
  gdwl->add_option("--stability-seeds", o.gdwl.stability_seeds, "extra seeds tried when hdse distinguishes")
      ->capture_default_str();
  gdwl->add_option("-o,--output", o.gdwl.output, "verdict JSON (default: stdout)");

  auto* demo = app.add_subcommand("demo", "community classification with none / spd / hdse attention bias");
  auto& dc = o.demo.cfg;
  demo->add_option("--seeds", o.demo.seeds, "number of seeds")->capture_default_str();
  demo->add_option("--seed", o.demo.first_seed, "first seed")->capture_default_str();
  demo->add_option("--epochs", dc.epochs)->capture_default_str();
  demo->add_option("--graphs", dc.data.num_graphs)->capture_default_str();
  demo->add_option("--nodes", dc.data.nodes)->capture_default_str();
  demo->add_option("--p", dc.data.p_intra, "intra-block edge probability")->capture_default_str();
  demo->add_option("--q", dc.data.q_inter, "inter-block edge probability")->capture_default_str();
  demo->add_option("--signal", dc.data.signal, "label offset on feature 0")->capture_default_str();
  demo->add_option("--lr", dc.learning_rate)->capture_default_str();
  demo->add_option("--heads", dc.heads)->capture_default_str();
  demo->add_option("--head-dim", dc.head_dim)->capture_default_str();
  demo->add_option("--embed-dim", dc.embed_dim)->capture_default_str();
  demo->add_option("-K,--levels", dc.max_level)->capture_default_str();
  demo->add_option("-L,--clip", dc.clip)->capture_default_str();
  demo->add_option("--algo", o.demo.algo)->capture_default_str();
  demo->add_option("-o,--output", o.demo.output, "accuracy CSV (default: stdout)");
  demo->add_option("--metrics-dir", o.demo.metrics_dir, "per-run epoch metrics CSVs");
  demo->add_option("--checkpoint-dir", o.demo.checkpoint_dir, "per-run parameter JSONs");

  auto* named = app.add_subcommand("named-graph", "emit a named or generated graph");
  named->add_option("name", o.named.name,
                    "dodecahedron | desargues | petersen | cycle | barbell | erdos_renyi | community_pair")
      ->required();
  named->add_option("--n", o.named.spec.n, "size parameter");
  named->add_option("--k", o.named.spec.k, "secondary size parameter");
  named->add_option("--p", o.named.spec.p)->capture_default_str();
  named->add_option("--q", o.named.spec.q)->capture_default_str();
  named->add_option("--seed", o.named.spec.seed)->capture_default_str();
  named->add_option("--format", o.named.format, "edges | json")->capture_default_str();
  named->add_option("-o,--output", o.named.output, "default: stdout");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    o.threads = threads_flag ? *threads_flag : default_threads();
    if (coarsen->parsed()) return cmd_coarsen(o, out, err);
    if (encode->parsed()) return cmd_encode(o, out, err);
    if (gdwl->parsed()) return cmd_gdwl(o, out, err);
    if (demo->parsed()) return cmd_demo(o, out, err);
    if (named->parsed()) return cmd_named(o, out, err);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitConfig;
}

}  // namespace hdse::cli
