#include "hdse/train.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "hdse/distance.hpp"
#include "hdse/gdwl.hpp"

namespace hdse {

DemoEncoding parse_demo_encoding(std::string_view name) {
  if (name == "none") return DemoEncoding::kNone;
  if (name == "spd") return DemoEncoding::kSpd;
  if (name == "hdse") return DemoEncoding::kHdse;
  throw std::invalid_argument("unknown encoding '" + std::string(name) + "'");
}

std::string_view demo_encoding_name(DemoEncoding enc) {
  switch (enc) {
    case DemoEncoding::kNone: return "none";
    case DemoEncoding::kSpd: return "spd";
    case DemoEncoding::kHdse: return "hdse";
  }
  return "unknown";
}

void CommunityDataConfig::validate() const {
  if (num_graphs < 1 || nodes < 4 || feature_dim < 1) {
    throw std::invalid_argument("community data: need >= 1 graph, >= 4 nodes, >= 1 feature");
  }
  if (!(p_intra >= 0 && p_intra <= 1 && q_inter >= 0 && q_inter <= 1)) {
    throw std::invalid_argument("community data: probabilities must lie in [0,1]");
  }
}

void DemoConfig::validate() const {
  data.validate();
  if (epochs < 1 || !(learning_rate > 0) || heads < 1 || head_dim < 1 || embed_dim < 1) {
    throw std::invalid_argument("demo: epochs, learning rate, heads and widths must be positive");
  }
  if (clip < 1 || clip > HdseTensor::kMaxClip) throw std::invalid_argument("demo: clip must lie in [1, 254]");
  if (!(train_fraction > 0 && val_fraction >= 0 && train_fraction + val_fraction < 1)) {
    throw std::invalid_argument("demo: split fractions must leave a non-empty test set");
  }
}

std::vector<Graph> make_community_dataset(const CommunityDataConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Graph> out;
  for (std::size_t gi = 0; gi < cfg.num_graphs; ++gi) {
    Graph g = community_pair(cfg.nodes, cfg.p_intra, cfg.q_inter, rng());
    std::vector<int> labels = g.labels();
    Matrix x(g.num_nodes(), cfg.feature_dim);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      for (Eigen::Index c = 0; c < cfg.feature_dim; ++c) x(v, c) = noise(rng);
      x(v, 0) += cfg.signal * (labels[v] == 1 ? 1.0 : -1.0);
    }
    if (cfg.shuffle_labels) std::shuffle(labels.begin(), labels.end(), rng);
    out.push_back(g.with_features(std::move(x)).with_labels(std::move(labels)));
  }
  return out;
}

namespace {

enum class Split : std::uint8_t { kTrain, kVal, kTest };

struct Sample {
  const Graph* graph;
  std::optional<HdseTensor> distances;
  std::vector<Split> split;
};

std::vector<Split> split_nodes(NodeId n, const DemoConfig& cfg, std::mt19937_64& rng) {
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::round(cfg.train_fraction * n));
  const auto n_val = static_cast<std::size_t>(std::round(cfg.val_fraction * n));
  std::vector<Split> split(n, Split::kTest);
  for (std::size_t r = 0; r < n; ++r) {
    if (r < n_train) {
      split[order[r]] = Split::kTrain;
    } else if (r < n_train + n_val) {
      split[order[r]] = Split::kVal;
    }
  }
  return split;
}

int num_classes(const std::vector<Graph>& dataset) {
  int mx = 0;
  for (const auto& g : dataset) {
    for (int l : g.labels()) mx = std::max(mx, l);
  }
  return mx + 1;
}

}  // namespace

DemoRun train_demo(const std::vector<Graph>& dataset, DemoEncoding enc, std::uint64_t seed, const DemoConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("train_demo: empty dataset");
  for (const auto& g : dataset) {
    if (!g.has_labels() || !g.has_features()) throw std::invalid_argument("train_demo: graphs need labels and features");
  }
  const Eigen::Index model_dim = dataset[0].features().cols();
  const int classes = num_classes(dataset);

  std::mt19937_64 split_rng(seed ^ 0x5eed5911ULL);
  std::vector<Sample> samples;
  for (std::size_t gi = 0; gi < dataset.size(); ++gi) {
    Sample s{&dataset[gi], std::nullopt, split_nodes(dataset[gi].num_nodes(), cfg, split_rng)};
    if (enc != DemoEncoding::kNone) {
      const std::size_t levels = enc == DemoEncoding::kSpd ? 0 : cfg.max_level;
      const Hierarchy h = build_hierarchy(dataset[gi].without_attributes(), cfg.algo, levels, 0.5, seed + gi);
      s.distances = hdse(h, cfg.clip);
    }
    samples.push_back(std::move(s));
  }

  LayerParams params;
  params.attention = AttentionParams::init(model_dim, cfg.head_dim, cfg.heads, seed);
  if (enc != DemoEncoding::kNone) {
    const std::size_t levels = enc == DemoEncoding::kSpd ? 1 : cfg.max_level + 1;
    params.bias = BiasParams::init(levels, cfg.clip, cfg.embed_dim, cfg.embed_dim,
                                   static_cast<Eigen::Index>(cfg.heads), seed + 1);
  }
  BiasedAttentionLayer layer(std::move(params));

  const Eigen::Index width = cfg.head_dim * static_cast<Eigen::Index>(cfg.heads);
  std::mt19937_64 init_rng(seed + 2);
  std::uniform_real_distribution<double> init(-1.0 / std::sqrt(static_cast<double>(width)),
                                              1.0 / std::sqrt(static_cast<double>(width)));
  Classifier clf{Matrix(width, classes), Matrix(1, classes)};
  for (Eigen::Index i = 0; i < clf.w.size(); ++i) clf.w.data()[i] = init(init_rng);
  for (Eigen::Index i = 0; i < clf.b.size(); ++i) clf.b.data()[i] = init(init_rng);

  std::size_t train_total = 0;
  for (const auto& s : samples) train_total += std::count(s.split.begin(), s.split.end(), Split::kTrain);
  if (train_total == 0) throw std::invalid_argument("train_demo: no training nodes");

  DemoRun run;
  auto evaluate_epoch = [&](bool apply_update, EpochMetrics& m) {
    Gradients total = layer.params().zeros_like();
    Matrix d_w = Matrix::Zero(clf.w.rows(), clf.w.cols());
    Matrix d_b = Matrix::Zero(1, classes);
    double loss = 0.0;
    std::size_t train_correct = 0, test_correct = 0, test_total = 0;
    for (const auto& s : samples) {
      const Matrix out = layer.forward(s.graph->features(), s.distances ? &*s.distances : nullptr);
      const Matrix logits = (out * clf.w).rowwise() + clf.b.row(0);
      Matrix d_logits = Matrix::Zero(logits.rows(), logits.cols());
      const auto& labels = s.graph->labels();
      for (Eigen::Index v = 0; v < logits.rows(); ++v) {
        Eigen::Index pred = 0;
        logits.row(v).maxCoeff(&pred);
        const bool correct = pred == labels[v];
        const Split sp = s.split[v];
        if (sp == Split::kTest) {
          ++test_total;
          test_correct += correct;
        }
        if (sp != Split::kTrain) continue;
        train_correct += correct;
        const double mx = logits.row(v).maxCoeff();
        Eigen::RowVectorXd prob = (logits.row(v).array() - mx).exp();
        const double z = prob.sum();
        prob /= z;
        loss -= std::log(prob(labels[v]));
        prob(labels[v]) -= 1.0;
        d_logits.row(v) = prob / static_cast<double>(train_total);
      }
      if (!apply_update) continue;
      d_w += out.transpose() * d_logits;
      d_b += d_logits.colwise().sum();
      total.add_scaled(layer.backward(d_logits * clf.w.transpose()), 1.0);
    }
    m.loss = loss / static_cast<double>(train_total);
    m.train_acc = static_cast<double>(train_correct) / static_cast<double>(train_total);
    m.test_acc = test_total == 0 ? 0.0 : static_cast<double>(test_correct) / static_cast<double>(test_total);
    if (apply_update) {
      layer.params().add_scaled(total, -cfg.learning_rate);
      clf.w -= cfg.learning_rate * d_w;
      clf.b -= cfg.learning_rate * d_b;
    }
  };

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    evaluate_epoch(true, m);
    run.metrics.push_back(m);
  }
  EpochMetrics final_metrics;
  final_metrics.epoch = cfg.epochs;
  evaluate_epoch(false, final_metrics);
  run.test_accuracy = final_metrics.test_acc;
  run.params = layer.params();
  run.classifier = std::move(clf);
  return run;
}

double DemoSummary::mean(DemoEncoding enc) const {
  const auto& row = accuracy.at(static_cast<std::size_t>(enc));
  if (row.empty()) return 0.0;
  return std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
}

DemoSummary run_demo(const DemoConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  cfg.validate();
  if (seeds.empty()) throw std::invalid_argument("run_demo: need at least one seed");
  DemoSummary summary;
  summary.seeds = seeds;
  summary.accuracy.assign(3, {});
  for (std::uint64_t seed : seeds) {
    const auto dataset = make_community_dataset(cfg.data, seed);
    for (DemoEncoding enc : {DemoEncoding::kNone, DemoEncoding::kSpd, DemoEncoding::kHdse}) {
      summary.accuracy[static_cast<std::size_t>(enc)].push_back(train_demo(dataset, enc, seed, cfg).test_accuracy);
    }
  }
  return summary;
}

std::string metrics_to_csv(const std::vector<EpochMetrics>& metrics) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  os << "epoch,loss,train_acc,test_acc\n";
  for (const auto& m : metrics) os << m.epoch << ',' << m.loss << ',' << m.train_acc << ',' << m.test_acc << '\n';
  return os.str();
}

std::string summary_to_csv(const DemoSummary& summary) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed;
  os << "encoding";
  for (std::uint64_t s : summary.seeds) os << ",seed_" << s;
  os << ",mean\n";
  for (DemoEncoding enc : {DemoEncoding::kNone, DemoEncoding::kSpd, DemoEncoding::kHdse}) {
    os << demo_encoding_name(enc);
    for (double a : summary.accuracy[static_cast<std::size_t>(enc)]) os << ',' << a;
    os << ',' << summary.mean(enc) << '\n';
  }
  return os.str();
}

nlohmann::json checkpoint_to_json(const DemoRun& run) {
  nlohmann::json j = params_to_json(run.params);
  j["classifier"] = {{"w", matrix_to_json(run.classifier.w)}, {"b", matrix_to_json(run.classifier.b)}};
  return j;
}

}  // namespace hdse
