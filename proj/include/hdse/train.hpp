/*
 * train.hpp
 *
 * Node classification on synthetic two-community graphs with a single
 * biased attention layer followed by a linear classifier, trained by
 * full-batch gradient descent on the mean cross-entropy of training nodes.
 *
 * Node features are Gaussian noise plus a weak label-dependent offset on the
 * first coordinate, so a node's own feature is only a noisy hint of its
 * block. Attention that concentrates on same-community nodes averages the
 * noise away; the three encodings differ only in what the attention bias can
 * see (nothing, shortest-path distance, hierarchy distance).
 */
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hdse/attention.hpp"
#include "hdse/coarsening.hpp"
#include "hdse/graph.hpp"

namespace hdse {

enum class DemoEncoding { kNone, kSpd, kHdse };

DemoEncoding parse_demo_encoding(std::string_view name);
std::string_view demo_encoding_name(DemoEncoding enc);

struct CommunityDataConfig {
  std::size_t num_graphs{20};
  NodeId nodes{30};
  double p_intra{0.3};
  double q_inter{0.05};
  Eigen::Index feature_dim{4};
  double signal{0.5};  // label offset on feature 0, in units of the noise std
  bool shuffle_labels{false};

  void validate() const;
};

struct DemoConfig {
  CommunityDataConfig data;
  std::size_t epochs{200};
  double learning_rate{0.2};
  std::size_t heads{4};
  Eigen::Index head_dim{4};
  Eigen::Index embed_dim{16};
  std::size_t max_level{1};
  std::uint32_t clip{30};
  CoarseningAlgo algo{CoarseningAlgo::kLouvain};
  double train_fraction{0.6};
  double val_fraction{0.2};

  void validate() const;
};

// Graphs carry block labels and the synthetic features described above.
std::vector<Graph> make_community_dataset(const CommunityDataConfig& cfg, std::uint64_t seed);

struct EpochMetrics {
  std::size_t epoch{0};
  double loss{0.0};
  double train_acc{0.0};
  double test_acc{0.0};
};

struct Classifier {
  Matrix w;  // (heads * head_dim) x classes
  Matrix b;  // 1 x classes
};

struct DemoRun {
  double test_accuracy{0.0};
  std::vector<EpochMetrics> metrics;
  LayerParams params;
  Classifier classifier;
};

// Trains one model; deterministic for a fixed seed.
DemoRun train_demo(const std::vector<Graph>& dataset, DemoEncoding enc, std::uint64_t seed, const DemoConfig& cfg);

struct DemoSummary {
  std::vector<std::uint64_t> seeds;
  // accuracy[e][s]: encoding e (none, spd, hdse), seed index s.
  std::vector<std::vector<double>> accuracy;

  double mean(DemoEncoding enc) const;
};

// For each seed: generate the dataset from the seed, then train every
// encoding on it with the same seed.
DemoSummary run_demo(const DemoConfig& cfg, const std::vector<std::uint64_t>& seeds);

std::string metrics_to_csv(const std::vector<EpochMetrics>& metrics);
std::string summary_to_csv(const DemoSummary& summary);

nlohmann::json checkpoint_to_json(const DemoRun& run);

}  // namespace hdse
