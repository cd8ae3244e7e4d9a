/*
 * attention.hpp
 *
 * Distance-biased multi-head attention.
 *
 *   H[i,j,h] = MLP([e^0[D(i,j,0)], ..., e^K[D(i,j,K)]])_h
 *   out_h    = softmax(Q K^T / sqrt(d') + H_h) V
 *
 * with one embedding table per hierarchy level (L+2 rows: clipped distances
 * 0..L plus the unreachable code), a one-hidden-layer ReLU MLP whose output
 * width is the head count, and per-head projections W_Q, W_K, W_V. The
 * linear variant lets base nodes attend to level-k clusters: keys and values
 * come from the coarse feature matrix and the bias from the high-level
 * distance tensor, so cost is |V^0| x |V^k| per head.
 *
 * BiasedAttentionLayer caches its forward pass and produces exact gradients
 * for every parameter tensor, including the embedding rows reached through H.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hdse/distance.hpp"

namespace hdse {

using Matrix = Eigen::MatrixXd;

struct BiasParams {
  std::uint32_t clip{30};
  std::vector<Matrix> tables;  // per level: (clip + 2) x embed_dim
  Matrix w1;                   // (levels * embed_dim) x hidden
  Matrix b1;                   // 1 x hidden
  Matrix w2;                   // hidden x heads
  Matrix b2;                   // 1 x heads

  std::size_t levels() const noexcept { return tables.size(); }
  Eigen::Index embed_dim() const noexcept { return tables.empty() ? 0 : tables[0].cols(); }
  Eigen::Index hidden() const noexcept { return w1.cols(); }
  Eigen::Index heads() const noexcept { return w2.cols(); }

  // Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); embeddings use fan_in 1.
  static BiasParams init(std::size_t levels, std::uint32_t clip, Eigen::Index embed_dim, Eigen::Index hidden,
                         Eigen::Index heads, std::uint64_t seed);
  BiasParams zeros_like() const;
  void validate() const;
};

struct AttentionParams {
  std::vector<Matrix> wq, wk, wv;  // per head: model_dim x head_dim

  std::size_t heads() const noexcept { return wq.size(); }
  Eigen::Index model_dim() const noexcept { return wq.empty() ? 0 : wq[0].rows(); }
  Eigen::Index head_dim() const noexcept { return wq.empty() ? 0 : wq[0].cols(); }

  static AttentionParams init(Eigen::Index model_dim, Eigen::Index head_dim, std::size_t heads, std::uint64_t seed);
  AttentionParams zeros_like() const;
  void validate() const;
};

struct LayerParams {
  AttentionParams attention;
  std::optional<BiasParams> bias;

  LayerParams zeros_like() const;
  // this += scale * other; layouts must match.
  void add_scaled(const LayerParams& other, double scale);
  // Every tensor in a fixed order with a stable name ("wq.0", "bias.table.1", ...).
  void for_each(const std::function<void(const std::string&, Matrix&)>& fn);
  void for_each(const std::function<void(const std::string&, const Matrix&)>& fn) const;
};

// Gradients share the parameter layout.
using Gradients = LayerParams;

// One matrix per head, rows x cols of the distance tensor. Empty = no bias.
using BiasTensor = std::vector<Matrix>;

namespace detail {
// The MLP only depends on the code tuple of a pair, so it runs once per
// distinct tuple and pairs index into the result.
struct BiasEvaluation {
  std::vector<std::uint32_t> pair_index;  // rows * cols -> unique tuple
  std::vector<std::vector<std::uint8_t>> codes;
  Matrix z0, a1, hidden, out;  // one row per unique tuple
  std::size_t rows{0}, cols{0};

  BiasTensor expand() const;
};

BiasEvaluation evaluate_bias(const HdseTensor& d, const BiasParams& p);
}  // namespace detail

BiasTensor bias_matrix(const HdseTensor& d, const BiasParams& p);

// Dense attention, keys/values from x. Heads concatenated column-wise.
Matrix hdse_attention_forward(const Matrix& x, const AttentionParams& p, const BiasTensor& h);

// Keys/values from the cluster features xk (|V^k| x model_dim); hk is
// |V^0| x |V^k| per head.
Matrix linear_attention_forward(const Matrix& x, const Matrix& xk, const AttentionParams& p, const BiasTensor& hk);

// Row-wise softmax of (x W_Q)(xkv W_K)^T / sqrt(d') + h for one head.
Matrix attention_weights(const Matrix& x, const Matrix& xkv, const AttentionParams& p, std::size_t head,
                         const Matrix* h);

class BiasedAttentionLayer {
 public:
  explicit BiasedAttentionLayer(LayerParams params);

  // d must be null exactly when the layer has no bias parameters.
  Matrix forward(const Matrix& x, const HdseTensor* d);
  Matrix forward_linear(const Matrix& x, const Matrix& xk, const HdseTensor* dc);

  // Gradients of sum(d_out .* output) for the most recent forward pass.
  Gradients backward(const Matrix& d_out) const;

  LayerParams& params() noexcept { return params_; }
  const LayerParams& params() const noexcept { return params_; }

 private:
  struct HeadCache {
    Matrix q, k, v, attn;
  };
  struct Cache {
    Matrix x, xkv;
    std::optional<detail::BiasEvaluation> bias;
    std::vector<HeadCache> heads;
  };

  Matrix run(const Matrix& x, const Matrix& xkv, const HdseTensor* d);

  LayerParams params_;
  std::optional<Cache> cache_;
};

nlohmann::json params_to_json(const LayerParams& p);
LayerParams params_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace hdse
