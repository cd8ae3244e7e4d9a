#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "hdse/attention.hpp"
#include "hdse/coarsening.hpp"
#include "hdse/gdwl.hpp"
#include "oracles.hpp"

using namespace hdse;

namespace {

Partition cliques(NodeId k) {
  std::vector<std::uint32_t> labels(2 * k, 0);
  for (NodeId i = k; i < 2 * k; ++i) labels[i] = 1;
  return Partition::from_labels(labels);
}

auto tensor_codes(const HdseTensor& t) {
  return [&t](std::size_t i, std::size_t j) { return std::vector<std::uint8_t>(t.pair(i, j), t.pair(i, j) + t.levels()); };
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Bias, MatchesPerPairMlp) {
  const Hierarchy h = hierarchy_from_maps(barbell(4), {cliques(4)});
  const HdseTensor t = hdse::hdse(h, 30);
  const BiasParams p = BiasParams::init(2, 30, 6, 5, 3, 1);
  const BiasTensor b = bias_matrix(t, p);
  ASSERT_EQ(b.size(), 3u);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      Eigen::RowVectorXd z(12);
      z << p.tables[0].row(t(i, j, 0)), p.tables[1].row(t(i, j, 1));
      const Eigen::RowVectorXd hidden = ((z * p.w1) + p.b1).cwiseMax(0.0);
      const Eigen::RowVectorXd out = hidden * p.w2 + p.b2;
      for (Eigen::Index hd = 0; hd < 3; ++hd) EXPECT_NEAR(b[hd](i, j), out(hd), 1e-14);
    }
  }
}

TEST(Bias, RejectsMismatchedTensor) {
  const HdseTensor t = hdse::hdse(hierarchy_from_maps(barbell(3), {}), 30);
  EXPECT_THROW(bias_matrix(t, BiasParams::init(2, 30, 4, 4, 2, 0)), ValidationError);
  EXPECT_THROW(bias_matrix(t, BiasParams::init(1, 10, 4, 4, 2, 0)), ValidationError);
}

TEST(Attention, DenseMatchesNaiveOracle) {
  std::mt19937_64 rng(41);
  const Graph g = oracle::random_graph(10, 0.3, rng);
  const Hierarchy h = build_hierarchy(g, CoarseningAlgo::kLouvain, 1, 0.5, 0);
  const HdseTensor t = hdse::hdse(h, 5);
  LayerParams p;
  p.attention = AttentionParams::init(4, 3, 2, 7);
  p.bias = BiasParams::init(2, 5, 4, 6, 2, 8);
  const Matrix x = oracle::random_matrix(10, 4, rng);
  BiasedAttentionLayer layer(p);
  const Matrix out = layer.forward(x, &t);
  const Matrix ref = oracle::naive_attention(x, x, p.attention, p.bias, tensor_codes(t));
  EXPECT_LT(max_abs(out - ref), 1e-12);
  EXPECT_LT(max_abs(hdse_attention_forward(x, p.attention, bias_matrix(t, *p.bias)) - ref), 1e-12);
}

TEST(Attention, LinearMatchesNaiveOracle) {
  std::mt19937_64 rng(42);
  const Graph g = oracle::random_graph(12, 0.3, rng);
  const Hierarchy h = build_hierarchy(g, CoarseningAlgo::kLouvain, 1, 0.5, 0);
  const HdseTensor t = high_level_hdse(h, 1, 5);
  const Matrix x = oracle::random_matrix(12, 4, rng);
  const Matrix xk = composed_projection(h, 1).project(x);
  LayerParams p;
  p.attention = AttentionParams::init(4, 2, 3, 1);
  p.bias = BiasParams::init(1, 5, 3, 3, 3, 2);
  BiasedAttentionLayer layer(p);
  const Matrix out = layer.forward_linear(x, xk, &t);
  ASSERT_EQ(out.rows(), 12);
  ASSERT_EQ(out.cols(), 6);
  const Matrix ref = oracle::naive_attention(x, xk, p.attention, p.bias, tensor_codes(t));
  EXPECT_LT(max_abs(out - ref), 1e-12);
}

TEST(Attention, WeightsAreRowStochastic) {
  std::mt19937_64 rng(43);
  const Matrix x = oracle::random_matrix(9, 4, rng);
  const AttentionParams p = AttentionParams::init(4, 3, 2, 3);
  const Matrix h = oracle::random_matrix(9, 9, rng) * 10.0;
  for (std::size_t hd = 0; hd < 2; ++hd) {
    const Matrix a = attention_weights(x, x, p, hd, &h);
    EXPECT_LT((a.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-14);
    EXPECT_GE(a.minCoeff(), 0.0);
  }
}

TEST(Attention, ZeroBiasEqualsPlainAttention) {
  std::mt19937_64 rng(44);
  const Matrix x = oracle::random_matrix(11, 4, rng);
  const AttentionParams p = AttentionParams::init(4, 3, 2, 5);
  const BiasTensor zero(2, Matrix::Zero(11, 11));
  EXPECT_LT(max_abs(hdse_attention_forward(x, p, zero) - hdse_attention_forward(x, p, {})), 1e-12);
}

TEST(Attention, LargeBiasMasksPairs) {
  // A very negative bias on every pair except the diagonal makes each node
  // attend only to itself.
  std::mt19937_64 rng(45);
  const Matrix x = oracle::random_matrix(6, 4, rng);
  const AttentionParams p = AttentionParams::init(4, 4, 1, 6);
  Matrix h = Matrix::Constant(6, 6, -1e4);
  h.diagonal().setZero();
  const Matrix out = hdse_attention_forward(x, p, {h});
  EXPECT_LT(max_abs(out - x * p.wv[0]), 1e-12);
}

TEST(Attention, RejectsBadInput) {
  const AttentionParams p = AttentionParams::init(4, 3, 2, 5);
  Matrix x = Matrix::Zero(5, 4);
  x(1, 1) = std::nan("");
  EXPECT_THROW(hdse_attention_forward(x, p, {}), ValidationError);
  EXPECT_THROW(hdse_attention_forward(Matrix::Zero(5, 3), p, {}), ValidationError);
  EXPECT_THROW(hdse_attention_forward(Matrix::Zero(5, 4), p, {Matrix::Zero(5, 5)}), ValidationError);
}

TEST(Layer, BiasPresenceMustMatchTensor) {
  LayerParams p;
  p.attention = AttentionParams::init(4, 3, 2, 5);
  BiasedAttentionLayer plain(p);
  const HdseTensor t = hdse::hdse(hierarchy_from_maps(barbell(3), {}), 30);
  EXPECT_THROW(plain.forward(Matrix::Zero(6, 4), &t), ValidationError);
  p.bias = BiasParams::init(1, 30, 4, 4, 2, 0);
  BiasedAttentionLayer biased(p);
  EXPECT_THROW(biased.forward(Matrix::Zero(6, 4), nullptr), ValidationError);
}

TEST(Layer, BackwardBeforeForwardThrows) {
  LayerParams p;
  p.attention = AttentionParams::init(4, 3, 2, 5);
  BiasedAttentionLayer layer(p);
  EXPECT_THROW(layer.backward(Matrix::Zero(3, 6)), std::logic_error);
}

TEST(Layer, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    for (bool linear : {false, true}) {
      const auto c = gradcheck::make_case(seed, linear);
      const auto r = gradcheck::check(c);
      EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << (linear ? " linear" : " dense") << " worst " << r.worst;
    }
  }
}

TEST(Layer, GradientsWithoutBias) {
  const auto c = gradcheck::make_case(9, false, false);
  EXPECT_LT(gradcheck::check(c).max_rel_error, 1e-4);
}

TEST(Layer, AddScaledAndZerosLike) {
  LayerParams p;
  p.attention = AttentionParams::init(4, 3, 2, 5);
  p.bias = BiasParams::init(2, 5, 4, 4, 2, 6);
  LayerParams q = p;
  q.add_scaled(p, -1.0);
  q.for_each([](const std::string&, const Matrix& m) { EXPECT_EQ(m.cwiseAbs().maxCoeff(), 0.0); });
  std::size_t tensors = 0;
  p.zeros_like().for_each([&](const std::string&, const Matrix& m) {
    ++tensors;
    EXPECT_EQ(m.cwiseAbs().maxCoeff(), 0.0);
  });
  // 3 projections x 2 heads + 2 tables + w1, b1, w2, b2.
  EXPECT_EQ(tensors, 12u);
}

TEST(Params, JsonRoundTrip) {
  LayerParams p;
  p.attention = AttentionParams::init(4, 3, 2, 5);
  p.bias = BiasParams::init(2, 7, 4, 5, 2, 6);
  const LayerParams back = params_from_json(params_to_json(p));
  std::map<std::string, Matrix> a, b;
  p.for_each([&](const std::string& n, const Matrix& m) { a[n] = m; });
  back.for_each([&](const std::string& n, const Matrix& m) { b[n] = m; });
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [n, m] : a) EXPECT_EQ(b.at(n), m) << n;
  EXPECT_EQ(back.bias->clip, 7u);
}

TEST(Params, InitIsSeededAndBounded) {
  const BiasParams a = BiasParams::init(2, 5, 4, 6, 2, 11);
  const BiasParams b = BiasParams::init(2, 5, 4, 6, 2, 11);
  EXPECT_EQ(a.w1, b.w1);
  EXPECT_LE(a.w1.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(8.0));
  EXPECT_LE(a.w2.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(6.0));
  EXPECT_EQ(a.tables[0].rows(), 7);
}
