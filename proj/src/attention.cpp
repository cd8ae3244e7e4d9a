#include "hdse/attention.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

namespace hdse {

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(fan_in);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + " contains NaN or infinite entries");
}

void row_softmax(Matrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - mx).exp();
    s.row(r) /= s.row(r).sum();
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

BiasParams BiasParams::init(std::size_t levels, std::uint32_t clip, Eigen::Index embed_dim, Eigen::Index hidden,
                            Eigen::Index heads, std::uint64_t seed) {
  if (levels == 0 || embed_dim < 1 || hidden < 1 || heads < 1) {
    throw std::invalid_argument("BiasParams: levels, embed_dim, hidden and heads must be positive");
  }
  if (clip < 1 || clip > HdseTensor::kMaxClip) throw std::invalid_argument("BiasParams: clip must lie in [1, 254]");
  std::mt19937_64 rng(seed);
  BiasParams p;
  p.clip = clip;
  for (std::size_t k = 0; k < levels; ++k) p.tables.push_back(uniform_matrix(clip + 2, embed_dim, 1.0, rng));
  const auto in = static_cast<double>(levels * embed_dim);
  p.w1 = uniform_matrix(static_cast<Eigen::Index>(levels) * embed_dim, hidden, in, rng);
  p.b1 = uniform_matrix(1, hidden, in, rng);
  p.w2 = uniform_matrix(hidden, heads, static_cast<double>(hidden), rng);
  p.b2 = uniform_matrix(1, heads, static_cast<double>(hidden), rng);
  return p;
}

BiasParams BiasParams::zeros_like() const {
  BiasParams z;
  z.clip = clip;
  for (const auto& t : tables) z.tables.push_back(Matrix::Zero(t.rows(), t.cols()));
  z.w1 = Matrix::Zero(w1.rows(), w1.cols());
  z.b1 = Matrix::Zero(b1.rows(), b1.cols());
  z.w2 = Matrix::Zero(w2.rows(), w2.cols());
  z.b2 = Matrix::Zero(b2.rows(), b2.cols());
  return z;
}

void BiasParams::validate() const {
  if (tables.empty()) throw ValidationError("bias parameters need at least one embedding table");
  for (const auto& t : tables) {
    if (t.rows() != static_cast<Eigen::Index>(clip) + 2 || t.cols() != embed_dim()) {
      throw ValidationError("embedding table must be (clip+2) x embed_dim");
    }
    require_finite(t, "embedding table");
  }
  if (w1.rows() != static_cast<Eigen::Index>(levels()) * embed_dim() || b1.rows() != 1 || b1.cols() != hidden() ||
      w2.rows() != hidden() || b2.rows() != 1 || b2.cols() != heads() || heads() < 1) {
    throw ValidationError("bias MLP shapes are inconsistent");
  }
  for (const Matrix* m : {&w1, &b1, &w2, &b2}) require_finite(*m, "bias MLP weight");
}

AttentionParams AttentionParams::init(Eigen::Index model_dim, Eigen::Index head_dim, std::size_t heads,
                                      std::uint64_t seed) {
  if (model_dim < 1 || head_dim < 1 || heads < 1) {
    throw std::invalid_argument("AttentionParams: dimensions and head count must be positive");
  }
  std::mt19937_64 rng(seed);
  AttentionParams p;
  const auto fan_in = static_cast<double>(model_dim);
  for (std::size_t h = 0; h < heads; ++h) {
    p.wq.push_back(uniform_matrix(model_dim, head_dim, fan_in, rng));
    p.wk.push_back(uniform_matrix(model_dim, head_dim, fan_in, rng));
    p.wv.push_back(uniform_matrix(model_dim, head_dim, fan_in, rng));
  }
  return p;
}

AttentionParams AttentionParams::zeros_like() const {
  AttentionParams z;
  for (std::size_t h = 0; h < heads(); ++h) {
    z.wq.push_back(Matrix::Zero(wq[h].rows(), wq[h].cols()));
    z.wk.push_back(Matrix::Zero(wk[h].rows(), wk[h].cols()));
    z.wv.push_back(Matrix::Zero(wv[h].rows(), wv[h].cols()));
  }
  return z;
}

void AttentionParams::validate() const {
  if (wq.empty() || wk.size() != wq.size() || wv.size() != wq.size()) {
    throw ValidationError("attention needs matching W_Q, W_K, W_V per head");
  }
  if (head_dim() < 1) throw ValidationError("head width must be >= 1");
  for (std::size_t h = 0; h < heads(); ++h) {
    for (const Matrix* m : {&wq[h], &wk[h], &wv[h]}) {
      if (m->rows() != model_dim() || m->cols() != head_dim()) throw ValidationError("projection shape mismatch");
      require_finite(*m, "attention projection");
    }
  }
}

LayerParams LayerParams::zeros_like() const {
  LayerParams z;
  z.attention = attention.zeros_like();
  if (bias) z.bias = bias->zeros_like();
  return z;
}

void LayerParams::add_scaled(const LayerParams& other, double scale) {
  std::vector<const Matrix*> theirs;
  other.for_each([&](const std::string&, const Matrix& m) { theirs.push_back(&m); });
  std::size_t idx = 0;
  for_each([&](const std::string& name, Matrix& m) {
    if (idx >= theirs.size() || theirs[idx]->rows() != m.rows() || theirs[idx]->cols() != m.cols()) {
      throw ValidationError("parameter layouts differ at '" + name + "'");
    }
    m += scale * *theirs[idx++];
  });
  if (idx != theirs.size()) throw ValidationError("parameter layouts differ in tensor count");
}

void LayerParams::for_each(const std::function<void(const std::string&, Matrix&)>& fn) {
  for (std::size_t h = 0; h < attention.heads(); ++h) {
    fn("wq." + std::to_string(h), attention.wq[h]);
    fn("wk." + std::to_string(h), attention.wk[h]);
    fn("wv." + std::to_string(h), attention.wv[h]);
  }
  if (bias) {
    for (std::size_t k = 0; k < bias->levels(); ++k) fn("bias.table." + std::to_string(k), bias->tables[k]);
    fn("bias.w1", bias->w1);
    fn("bias.b1", bias->b1);
    fn("bias.w2", bias->w2);
    fn("bias.b2", bias->b2);
  }
}

void LayerParams::for_each(const std::function<void(const std::string&, const Matrix&)>& fn) const {
  const_cast<LayerParams*>(this)->for_each([&](const std::string& name, Matrix& m) { fn(name, m); });
}

// ---------------------------------------------------------------------------
// Bias

namespace detail {

BiasEvaluation evaluate_bias(const HdseTensor& d, const BiasParams& p) {
  p.validate();
  if (d.levels() != p.levels()) {
    throw ValidationError("distance tensor has " + std::to_string(d.levels()) + " levels, bias expects " +
                          std::to_string(p.levels()));
  }
  if (d.clip() != p.clip) {
    throw ValidationError("distance tensor clip " + std::to_string(d.clip()) + " differs from bias clip " +
                          std::to_string(p.clip));
  }
  BiasEvaluation ev;
  ev.rows = d.rows();
  ev.cols = d.cols();
  ev.pair_index.resize(d.rows() * d.cols());
  std::unordered_map<std::string, std::uint32_t> seen;
  const std::size_t levels = d.levels();
  for (std::size_t idx = 0; idx < ev.pair_index.size(); ++idx) {
    const auto* code = d.data().data() + idx * levels;
    std::string key(reinterpret_cast<const char*>(code), levels);
    auto [it, inserted] = seen.emplace(std::move(key), static_cast<std::uint32_t>(ev.codes.size()));
    if (inserted) {
      for (std::size_t k = 0; k < levels; ++k) {
        if (code[k] > p.clip + 1) throw ValidationError("distance code " + std::to_string(code[k]) + " exceeds L+1");
      }
      ev.codes.emplace_back(code, code + levels);
    }
    ev.pair_index[idx] = it->second;
  }

  const Eigen::Index unique = static_cast<Eigen::Index>(ev.codes.size());
  const Eigen::Index de = p.embed_dim();
  ev.z0.resize(unique, static_cast<Eigen::Index>(levels) * de);
  for (Eigen::Index u = 0; u < unique; ++u) {
    for (std::size_t k = 0; k < levels; ++k) {
      ev.z0.block(u, static_cast<Eigen::Index>(k) * de, 1, de) = p.tables[k].row(ev.codes[u][k]);
    }
  }
  ev.a1 = (ev.z0 * p.w1).rowwise() + p.b1.row(0);
  ev.hidden = ev.a1.cwiseMax(0.0);
  ev.out = (ev.hidden * p.w2).rowwise() + p.b2.row(0);
  return ev;
}

BiasTensor BiasEvaluation::expand() const {
  BiasTensor h(static_cast<std::size_t>(out.cols()),
               Matrix(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const auto u = pair_index[i * cols + j];
      for (std::size_t head = 0; head < h.size(); ++head) {
        h[head](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = out(u, static_cast<Eigen::Index>(head));
      }
    }
  }
  return h;
}

}  // namespace detail

BiasTensor bias_matrix(const HdseTensor& d, const BiasParams& p) { return detail::evaluate_bias(d, p).expand(); }

// ---------------------------------------------------------------------------
// Forward

namespace {

void check_shapes(const Matrix& x, const Matrix& xkv, const AttentionParams& p, const BiasTensor& h) {
  p.validate();
  require_finite(x, "query features");
  require_finite(xkv, "key/value features");
  if (x.cols() != p.model_dim() || xkv.cols() != p.model_dim()) {
    throw ValidationError("feature width " + std::to_string(x.cols()) + " does not match model width " +
                          std::to_string(p.model_dim()));
  }
  if (!h.empty()) {
    if (h.size() != p.heads()) throw ValidationError("bias has a different head count than the attention");
    for (const auto& m : h) {
      if (m.rows() != x.rows() || m.cols() != xkv.rows()) throw ValidationError("bias matrix shape mismatch");
      require_finite(m, "bias matrix");
    }
  }
}

}  // namespace

Matrix attention_weights(const Matrix& x, const Matrix& xkv, const AttentionParams& p, std::size_t head,
                         const Matrix* h) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.head_dim()));
  Matrix s = (x * p.wq[head]) * (xkv * p.wk[head]).transpose() * scale;
  if (h != nullptr) s += *h;
  row_softmax(s);
  return s;
}

Matrix linear_attention_forward(const Matrix& x, const Matrix& xk, const AttentionParams& p, const BiasTensor& hk) {
  check_shapes(x, xk, p, hk);
  const Eigen::Index dh = p.head_dim();
  Matrix out(x.rows(), dh * static_cast<Eigen::Index>(p.heads()));
  for (std::size_t head = 0; head < p.heads(); ++head) {
    const Matrix a = attention_weights(x, xk, p, head, hk.empty() ? nullptr : &hk[head]);
    out.middleCols(static_cast<Eigen::Index>(head) * dh, dh) = a * (xk * p.wv[head]);
  }
  return out;
}

Matrix hdse_attention_forward(const Matrix& x, const AttentionParams& p, const BiasTensor& h) {
  return linear_attention_forward(x, x, p, h);
}

// ---------------------------------------------------------------------------
// Layer

BiasedAttentionLayer::BiasedAttentionLayer(LayerParams params) : params_(std::move(params)) {
  params_.attention.validate();
  if (params_.bias) {
    params_.bias->validate();
    if (params_.bias->heads() != static_cast<Eigen::Index>(params_.attention.heads())) {
      throw ValidationError("bias MLP output width must equal the head count");
    }
  }
}

Matrix BiasedAttentionLayer::forward(const Matrix& x, const HdseTensor* d) { return run(x, x, d); }

Matrix BiasedAttentionLayer::forward_linear(const Matrix& x, const Matrix& xk, const HdseTensor* dc) {
  return run(x, xk, dc);
}

Matrix BiasedAttentionLayer::run(const Matrix& x, const Matrix& xkv, const HdseTensor* d) {
  cache_.reset();
  if ((d != nullptr) != params_.bias.has_value()) {
    throw ValidationError(d ? "distance tensor given to a layer without bias parameters"
                            : "layer with bias parameters needs a distance tensor");
  }
  Cache c;
  c.x = x;
  c.xkv = xkv;
  BiasTensor h;
  if (d != nullptr) {
    c.bias = detail::evaluate_bias(*d, *params_.bias);
    h = c.bias->expand();
  }
  const AttentionParams& p = params_.attention;
  check_shapes(x, xkv, p, h);

  const double scale = 1.0 / std::sqrt(static_cast<double>(p.head_dim()));
  const Eigen::Index dh = p.head_dim();
  Matrix out(x.rows(), dh * static_cast<Eigen::Index>(p.heads()));
  for (std::size_t head = 0; head < p.heads(); ++head) {
    HeadCache hc;
    hc.q = x * p.wq[head];
    hc.k = xkv * p.wk[head];
    hc.v = xkv * p.wv[head];
    hc.attn = hc.q * hc.k.transpose() * scale;
    if (!h.empty()) hc.attn += h[head];
    row_softmax(hc.attn);
    out.middleCols(static_cast<Eigen::Index>(head) * dh, dh) = hc.attn * hc.v;
    c.heads.push_back(std::move(hc));
  }
  cache_ = std::move(c);
  return out;
}

Gradients BiasedAttentionLayer::backward(const Matrix& d_out) const {
  if (!cache_) throw std::logic_error("backward called before forward");
  const Cache& c = *cache_;
  const AttentionParams& p = params_.attention;
  const Eigen::Index dh = p.head_dim();
  if (d_out.rows() != c.x.rows() || d_out.cols() != dh * static_cast<Eigen::Index>(p.heads())) {
    throw ValidationError("upstream gradient shape does not match the layer output");
  }
  Gradients g = params_.zeros_like();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix d_bias_unique;
  if (c.bias) d_bias_unique = Matrix::Zero(c.bias->out.rows(), c.bias->out.cols());

  for (std::size_t head = 0; head < p.heads(); ++head) {
    const HeadCache& hc = c.heads[head];
    const Matrix d_o = d_out.middleCols(static_cast<Eigen::Index>(head) * dh, dh);
    const Matrix d_attn = d_o * hc.v.transpose();
    const Matrix d_v = hc.attn.transpose() * d_o;
    // Softmax Jacobian, row by row: dS = A .* (dA - rowsum(dA .* A)).
    const Eigen::VectorXd row_dot = (d_attn.array() * hc.attn.array()).rowwise().sum();
    const Matrix d_scores = (hc.attn.array() * (d_attn.colwise() - row_dot).array()).matrix();
    const Matrix d_q = d_scores * hc.k * scale;
    const Matrix d_k = d_scores.transpose() * hc.q * scale;
    g.attention.wq[head] = c.x.transpose() * d_q;
    g.attention.wk[head] = c.xkv.transpose() * d_k;
    g.attention.wv[head] = c.xkv.transpose() * d_v;

    if (c.bias) {
      for (std::size_t i = 0; i < c.bias->rows; ++i) {
        for (std::size_t j = 0; j < c.bias->cols; ++j) {
          d_bias_unique(c.bias->pair_index[i * c.bias->cols + j], static_cast<Eigen::Index>(head)) +=
              d_scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
      }
    }
  }

  if (c.bias) {
    const BiasParams& bp = *params_.bias;
    const detail::BiasEvaluation& ev = *c.bias;
    BiasParams& gb = *g.bias;
    gb.w2 = ev.hidden.transpose() * d_bias_unique;
    gb.b2 = d_bias_unique.colwise().sum();
    const Matrix d_hidden = d_bias_unique * bp.w2.transpose();
    const Matrix d_a1 = (ev.a1.array() > 0.0).cast<double>().matrix().cwiseProduct(d_hidden);
    gb.w1 = ev.z0.transpose() * d_a1;
    gb.b1 = d_a1.colwise().sum();
    const Matrix d_z0 = d_a1 * bp.w1.transpose();
    const Eigen::Index de = bp.embed_dim();
    for (std::size_t u = 0; u < ev.codes.size(); ++u) {
      for (std::size_t k = 0; k < bp.levels(); ++k) {
        gb.tables[k].row(ev.codes[u][k]) +=
            d_z0.block(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(k) * de, 1, de);
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["shape"] = {m.rows(), m.cols()};
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  j["data"] = std::move(data);
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("shape").at(0).get<Eigen::Index>();
  const auto cols = j.at("shape").at(1).get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw ParseError("tensor data does not match its shape");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

nlohmann::json params_to_json(const LayerParams& p) {
  nlohmann::json j;
  j["heads"] = p.attention.heads();
  j["clip"] = p.bias ? nlohmann::json(p.bias->clip) : nlohmann::json(nullptr);
  j["levels"] = p.bias ? p.bias->levels() : 0;
  auto tensors = nlohmann::json::array();
  p.for_each([&](const std::string& name, const Matrix& m) {
    auto t = matrix_to_json(m);
    t["name"] = name;
    tensors.push_back(std::move(t));
  });
  j["tensors"] = std::move(tensors);
  return j;
}

LayerParams params_from_json(const nlohmann::json& j) {
  try {
    const auto heads = j.at("heads").get<std::size_t>();
    const auto levels = j.at("levels").get<std::size_t>();
    std::unordered_map<std::string, Matrix> by_name;
    for (const auto& t : j.at("tensors")) by_name.emplace(t.at("name").get<std::string>(), matrix_from_json(t));
    auto take = [&](const std::string& name) {
      auto it = by_name.find(name);
      if (it == by_name.end()) throw ParseError("checkpoint lacks tensor '" + name + "'");
      return it->second;
    };
    LayerParams p;
    for (std::size_t h = 0; h < heads; ++h) {
      p.attention.wq.push_back(take("wq." + std::to_string(h)));
      p.attention.wk.push_back(take("wk." + std::to_string(h)));
      p.attention.wv.push_back(take("wv." + std::to_string(h)));
    }
    if (levels > 0) {
      BiasParams b;
      b.clip = j.at("clip").get<std::uint32_t>();
      for (std::size_t k = 0; k < levels; ++k) b.tables.push_back(take("bias.table." + std::to_string(k)));
      b.w1 = take("bias.w1");
      b.b1 = take("bias.b1");
      b.w2 = take("bias.w2");
      b.b2 = take("bias.b2");
      p.bias = std::move(b);
    }
    p.attention.validate();
    if (p.bias) p.bias->validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint JSON: ") + e.what());
  }
}

}  // namespace hdse
