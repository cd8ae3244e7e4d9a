#include "hdse/distance.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace hdse {

namespace {

void bfs_rows(const Graph& g, NodeId first, NodeId last, DistanceMatrix& out) {
  std::vector<NodeId> queue;
  queue.reserve(g.num_nodes());
  for (NodeId s = first; s < last; ++s) {
    queue.clear();
    out(s, s) = 0;
    queue.push_back(s);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const NodeId v = queue[head];
      const HopCount dv = out(s, v);
      for (NodeId w : g.neighbors(v)) {
        if (out(s, w) == kUnreachable) {
          out(s, w) = dv + 1;
          queue.push_back(w);
        }
      }
    }
  }
}

}  // namespace

DistanceMatrix spd_all_pairs(const Graph& g, unsigned threads) {
  const NodeId n = g.num_nodes();
  DistanceMatrix d(n, 0);
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, n == 0 ? 1 : n));
  if (workers == 1) {
    bfs_rows(g, 0, n, d);
    return d;
  }
  const NodeId chunk = (n + workers - 1) / workers;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      const NodeId first = std::min<NodeId>(n, w * chunk);
      const NodeId last = std::min<NodeId>(n, first + chunk);
      pool.emplace_back([&g, &d, first, last] { bfs_rows(g, first, last, d); });
    }
  }
  return d;
}

namespace {

DistanceMatrix lift_to_base(const DistanceMatrix& coarse, const std::vector<ClusterId>& image, std::size_t level) {
  const std::size_t n = image.size();
  DistanceMatrix out(n, level);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out(i, j) = coarse(image[i], image[j]);
  }
  return out;
}

void check_clip(std::uint32_t clip) {
  if (clip < 1 || clip > HdseTensor::kMaxClip) {
    throw std::invalid_argument("clip length must lie in [1, 254], got " + std::to_string(clip));
  }
}

}  // namespace

DistanceMatrix ghd(const Hierarchy& h, std::size_t k, unsigned threads) {
  if (k > h.max_level()) {
    throw std::out_of_range("ghd: level " + std::to_string(k) + " exceeds K=" + std::to_string(h.max_level()));
  }
  const DistanceMatrix coarse = spd_all_pairs(h.levels[k], threads);
  if (k == 0) return coarse;
  return lift_to_base(coarse, h.base_assignment(k), k);
}

HdseTensor::HdseTensor(std::size_t rows, std::size_t cols, std::size_t levels, std::uint32_t clip,
                       std::size_t base_level)
    : rows_(rows), cols_(cols), levels_(levels), clip_(clip), base_level_(base_level),
      data_(rows * cols * levels, 0) {
  check_clip(clip);
}

HdseTensor hdse(const Hierarchy& h, std::uint32_t clip, unsigned threads) {
  check_clip(clip);
  const std::size_t n = h.levels[0].num_nodes();
  const std::size_t levels = h.max_level() + 1;
  HdseTensor t(n, n, levels, clip);
  for (std::size_t k = 0; k < levels; ++k) {
    const DistanceMatrix coarse = spd_all_pairs(h.levels[k], threads);
    const auto image = h.base_assignment(k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) t(i, j, k) = t.encode(coarse(image[i], image[j]));
    }
  }
  return t;
}

HdseTensor high_level_hdse(const Hierarchy& h, std::size_t base_level, std::uint32_t clip, unsigned threads) {
  check_clip(clip);
  const std::size_t big_k = h.max_level();
  if (base_level < 1 || base_level > big_k) {
    throw std::out_of_range("high_level_hdse: base level " + std::to_string(base_level) + " outside [1, " +
                            std::to_string(big_k) + "]");
  }
  const std::size_t n = h.levels[0].num_nodes();
  const std::size_t m = h.levels[base_level].num_nodes();
  const std::size_t slices = big_k + 1 - base_level;
  HdseTensor t(n, m, slices, clip, base_level);
  for (std::size_t s = 0; s < slices; ++s) {
    const std::size_t level = base_level + s;
    const DistanceMatrix coarse = spd_all_pairs(h.levels[level], threads);
    const auto node_image = h.base_assignment(level);
    const auto cluster_image = h.lift(base_level, level);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) t(i, j, s) = t.encode(coarse(node_image[i], cluster_image[j]));
    }
  }
  return t;
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<std::uint8_t>(value >> (8 * b)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) value |= static_cast<T>(static_cast<T>(bytes[offset + b]) << (8 * b));
  return value;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const HdseTensor& t) {
  if (t.levels() > 255) throw std::invalid_argument("tensor has more than 255 levels");
  std::vector<std::uint8_t> out;
  out.reserve(16 + t.data().size());
  for (char c : {'H', 'D', 'S', 'E'}) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint16_t>(out, kTensorFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols()));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.levels()));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.clip()));
  out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

HdseTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "HDSE", 4) != 0) {
    throw ParseError("not an HDSE tensor file (bad magic or short header)");
  }
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kTensorFormatVersion) throw ParseError("unsupported tensor format version " + std::to_string(version));
  const auto rows = get_le<std::uint32_t>(bytes, 6);
  const auto cols = get_le<std::uint32_t>(bytes, 10);
  const auto levels = bytes[14];
  const auto clip = bytes[15];
  const std::size_t payload = static_cast<std::size_t>(rows) * cols * levels;
  if (bytes.size() != 16 + payload) throw ParseError("tensor payload size does not match header");
  HdseTensor t(rows, cols, levels, clip);
  if (payload > 0) std::memcpy(t.data().data(), bytes.data() + 16, payload);
  for (std::uint8_t code : t.data()) {
    if (code > t.unreachable_code()) throw ValidationError("tensor code exceeds clip+1");
  }
  return t;
}

void write_tensor_file(const std::string& path, const HdseTensor& t) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

HdseTensor read_tensor_file(const std::string& path) {
  const std::string text = read_file(path);
  return decode_tensor(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

nlohmann::json tensor_to_json(const HdseTensor& t) {
  nlohmann::json j;
  j["rows"] = t.rows();
  j["cols"] = t.cols();
  j["levels"] = t.levels();
  j["clip"] = t.clip();
  j["base_level"] = t.base_level();
  j["unreachable_code"] = t.unreachable_code();
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t jx = 0; jx < t.cols(); ++jx) {
      row.push_back(std::vector<int>(t.pair(i, jx), t.pair(i, jx) + t.levels()));
    }
    rows.push_back(std::move(row));
  }
  j["codes"] = std::move(rows);
  return j;
}

}  // namespace hdse
