/*
 * distance.hpp
 *
 * Shortest-path and hierarchy distances.
 *
 * GHD^k(u, v) is the hop distance in level-k graph G^k between the level-k
 * clusters containing base nodes u and v; GHD^0 is plain SPD. Stacking
 * GHD^0..GHD^K, clipped at L, gives the per-pair HDSE vector. Pairs that are
 * disconnected at a level get the dedicated code L+1 instead of being
 * clipped to L, so "far" and "unreachable" stay distinguishable downstream.
 *
 * The high-level variant measures from every base node to every level-c
 * cluster, one slice per level c..K, which is what attention over coarse
 * clusters needs.
 */
#pragma once

#include <cstdint>
#include <algorithm>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hdse/coarsening.hpp"
#include "hdse/graph.hpp"

namespace hdse {

using HopCount = std::uint32_t;
inline constexpr HopCount kUnreachable = std::numeric_limits<HopCount>::max();

class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t n, std::size_t level) : n_(n), level_(level), values_(n * n, kUnreachable) {}

  std::size_t size() const noexcept { return n_; }
  std::size_t level() const noexcept { return level_; }
  HopCount operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  HopCount& operator()(std::size_t i, std::size_t j) { return values_[i * n_ + j]; }
  const std::vector<HopCount>& values() const noexcept { return values_; }

  friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;

 private:
  std::size_t n_{0};
  std::size_t level_{0};
  std::vector<HopCount> values_;
};

// BFS from every node. Sources are split across `threads` workers; each
// worker writes disjoint rows, so the result does not depend on scheduling.
DistanceMatrix spd_all_pairs(const Graph& g, unsigned threads = 1);

// k-level hierarchy distance over base-node pairs, 0 <= k <= K.
DistanceMatrix ghd(const Hierarchy& h, std::size_t k, unsigned threads = 1);

/*
 * Dense rows x cols x levels tensor of 8-bit distance codes, row-major in
 * (i, j, level). Codes 0..clip are clipped hop counts, clip+1 marks an
 * unreachable pair.
 */
class HdseTensor {
 public:
  static constexpr std::uint32_t kMaxClip = 254;

  HdseTensor() = default;
  HdseTensor(std::size_t rows, std::size_t cols, std::size_t levels, std::uint32_t clip, std::size_t base_level = 0);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t levels() const noexcept { return levels_; }
  std::uint32_t clip() const noexcept { return clip_; }
  std::size_t base_level() const noexcept { return base_level_; }
  std::uint8_t unreachable_code() const noexcept { return static_cast<std::uint8_t>(clip_ + 1); }

  std::uint8_t operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * cols_ + j) * levels_ + k];
  }
  std::uint8_t& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * cols_ + j) * levels_ + k]; }
  // All level codes of pair (i, j), contiguous.
  const std::uint8_t* pair(std::size_t i, std::size_t j) const { return data_.data() + (i * cols_ + j) * levels_; }

  const std::vector<std::uint8_t>& data() const noexcept { return data_; }
  std::vector<std::uint8_t>& data() noexcept { return data_; }

  std::uint8_t encode(HopCount d) const {
    return d == kUnreachable ? unreachable_code() : static_cast<std::uint8_t>(std::min<HopCount>(d, clip_));
  }

  friend bool operator==(const HdseTensor&, const HdseTensor&) = default;

 private:
  std::size_t rows_{0};
  std::size_t cols_{0};
  std::size_t levels_{0};
  std::uint32_t clip_{0};
  std::size_t base_level_{0};
  std::vector<std::uint8_t> data_;
};

// n x n x (K+1) tensor; slice k is clip(GHD^k). Requires 1 <= clip <= 254.
HdseTensor hdse(const Hierarchy& h, std::uint32_t clip, unsigned threads = 1);

// |V^0| x |V^c| x (K+1-c) tensor for 1 <= c <= K. Entry (i, j, m) is the
// level-(c+m) distance between the images of base node i and of level-c
// cluster j.
HdseTensor high_level_hdse(const Hierarchy& h, std::size_t base_level, std::uint32_t clip, unsigned threads = 1);

/*
 * Binary layout, little-endian, 16-byte header:
 *   0  "HDSE"       magic
 *   4  u16 version  (kTensorFormatVersion)
 *   6  u32 rows
 *  10  u32 cols
 *  14  u8  levels
 *  15  u8  clip
 * followed by rows*cols*levels u8 codes in (i, j, level) order.
 */
inline constexpr std::uint16_t kTensorFormatVersion = 1;

std::vector<std::uint8_t> encode_tensor(const HdseTensor& t);
HdseTensor decode_tensor(std::span<const std::uint8_t> bytes);
void write_tensor_file(const std::string& path, const HdseTensor& t);
HdseTensor read_tensor_file(const std::string& path);

nlohmann::json tensor_to_json(const HdseTensor& t);

}  // namespace hdse
