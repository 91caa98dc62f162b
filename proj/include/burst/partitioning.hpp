/*
Copyright 2026 The BurstSim Authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

// Token-to-device layouts and exact workload accounting for masked attention.
// Devices and token ids are 1-based in this API; local positions inside a
// shard are 1-based too (LocalPair), while LocalMask is a 0-based grid for the
// numeric kernels.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include "burst/error.hpp"
#include "burst/mask.hpp"
#include "burst/numerics.hpp"

namespace burst {

enum class LayoutKind { contiguous, zigzag, striped, block_striped };

inline std::string to_string(LayoutKind k) {
  switch (k) {
    case LayoutKind::contiguous:
      return "contiguous";
    case LayoutKind::zigzag:
      return "zigzag";
    case LayoutKind::striped:
      return "striped";
    case LayoutKind::block_striped:
      return "block_striped";
  }
  return "?";
}

struct ShardLayout {
  LayoutKind kind = LayoutKind::contiguous;
  std::size_t n = 0;          // tokens
  std::size_t g = 1;          // devices
  std::size_t block_len = 0;  // block_striped only

  void validate() const {
    detail::require(g >= 1, "layout: need at least one device");
    detail::require(n >= 1, "layout: empty sequence");
    const std::string where = to_string(kind) + " layout (N=" + std::to_string(n) +
                              ", G=" + std::to_string(g) + ")";
    switch (kind) {
      case LayoutKind::contiguous:
      case LayoutKind::striped:
        detail::require(n % g == 0, where + ": G must divide N");
        return;
      case LayoutKind::zigzag:
        detail::require(n % (2 * g) == 0, where + ": 2G must divide N");
        return;
      case LayoutKind::block_striped:
        detail::require(block_len >= 1 && block_len % g == 0,
                        where + ": block_len " + std::to_string(block_len) +
                            " must be a positive multiple of G");
        detail::require(n % block_len == 0, where + ": block_len must divide N");
        return;
    }
  }

  std::size_t shard_len() const { return n / g; }
};

struct Shard {
  std::size_t device = 0;              // 1-based
  std::vector<std::size_t> token_ids;  // 1-based, strictly increasing
};

inline std::vector<Shard> make_layout(const ShardLayout& layout) {
  layout.validate();
  const std::size_t n = layout.n;
  const std::size_t g = layout.g;
  std::vector<Shard> shards(g);
  for (std::size_t i = 1; i <= g; ++i) shards[i - 1].device = i;

  switch (layout.kind) {
    case LayoutKind::contiguous: {
      const std::size_t p = n / g;
      for (std::size_t i = 1; i <= g; ++i)
        for (std::size_t t = (i - 1) * p + 1; t <= i * p; ++t) shards[i - 1].token_ids.push_back(t);
      break;
    }
    case LayoutKind::zigzag: {
      // One front chunk and its mirror image from the back.
      const std::size_t p = n / (2 * g);
      for (std::size_t i = 1; i <= g; ++i) {
        auto& ids = shards[i - 1].token_ids;
        for (std::size_t t = (i - 1) * p + 1; t <= i * p; ++t) ids.push_back(t);
        for (std::size_t t = n - i * p + 1; t <= n - (i - 1) * p; ++t) ids.push_back(t);
      }
      break;
    }
    case LayoutKind::striped: {
      const std::size_t p = n / g;
      for (std::size_t i = 1; i <= g; ++i)
        for (std::size_t m = 0; m < p; ++m) shards[i - 1].token_ids.push_back(i + g * m);
      break;
    }
    case LayoutKind::block_striped: {
      for (std::size_t t = 1; t <= n; ++t) {
        const std::size_t offset = (t - 1) % layout.block_len;
        shards[offset % g].token_ids.push_back(t);
      }
      break;
    }
  }
  return shards;
}

struct LocalPair {
  std::size_t q = 0;  // 1-based position within the query shard
  std::size_t k = 0;  // 1-based position within the key shard
  auto operator<=>(const LocalPair&) const = default;
};

// Dense visibility grid between a query shard and a key shard, 0-based.
struct LocalMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<char> visible;
  std::size_t pairs = 0;

  bool operator()(std::size_t r, std::size_t c) const noexcept { return visible[r * cols + c]; }
  std::vector<bool> row_has_key() const {
    std::vector<bool> out(rows, false);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out[r] = out[r] || (*this)(r, c);
    return out;
  }
};

namespace detail {

// Whether local query a (of device i) sees local key b (of device j), all
// 1-based. Causal masks on zigzag and striped layouts use the closed-form
// shard rules; everything else is decided from the global token ids.
inline bool local_visible(const ShardLayout& layout, const std::vector<Shard>& shards,
                          const MaskSpec& mask, std::size_t i, std::size_t j, std::size_t a,
                          std::size_t b) {
  if (mask.kind == MaskKind::causal && layout.kind == LayoutKind::zigzag) {
    const std::size_t p = layout.n / (2 * layout.g);
    if (i == j) return a >= b;  // causal over the concatenated front/back chunks
    if (i < j) return a > p;    // back queries see the whole remote shard
    return b <= p;              // every query sees the remote front chunk
  }
  if (mask.kind == MaskKind::causal && layout.kind == LayoutKind::striped) {
    // For i < j the query shard drops its first row and the key shard its
    // last row before causal attention, which shifts the diagonal by one.
    return i >= j ? a >= b : a > b;
  }
  return mask.allows(shards[i - 1].token_ids[a - 1], shards[j - 1].token_ids[b - 1]);
}

}  // namespace detail

inline LocalMask local_mask(const ShardLayout& layout, const std::vector<Shard>& shards,
                            const MaskSpec& mask, std::size_t i, std::size_t j) {
  detail::require(i >= 1 && i <= layout.g && j >= 1 && j <= layout.g,
                  "local_mask: device index out of range");
  LocalMask m;
  m.rows = shards[i - 1].token_ids.size();
  m.cols = shards[j - 1].token_ids.size();
  m.visible.assign(m.rows * m.cols, 0);
  for (std::size_t a = 1; a <= m.rows; ++a) {
    for (std::size_t b = 1; b <= m.cols; ++b) {
      if (detail::local_visible(layout, shards, mask, i, j, a, b)) {
        m.visible[(a - 1) * m.cols + (b - 1)] = 1;
        ++m.pairs;
      }
    }
  }
  return m;
}

inline std::vector<LocalPair> local_pair_set(const ShardLayout& layout, const MaskSpec& mask,
                                             std::size_t i, std::size_t j) {
  mask.validate(layout.n);
  const auto shards = make_layout(layout);
  const LocalMask m = local_mask(layout, shards, mask, i, j);
  std::vector<LocalPair> out;
  out.reserve(m.pairs);
  for (std::size_t a = 0; a < m.rows; ++a)
    for (std::size_t b = 0; b < m.cols; ++b)
      if (m(a, b)) out.push_back({a + 1, b + 1});
  return out;
}

// Key shard that device i (1-based) works on at ring step s (0-based) on a
// flat ring: its own shard first, then its predecessors in turn.
inline std::size_t ring_source(std::size_t i, std::size_t s, std::size_t g) {
  return (i - 1 + g - (s % g)) % g + 1;
}

struct WorkloadReport {
  std::vector<std::size_t> per_device_pairs;               // [device - 1]
  std::vector<std::vector<std::size_t>> per_step_pairs;    // [device - 1][step]
  std::size_t total_pairs = 0;

  std::size_t device_spread() const;
  std::size_t max_step_spread() const;
};

inline std::size_t WorkloadReport::device_spread() const {
  std::size_t lo = per_device_pairs.front();
  std::size_t hi = lo;
  for (std::size_t v : per_device_pairs) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

inline std::size_t WorkloadReport::max_step_spread() const {
  std::size_t worst = 0;
  const std::size_t steps = per_step_pairs.front().size();
  for (std::size_t s = 0; s < steps; ++s) {
    std::size_t lo = per_step_pairs.front()[s];
    std::size_t hi = lo;
    for (const auto& dev : per_step_pairs) {
      lo = std::min(lo, dev[s]);
      hi = std::max(hi, dev[s]);
    }
    worst = std::max(worst, hi - lo);
  }
  return worst;
}

// Visible-pair counts per device and per flat-ring step (see ring_source).
inline WorkloadReport balance_report(const ShardLayout& layout, const MaskSpec& mask) {
  layout.validate();
  mask.validate(layout.n);
  const auto shards = make_layout(layout);
  const std::size_t g = layout.g;
  WorkloadReport r;
  r.per_device_pairs.assign(g, 0);
  r.per_step_pairs.assign(g, std::vector<std::size_t>(g, 0));
  for (std::size_t i = 1; i <= g; ++i) {
    for (std::size_t s = 0; s < g; ++s) {
      const std::size_t pairs = local_mask(layout, shards, mask, i, ring_source(i, s, g)).pairs;
      r.per_step_pairs[i - 1][s] = pairs;
      r.per_device_pairs[i - 1] += pairs;
      r.total_pairs += pairs;
    }
  }
  return r;
}

// Block-granular causal sliding window: block row i sees block column j iff
// 0 <= i - j < w / block_len.
inline MaskSpec block_mask_from_window(std::size_t n, std::size_t block_len, std::size_t w) {
  detail::require(block_len >= 1 && n % block_len == 0,
                  "block_mask_from_window: block_len must divide N");
  detail::require(w >= block_len && w <= n && w % block_len == 0,
                  "block_mask_from_window: window must be a whole number of blocks in [block_len, N]");
  const std::size_t blocks = n / block_len;
  const std::size_t width = w / block_len;
  Matrix m(blocks, blocks);
  for (std::size_t i = 0; i < blocks; ++i)
    for (std::size_t j = 0; j <= i; ++j) m(i, j) = (i - j < width) ? 1.0 : 0.0;
  return MaskSpec::block_sparse(std::move(m), block_len);
}

}  // namespace burst
