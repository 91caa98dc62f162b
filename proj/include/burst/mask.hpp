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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "burst/error.hpp"
#include "burst/numerics.hpp"

namespace burst {

enum class MaskKind { full, causal, sliding_window, block_sparse };

// Which (query, key) token pairs take part in attention. Token positions are
// 1-based global ids throughout the public API.
//
// sliding_window(w) is causal with a window: key k is visible to query q iff
// 0 <= q - k < w. block_sparse consults a square 0/1 block matrix; a visible
// block pair means every token of the query block sees every token of the key
// block.
struct MaskSpec {
  MaskKind kind = MaskKind::full;
  std::size_t window = 0;
  std::size_t block_len = 0;
  Matrix block_mask;

  static MaskSpec full() { return {}; }
  static MaskSpec causal() { return {MaskKind::causal, 0, 0, {}}; }
  static MaskSpec sliding_window(std::size_t w) { return {MaskKind::sliding_window, w, 0, {}}; }
  static MaskSpec block_sparse(Matrix mask, std::size_t block_len) {
    return {MaskKind::block_sparse, 0, block_len, std::move(mask)};
  }
  // Block pattern drawn from the seed, diagonal always kept so no row is empty.
  static MaskSpec random_block_sparse(std::size_t n, std::size_t block_len, std::uint64_t seed) {
    detail::require(block_len >= 1 && n % block_len == 0, "block_sparse: block_len must divide N");
    const std::size_t nb = n / block_len;
    Matrix m = seeded_random_matrix(nb, nb, seed);
    for (std::size_t i = 0; i < nb; ++i)
      for (std::size_t j = 0; j < nb; ++j) m(i, j) = (i == j || m(i, j) >= 0.0) ? 1.0 : 0.0;
    return block_sparse(std::move(m), block_len);
  }

  void validate(std::size_t n) const {
    switch (kind) {
      case MaskKind::full:
      case MaskKind::causal:
        return;
      case MaskKind::sliding_window:
        detail::require(window >= 1 && window <= n,
                        "sliding_window: window " + std::to_string(window) +
                            " must satisfy 1 <= w <= N = " + std::to_string(n));
        return;
      case MaskKind::block_sparse: {
        detail::require(block_len >= 1 && n % block_len == 0,
                        "block_sparse: block_len " + std::to_string(block_len) +
                            " must divide N = " + std::to_string(n));
        const std::size_t blocks = n / block_len;
        detail::require(block_mask.rows() == blocks && block_mask.cols() == blocks,
                        "block_sparse: block mask must be " + std::to_string(blocks) + "x" +
                            std::to_string(blocks));
        for (double v : block_mask.data()) {
          detail::require(v == 0.0 || v == 1.0, "block_sparse: entries must be 0 or 1");
        }
        return;
      }
    }
  }

  bool allows(std::size_t q, std::size_t k) const noexcept {
    switch (kind) {
      case MaskKind::full:
        return true;
      case MaskKind::causal:
        return k <= q;
      case MaskKind::sliding_window:
        return k <= q && q - k < window;
      case MaskKind::block_sparse:
        return block_mask((q - 1) / block_len, (k - 1) / block_len) != 0.0;
    }
    return false;
  }

  std::string name() const {
    switch (kind) {
      case MaskKind::full:
        return "full";
      case MaskKind::causal:
        return "causal";
      case MaskKind::sliding_window:
        return "sliding_window(" + std::to_string(window) + ")";
      case MaskKind::block_sparse:
        return "block_sparse(" + std::to_string(block_len) + ")";
    }
    return "?";
  }
};

// Number of visible (query, key) pairs over the whole sequence.
inline std::size_t count_pairs(const MaskSpec& mask, std::size_t n) {
  std::size_t total = 0;
  for (std::size_t q = 1; q <= n; ++q)
    for (std::size_t k = 1; k <= n; ++k) total += mask.allows(q, k) ? 1 : 0;
  return total;
}

}  // namespace burst
