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

// LM head + cross-entropy without the N x v logits. Rows are processed in
// tiles of B_s tokens; for each row tile the vocabulary is streamed in tiles
// of B_v entries to build the logsumexp, then streamed again to form
// softmax - onehot and accumulate dH and dW. Only the current row tile's
// logits (B_s x v) are kept, and they are overwritten in place by their
// gradient.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "burst/error.hpp"
#include "burst/numerics.hpp"
#include "burst/reference.hpp"

namespace burst {

struct FusionConfig {
  std::size_t b_s = 1;  // row tile (tokens)
  std::size_t b_v = 1;  // vocab tile (entries)

  void validate() const {
    detail::require(b_s >= 1, "lm head: row tile B_s must be at least 1");
    detail::require(b_v >= 1, "lm head: vocab tile B_v must be at least 1");
  }
};

struct FusedLossResult {
  Vector loss;  // nats per token
  Matrix dh;    // N x d
  Matrix dw;    // v x d
  std::size_t peak_aux_elements = 0;     // logits tile + dH tile + W tile + row vectors
  std::size_t peak_logits_elements = 0;  // logits tile alone
};

// Upper bound on peak_aux_elements for a given shape.
inline std::size_t fused_aux_bound(std::size_t n, std::size_t v, std::size_t d, const FusionConfig& cfg) {
  const std::size_t bs = std::min(cfg.b_s, n);
  const std::size_t bv = std::min(cfg.b_v, v);
  return bs * v + bs * d + bv * d + 2 * bs;
}

inline FusedLossResult fused_lmhead_loss(const Matrix& h, const Matrix& w_head,
                                         const std::vector<std::size_t>& y, const FusionConfig& cfg) {
  cfg.validate();
  detail::require_shape(h.cols() == w_head.cols(), "lm head: H and W_head widths differ");
  check_targets(y, h.rows(), w_head.rows());
  const std::size_t n = h.rows();
  const std::size_t v = w_head.rows();
  const std::size_t d = h.cols();

  FusedLossResult out{Vector(n), Matrix(n, d), Matrix(v, d)};
  std::vector<double> logits;  // row tile x v, reused across row tiles
  std::vector<double> dh_tile;
  Vector lse;
  Vector target_dot;

  for (std::size_t r0 = 0; r0 < n; r0 += cfg.b_s) {
    const std::size_t r1 = std::min(n, r0 + cfg.b_s);
    const std::size_t rows = r1 - r0;
    logits.assign(rows * v, 0.0);
    dh_tile.assign(rows * d, 0.0);
    lse.assign(rows, kNegInf);
    target_dot.assign(rows, 0.0);
    std::size_t widest_vtile = 0;

    // Forward: stream vocab tiles into the running logsumexp.
    for (std::size_t c0 = 0; c0 < v; c0 += cfg.b_v) {
      const std::size_t c1 = std::min(v, c0 + cfg.b_v);
      widest_vtile = std::max(widest_vtile, c1 - c0);
      for (std::size_t a = 0; a < rows; ++a) {
        double* lrow = logits.data() + a * v;
        for (std::size_t c = c0; c < c1; ++c) {
          double s = 0.0;
          for (std::size_t e = 0; e < d; ++e) s += h(r0 + a, e) * w_head(c, e);
          lrow[c] = s;
        }
        lse[a] = lse_merge(lse[a], logsumexp(std::span<const double>(lrow + c0, c1 - c0)));
      }
    }
    for (std::size_t a = 0; a < rows; ++a) {
      double s = 0.0;
      for (std::size_t e = 0; e < d; ++e) s += h(r0 + a, e) * w_head(y[r0 + a], e);
      target_dot[a] = s;
      out.loss[r0 + a] = -target_dot[a] + lse[a];
    }

    // Backward on the retained logits: softmax minus onehot, then dH and dW.
    for (std::size_t c0 = 0; c0 < v; c0 += cfg.b_v) {
      const std::size_t c1 = std::min(v, c0 + cfg.b_v);
      for (std::size_t a = 0; a < rows; ++a) {
        double* lrow = logits.data() + a * v;
        for (std::size_t c = c0; c < c1; ++c) {
          lrow[c] = std::exp(lrow[c] - lse[a]) - (c == y[r0 + a] ? 1.0 : 0.0);
        }
        for (std::size_t c = c0; c < c1; ++c)
          for (std::size_t e = 0; e < d; ++e) dh_tile[a * d + e] += lrow[c] * w_head(c, e);
      }
      for (std::size_t c = c0; c < c1; ++c) {
        for (std::size_t a = 0; a < rows; ++a) {
          const double g = logits[a * v + c];
          for (std::size_t e = 0; e < d; ++e) out.dw(c, e) += g * h(r0 + a, e);
        }
      }
    }
    for (std::size_t a = 0; a < rows; ++a)
      for (std::size_t e = 0; e < d; ++e) out.dh(r0 + a, e) = dh_tile[a * d + e];

    const std::size_t aux = rows * v + rows * d + widest_vtile * d + lse.size() + target_dot.size();
    out.peak_aux_elements = std::max(out.peak_aux_elements, aux);
    out.peak_logits_elements = std::max(out.peak_logits_elements, rows * v);
  }
  return out;
}

struct MemoryFootprint {
  std::size_t naive_elements = 0;        // full N x v logits
  std::size_t fused_peak_elements = 0;   // one row tile of logits
  std::size_t fused_working_set = 0;     // plus dH tile, W tile and row vectors
};

inline MemoryFootprint memory_footprint(std::size_t n, std::size_t v, std::size_t d,
                                        const FusionConfig& cfg) {
  cfg.validate();
  const std::size_t bs = std::min(cfg.b_s, n);
  return {n * v, bs * v, fused_aux_bound(n, v, d, cfg)};
}

}  // namespace burst
