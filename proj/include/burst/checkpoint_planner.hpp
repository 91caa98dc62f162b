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

// Activation checkpointing policies for one attention layer.
//
// Stored inventory per layer: the layer input X (N x d) always; the attention
// output O (N x d) for the rows the policy keeps. Attention probabilities are
// never stored. A row whose O is not stored has its attention recomputed in
// the backward pass.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "burst/error.hpp"
#include "burst/mask.hpp"
#include "burst/numerics.hpp"
#include "burst/reference.hpp"

namespace burst {

enum class CheckpointKind { full_recompute, selective_pp, sequence_selective };

struct CheckpointPolicy {
  CheckpointKind kind = CheckpointKind::full_recompute;
  double split = 0.5;  // sequence_selective: fraction of leading tokens recomputed

  static CheckpointPolicy full() { return {CheckpointKind::full_recompute, 0.0}; }
  static CheckpointPolicy selective() { return {CheckpointKind::selective_pp, 0.0}; }
  static CheckpointPolicy sequence(double s = 0.5) { return {CheckpointKind::sequence_selective, s}; }

  void validate() const {
    if (kind == CheckpointKind::sequence_selective) {
      detail::require(split > 0.0 && split < 1.0,
                      "checkpoint: split fraction must lie strictly between 0 and 1");
    }
  }

  // Number of leading tokens whose attention is recomputed.
  std::size_t boundary(std::size_t n) const {
    validate();
    switch (kind) {
      case CheckpointKind::full_recompute:
        return n;
      case CheckpointKind::selective_pp:
        return 0;
      case CheckpointKind::sequence_selective: {
        const double b = split * static_cast<double>(n);
        const double r = std::round(b);
        detail::require(std::abs(b - r) < 1e-9,
                        "checkpoint: split " + std::to_string(split) + " x N=" + std::to_string(n) +
                            " is not a whole token boundary");
        return static_cast<std::size_t>(r);
      }
    }
    return n;
  }

  std::string name() const {
    switch (kind) {
      case CheckpointKind::full_recompute:
        return "full_recompute";
      case CheckpointKind::selective_pp:
        return "selective_pp";
      case CheckpointKind::sequence_selective:
        return "sequence_selective";
    }
    return "?";
  }
};

struct PlanReport {
  std::size_t stored_elements = 0;           // per layer
  std::size_t attention_extra_elements = 0;  // stored beyond the layer input
  std::size_t recompute_pairs = 0;
  std::size_t total_pairs = 0;
  double recompute_fraction = 0.0;  // recompute_pairs / total_pairs
};

// Visible pairs whose query (1-based) is at most `boundary`.
inline std::size_t count_pairs_upto(const MaskSpec& mask, std::size_t n, std::size_t boundary) {
  std::size_t c = 0;
  for (std::size_t q = 1; q <= boundary; ++q)
    for (std::size_t k = 1; k <= n; ++k) c += mask.allows(q, k) ? 1 : 0;
  return c;
}

inline PlanReport plan(const CheckpointPolicy& policy, std::size_t n, std::size_t d, const MaskSpec& mask) {
  mask.validate(n);
  const std::size_t b = policy.boundary(n);
  PlanReport r;
  r.attention_extra_elements = (n - b) * d;
  r.stored_elements = n * d + r.attention_extra_elements;
  r.total_pairs = count_pairs(mask, n);
  r.recompute_pairs = count_pairs_upto(mask, n, b);
  r.recompute_fraction =
      r.total_pairs == 0 ? 0.0 : static_cast<double>(r.recompute_pairs) / static_cast<double>(r.total_pairs);
  return r;
}

struct ToyReport {
  double max_diff_dq = 0.0;
  double max_diff_dk = 0.0;
  double max_diff_dv = 0.0;
  std::size_t stored_elements = 0;
  std::size_t recomputed_rows = 0;
  std::size_t recompute_pairs = 0;  // measured while recomputing
  std::size_t total_pairs = 0;
  double recompute_fraction = 0.0;

  double max_diff() const { return std::max({max_diff_dq, max_diff_dk, max_diff_dv}); }
};

// One attention layer, run once keeping everything and once keeping only
// what the policy stores, with the missing attention rows recomputed from X.
inline ToyReport execute_toy(const CheckpointPolicy& policy, std::size_t n, std::size_t d,
                             const MaskSpec& mask, std::uint64_t seed) {
  detail::require(n >= 1 && n <= 64, "execute_toy: N must be in [1, 64]");
  detail::require(d >= 1, "execute_toy: d must be positive");
  mask.validate(n);
  const std::size_t b = policy.boundary(n);

  const Matrix x = seeded_random_matrix(n, d, seed);
  const AttentionParams params = AttentionParams::random(d, seed + 10);
  const Matrix d_o = seeded_random_matrix(n, d, seed + 20);

  // Baseline: everything kept from the forward pass.
  const Qkv full = project_qkv(x, params);
  const AttentionResult fwd = attention_forward(full.q, full.k, full.v, mask);
  const AttentionGrads ref = attention_backward(full.q, full.k, full.v, fwd.o, fwd.lse, d_o, mask);

  // Checkpointed: keep X plus O, Lse of rows [b, N).
  Matrix kept_o(n, d);
  Vector kept_lse(n, kNegInf);
  for (std::size_t i = b; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) kept_o(i, c) = fwd.o(i, c);
    kept_lse[i] = fwd.lse[i];
  }

  ToyReport rep;
  rep.stored_elements = x.size() + (n - b) * d;
  rep.recomputed_rows = b;
  rep.total_pairs = count_pairs(mask, n);

  const Qkv re = project_qkv(x, params);
  if (b > 0) {
    const AttentionResult part = attention_forward_rows(re.q, re.k, re.v, mask, 0, b, &rep.recompute_pairs);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t c = 0; c < d; ++c) kept_o(i, c) = part.o(i, c);
      kept_lse[i] = part.lse[i];
    }
  }
  const AttentionGrads got = attention_backward(re.q, re.k, re.v, kept_o, kept_lse, d_o, mask);
  rep.max_diff_dq = max_abs_diff(got.dq, ref.dq);
  rep.max_diff_dk = max_abs_diff(got.dk, ref.dk);
  rep.max_diff_dv = max_abs_diff(got.dv, ref.dv);
  rep.recompute_fraction = rep.total_pairs == 0 ? 0.0
                                                : static_cast<double>(rep.recompute_pairs) /
                                                      static_cast<double>(rep.total_pairs);
  return rep;
}

}  // namespace burst
