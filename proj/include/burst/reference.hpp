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

// Single-device, fully materialized attention and LM-head loss. These are the
// ground truth that every distributed and tiled result is compared against,
// so they stay deliberately plain: one query row at a time, per-pair scores.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "burst/error.hpp"
#include "burst/mask.hpp"
#include "burst/numerics.hpp"

namespace burst {

struct AttentionParams {
  std::size_t d = 0;
  Matrix w_q, w_k, w_v, w_attn;

  void validate() const {
    for (const Matrix* w : {&w_q, &w_k, &w_v, &w_attn}) {
      detail::require_shape(w->rows() == d && w->cols() == d,
                            "AttentionParams: weights must be " + std::to_string(d) + "x" +
                                std::to_string(d));
    }
  }

  static AttentionParams random(std::size_t d, std::uint64_t seed) {
    return {d, seeded_random_matrix(d, d, seed), seeded_random_matrix(d, d, seed + 1),
            seeded_random_matrix(d, d, seed + 2), seeded_random_matrix(d, d, seed + 3)};
  }
};

struct Qkv {
  Matrix q, k, v;
};

struct AttentionResult {
  Matrix o;
  Vector lse;
};

struct AttentionGrads {
  Matrix dq, dk, dv;
};

inline Qkv project_qkv(const Matrix& x, const AttentionParams& params) {
  params.validate();
  detail::require_shape(x.cols() == params.d, "project_qkv: X has " + std::to_string(x.cols()) +
                                                  " columns, expected d = " +
                                                  std::to_string(params.d));
  return {matmul(x, params.w_q), matmul(x, params.w_k), matmul(x, params.w_v)};
}

namespace detail {

inline void check_qkv(const Matrix& q, const Matrix& k, const Matrix& v) {
  require_shape(q.cols() == k.cols() && k.cols() == v.cols(), "attention: Q/K/V widths differ");
  require_shape(k.rows() == v.rows(), "attention: K and V row counts differ");
  require_shape(q.cols() > 0, "attention: zero model dimension");
}

// Masked score q_row . k_col / sqrt(d) for 0-based rows, with mask ids 1-based.
inline double masked_score(const Matrix& q, const Matrix& k, const MaskSpec& mask, std::size_t i,
                           std::size_t j, double scale) {
  if (!mask.allows(i + 1, j + 1)) return kNegInf;
  double acc = 0.0;
  for (std::size_t c = 0; c < q.cols(); ++c) acc += q(i, c) * k(j, c);
  return acc * scale;
}

}  // namespace detail

// Attention for query rows [row_begin, row_end) only; `pairs_evaluated`, when
// given, is incremented by the number of visible pairs scored.
inline AttentionResult attention_forward_rows(const Matrix& q, const Matrix& k, const Matrix& v,
                                              const MaskSpec& mask, std::size_t row_begin,
                                              std::size_t row_end,
                                              std::size_t* pairs_evaluated = nullptr) {
  detail::check_qkv(q, k, v);
  detail::require(row_begin <= row_end && row_end <= q.rows(), "attention: bad row range");
  mask.validate(k.rows());
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  AttentionResult out{Matrix(row_end - row_begin, v.cols()), Vector(row_end - row_begin)};
  std::vector<double> scores(k.rows());
  for (std::size_t i = row_begin; i < row_end; ++i) {
    for (std::size_t j = 0; j < k.rows(); ++j) {
      scores[j] = detail::masked_score(q, k, mask, i, j, scale);
      if (pairs_evaluated != nullptr && scores[j] != kNegInf) ++*pairs_evaluated;
    }
    const double lse = logsumexp(scores);
    if (lse == kNegInf) {
      throw NumericalError("attention_forward: query " + std::to_string(i + 1) +
                           " has no visible key");
    }
    out.lse[i - row_begin] = lse;
    auto o_row = out.o.row(i - row_begin);
    for (std::size_t j = 0; j < k.rows(); ++j) {
      if (scores[j] == kNegInf) continue;
      const double p = std::exp(scores[j] - lse);
      for (std::size_t c = 0; c < v.cols(); ++c) o_row[c] += p * v(j, c);
    }
  }
  return out;
}

inline AttentionResult attention_forward(const Matrix& q, const Matrix& k, const Matrix& v,
                                         const MaskSpec& mask) {
  return attention_forward_rows(q, k, v, mask, 0, q.rows());
}

// Y = softmax(Q K^T / sqrt(d)) V W_attn, with Q, K, V projected from X.
inline Matrix attention_layer(const Matrix& x, const AttentionParams& params,
                              const MaskSpec& mask) {
  const Qkv qkv = project_qkv(x, params);
  return matmul(attention_forward(qkv.q, qkv.k, qkv.v, mask).o, params.w_attn);
}

// Gradients of sum(O o dO) for a fixed cotangent dO:
//   dP = dO V^T, D = rowsum(dO o O), dS = P o (dP - D),
//   dQ = dS K / sqrt(d), dK = dS^T Q / sqrt(d), dV = P^T dO.
inline AttentionGrads attention_backward(const Matrix& q, const Matrix& k, const Matrix& v,
                                         const Matrix& o, const Vector& lse, const Matrix& d_o,
                                         const MaskSpec& mask) {
  detail::check_qkv(q, k, v);
  detail::require_shape(o.rows() == q.rows() && o.cols() == v.cols(), "attention_backward: O");
  detail::require_shape(d_o.rows() == o.rows() && d_o.cols() == o.cols(),
                        "attention_backward: dO");
  detail::require_shape(lse.size() == q.rows(), "attention_backward: Lse");
  mask.validate(k.rows());
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  const Vector dsum = rowsum_hadamard(d_o, o);
  AttentionGrads g{Matrix(q.rows(), q.cols()), Matrix(k.rows(), k.cols()),
                   Matrix(v.rows(), v.cols())};
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < k.rows(); ++j) {
      const double s = detail::masked_score(q, k, mask, i, j, scale);
      if (s == kNegInf) continue;
      const double p = std::exp(s - lse[i]);
      double dp = 0.0;
      for (std::size_t c = 0; c < v.cols(); ++c) {
        dp += d_o(i, c) * v(j, c);
        g.dv(j, c) += p * d_o(i, c);
      }
      const double ds = p * (dp - dsum[i]);
      for (std::size_t c = 0; c < q.cols(); ++c) {
        g.dq(i, c) += ds * k(j, c) * scale;
        g.dk(j, c) += ds * q(i, c) * scale;
      }
    }
  }
  return g;
}

struct LmHeadLoss {
  Vector loss;  // nats per token
  Matrix dh;
  Matrix dw;
};

inline void check_targets(const std::vector<std::size_t>& y, std::size_t n, std::size_t vocab) {
  detail::require_shape(y.size() == n, "lm head: target count != N");
  for (std::size_t i = 0; i < y.size(); ++i) {
    detail::require(y[i] < vocab, "lm head: target " + std::to_string(y[i]) + " at row " +
                                      std::to_string(i) + " outside vocabulary of " +
                                      std::to_string(vocab));
  }
}

// Per-token cross-entropy of softmax(H W^T) against Y, plus gradients of the
// summed loss. Materializes the full N x v logits.
inline LmHeadLoss naive_lmhead_loss(const Matrix& h, const Matrix& w_head,
                                    const std::vector<std::size_t>& y) {
  detail::require_shape(h.cols() == w_head.cols(), "lm head: H and W_head widths differ");
  check_targets(y, h.rows(), w_head.rows());
  const Matrix logits = matmul_nt(h, w_head);
  const Vector lse = row_logsumexp(logits);
  LmHeadLoss out{Vector(h.rows()), Matrix(), Matrix()};
  Matrix dlogits(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    out.loss[i] = -logits(i, y[i]) + lse[i];
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      dlogits(i, j) = std::exp(logits(i, j) - lse[i]) - (j == y[i] ? 1.0 : 0.0);
    }
  }
  out.dh = matmul(dlogits, w_head);
  out.dw = matmul_tn(dlogits, h);
  return out;
}

// Central differences of a scalar objective against an analytic gradient.
// Returns the normwise relative error max_ij |fd_ij - g_ij| / max(max_ij |g_ij|, 1e-8).
inline double finite_diff_check(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                const Matrix& analytic_grad, double h) {
  detail::require(h > 0.0, "finite_diff_check: step must be positive");
  detail::require_shape(analytic_grad.rows() == x.rows() && analytic_grad.cols() == x.cols(),
                        "finite_diff_check: gradient shape");
  Matrix probe = x;
  double worst = 0.0;
  double g_max = 0.0;
  for (double g : analytic_grad.data()) g_max = std::max(g_max, std::abs(g));
  for (std::size_t idx = 0; idx < probe.size(); ++idx) {
    const double saved = probe.data()[idx];
    probe.data()[idx] = saved + h;
    const double up = f(probe);
    probe.data()[idx] = saved - h;
    const double down = f(probe);
    probe.data()[idx] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("finite_diff_check: objective is not finite");
    }
    const double fd = (up - down) / (2.0 * h);
    const double g = analytic_grad.data()[idx];
    worst = std::max(worst, std::abs(fd - g));
  }
  return worst / std::max(g_max, 1e-8);
}

}  // namespace burst
