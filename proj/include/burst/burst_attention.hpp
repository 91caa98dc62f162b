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

// Distributed attention over a simulated ring. Each device owns one shard of
// Q, K, V (rows picked by the layout); payloads physically move between device
// slots along a RingPlan and every hop is counted in a MessageLog.
//
// Ring position p holds layout device p + 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "burst/error.hpp"
#include "burst/mask.hpp"
#include "burst/numerics.hpp"
#include "burst/partitioning.hpp"
#include "burst/reference.hpp"
#include "burst/ring_fabric.hpp"

namespace burst {

struct Cluster {
  ShardLayout layout;
  MaskSpec mask;
  RingPlan plan;
  std::vector<Shard> shards;
  std::vector<std::vector<LocalMask>> masks;  // [query pos][key pos]
  std::size_t threads = 1;

  std::size_t devices() const noexcept { return layout.g; }
  const LocalMask& local(std::size_t query_pos, std::size_t key_pos) const {
    return masks[query_pos][key_pos];
  }
};

inline Cluster make_cluster(const ShardLayout& layout, const MaskSpec& mask, const Topology& topology,
                            RingKind ring = RingKind::flat, std::size_t threads = 1) {
  layout.validate();
  mask.validate(layout.n);
  detail::require(topology.devices() == layout.g,
                  "cluster: topology has " + std::to_string(topology.devices()) +
                      " devices but the layout has " + std::to_string(layout.g));
  Cluster c;
  c.layout = layout;
  c.mask = mask;
  c.plan = build_ring(ring, topology);
  c.shards = make_layout(layout);
  c.threads = std::max<std::size_t>(threads, 1);
  c.masks.resize(layout.g);
  for (std::size_t i = 0; i < layout.g; ++i) {
    for (std::size_t j = 0; j < layout.g; ++j) {
      c.masks[i].push_back(local_mask(layout, c.shards, mask, i + 1, j + 1));
    }
  }
  // Every query must see some key somewhere on the ring.
  for (std::size_t i = 0; i < layout.g; ++i) {
    std::vector<bool> seen(c.shards[i].token_ids.size(), false);
    for (std::size_t j = 0; j < layout.g; ++j) {
      const auto has = c.masks[i][j].row_has_key();
      for (std::size_t a = 0; a < seen.size(); ++a) seen[a] = seen[a] || has[a];
    }
    for (std::size_t a = 0; a < seen.size(); ++a) {
      if (!seen[a]) {
        throw NumericalError("distributed attention: query " +
                             std::to_string(c.shards[i].token_ids[a]) + " has no visible key");
      }
    }
  }
  return c;
}

inline Cluster make_cluster(const ShardLayout& layout, const MaskSpec& mask) {
  return make_cluster(layout, mask, Topology::single_node(layout.g));
}

struct DeviceState {
  std::size_t device = 0;  // ring position
  Matrix q, k, v;
  Matrix o;
  Vector lse;
  Matrix d_o;
  Vector dsum;  // rowsum(dO o O)
  Matrix dq, dk, dv;
  bool forward_done = false;
};

struct KvPayload {
  std::size_t origin = 0;
  Matrix k, v, dk, dv;
  std::size_t elements() const noexcept { return k.size() + v.size() + dk.size() + dv.size(); }
};

struct QPayload {
  std::size_t origin = 0;
  Matrix q, dq, d_o;
  Vector dsum, lse;
  std::size_t elements() const noexcept {
    return q.size() + dq.size() + d_o.size() + dsum.size() + lse.size();
  }
};

inline std::vector<DeviceState> scatter(const Cluster& c, const Matrix& q, const Matrix& k,
                                        const Matrix& v) {
  detail::check_qkv(q, k, v);
  detail::require_shape(q.rows() == c.layout.n && k.rows() == c.layout.n,
                        "scatter: Q, K, V need N = " + std::to_string(c.layout.n) + " rows");
  std::vector<DeviceState> out(c.devices());
  for (std::size_t p = 0; p < c.devices(); ++p) {
    std::vector<std::size_t> rows;
    for (std::size_t t : c.shards[p].token_ids) rows.push_back(t - 1);
    auto& s = out[p];
    s.device = p;
    s.q = gather_rows(q, rows);
    s.k = gather_rows(k, rows);
    s.v = gather_rows(v, rows);
  }
  return out;
}

inline std::vector<Matrix> scatter_matrix(const Cluster& c, const Matrix& m) {
  detail::require_shape(m.rows() == c.layout.n, "scatter_matrix: need N rows");
  std::vector<Matrix> out;
  for (const auto& sh : c.shards) {
    std::vector<std::size_t> rows;
    for (std::size_t t : sh.token_ids) rows.push_back(t - 1);
    out.push_back(gather_rows(m, rows));
  }
  return out;
}

inline Matrix gather_matrix(const Cluster& c, const std::vector<const Matrix*>& parts) {
  const std::size_t cols = parts.empty() ? 0 : parts.front()->cols();
  Matrix out(c.layout.n, cols);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    std::vector<std::size_t> rows;
    for (std::size_t t : c.shards[p].token_ids) rows.push_back(t - 1);
    scatter_rows(out, *parts[p], rows);
  }
  return out;
}

inline AttentionResult gather_forward(const Cluster& c, const std::vector<DeviceState>& states) {
  std::vector<const Matrix*> parts;
  for (const auto& s : states) parts.push_back(&s.o);
  AttentionResult r{gather_matrix(c, parts), Vector(c.layout.n)};
  for (std::size_t p = 0; p < states.size(); ++p)
    for (std::size_t a = 0; a < states[p].lse.size(); ++a)
      r.lse[c.shards[p].token_ids[a] - 1] = states[p].lse[a];
  return r;
}

inline AttentionGrads gather_grads(const Cluster& c, const std::vector<DeviceState>& states) {
  std::vector<const Matrix*> dq, dk, dv;
  for (const auto& s : states) {
    dq.push_back(&s.dq);
    dk.push_back(&s.dk);
    dv.push_back(&s.dv);
  }
  return {gather_matrix(c, dq), gather_matrix(c, dk), gather_matrix(c, dv)};
}

namespace detail {

template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&f, t, n, threads] {
      for (std::size_t i = t; i < n; i += threads) f(i);
    });
  }
}

// Moves one payload per device around the plan for G steps, calling
// visit(device, step, payload) before each hop. Devices only touch their own
// state and the payload they hold, so steps may run in parallel.
template <class Payload, class Visit>
MessageLog circulate(const Cluster& c, std::vector<Payload>& held, Visit&& visit) {
  const RingPlan& plan = c.plan;
  const std::size_t g = plan.devices();
  MessageLog log(g, plan.steps());
  for (std::size_t k = 0; k < plan.steps(); ++k) {
    for (std::size_t i = 0; i < g; ++i) {
      require(held[i].origin == plan.visit[i][k], "ring: payload arrived at the wrong device");
    }
    parallel_for(g, c.threads, [&](std::size_t i) { visit(i, k, held[i]); });
    std::vector<Payload> moved(g);
    for (std::size_t i = 0; i < g; ++i) {
      const std::size_t dest = plan.next[i][k];
      log.record(i, dest, plan.channel(i, dest), k, held[i].elements());
      moved[dest] = std::move(held[i]);
    }
    held = std::move(moved);
  }
  return log;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
  return s;
}

// One online-softmax step: fold the block (Q_i, K_j, V_j) into (O_i, Lse_i).
inline void forward_block(const LocalMask& m, const Matrix& q, const Matrix& k, const Matrix& v,
                          Matrix& o, Vector& lse) {
  if (m.pairs == 0) return;
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  std::vector<double> s(m.cols);
  std::vector<double> o_blk(v.cols());
  for (std::size_t a = 0; a < m.rows; ++a) {
    for (std::size_t b = 0; b < m.cols; ++b) s[b] = m(a, b) ? dot(q.row(a), k.row(b)) * scale : kNegInf;
    const double lse_cur = logsumexp(s);
    if (lse_cur == kNegInf) continue;  // nothing visible in this block
    std::fill(o_blk.begin(), o_blk.end(), 0.0);
    for (std::size_t b = 0; b < m.cols; ++b) {
      if (!m(a, b)) continue;
      const double p = std::exp(s[b] - lse_cur);
      for (std::size_t c = 0; c < v.cols(); ++c) o_blk[c] += p * v(b, c);
    }
    const double lse_new = lse_merge(lse[a], lse_cur);
    const double w_cur = std::exp(lse_cur - lse_new);
    const double w_old = std::exp(lse[a] - lse_new);
    auto o_row = o.row(a);
    for (std::size_t c = 0; c < v.cols(); ++c) o_row[c] = w_cur * o_blk[c] + w_old * o_row[c];
    lse[a] = lse_new;
  }
}

// Backward contribution of query block (q, d_o, dsum, lse) against key block
// (k, v). dq rows follow the query block, dk / dv rows the key block.
inline void backward_block(const LocalMask& m, const Matrix& q, const Matrix& k, const Matrix& v,
                           const Matrix& d_o, const Vector& dsum, const Vector& lse, Matrix& dq,
                           Matrix& dk, Matrix& dv) {
  if (m.pairs == 0) return;
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  for (std::size_t a = 0; a < m.rows; ++a) {
    for (std::size_t b = 0; b < m.cols; ++b) {
      if (!m(a, b)) continue;
      const double p = std::exp(dot(q.row(a), k.row(b)) * scale - lse[a]);
      const double dp = dot(d_o.row(a), v.row(b));
      for (std::size_t c = 0; c < v.cols(); ++c) dv(b, c) += p * d_o(a, c);
      const double ds = p * (dp - dsum[a]);
      for (std::size_t c = 0; c < q.cols(); ++c) {
        dq(a, c) += ds * k(b, c) * scale;
        dk(b, c) += ds * q(a, c) * scale;
      }
    }
  }
}

inline void begin_backward(std::vector<DeviceState>& states, const std::vector<Matrix>& d_o) {
  require(d_o.size() == states.size(), "backward: need one dO shard per device");
  for (std::size_t p = 0; p < states.size(); ++p) {
    auto& s = states[p];
    require(s.forward_done, "backward: run the forward pass first");
    require_shape(d_o[p].rows() == s.o.rows() && d_o[p].cols() == s.o.cols(),
                  "backward: dO shard shape");
    s.d_o = d_o[p];
    s.dq = Matrix(s.q.rows(), s.q.cols());
    s.dk = Matrix(s.k.rows(), s.k.cols());
    s.dv = Matrix(s.v.rows(), s.v.cols());
  }
}

}  // namespace detail

// Online-softmax forward: K, V circulate, each device folds every block into
// its running (O_i, Lse_i). Fills o and lse of every state.
inline MessageLog distributed_forward(const Cluster& c, std::vector<DeviceState>& states) {
  detail::require(states.size() == c.devices(), "forward: need one state per device");
  std::vector<KvPayload> held(c.devices());
  for (std::size_t p = 0; p < c.devices(); ++p) {
    auto& s = states[p];
    s.o = Matrix(s.q.rows(), s.v.cols());
    s.lse.assign(s.q.rows(), kNegInf);
    held[p] = {p, s.k, s.v, {}, {}};
  }
  MessageLog log = detail::circulate(c, held, [&](std::size_t i, std::size_t, KvPayload& kv) {
    auto& s = states[i];
    detail::forward_block(c.local(i, kv.origin), s.q, kv.k, kv.v, s.o, s.lse);
  });
  for (auto& s : states) s.forward_done = true;
  return log;
}

// Forward with an arbitrary per-device visiting order of the key shards,
// bypassing the fabric. order[i] must be a permutation of 0..G-1.
inline void forward_in_order(const Cluster& c, std::vector<DeviceState>& states,
                             const std::vector<std::vector<std::size_t>>& order) {
  detail::require(order.size() == c.devices(), "forward_in_order: one order per device");
  for (std::size_t i = 0; i < c.devices(); ++i) {
    auto sorted = order[i];
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 0; j < sorted.size(); ++j)
      detail::require(sorted[j] == j && sorted.size() == c.devices(), "forward_in_order: not a permutation");
    auto& s = states[i];
    s.o = Matrix(s.q.rows(), s.v.cols());
    s.lse.assign(s.q.rows(), kNegInf);
    for (std::size_t j : order[i]) {
      detail::forward_block(c.local(i, j), s.q, states[j].k, states[j].v, s.o, s.lse);
    }
    s.forward_done = true;
  }
}

// K, V, dK, dV circulate; dQ stays home. D_i is recomputed every step.
inline MessageLog ring_backward(const Cluster& c, std::vector<DeviceState>& states,
                                const std::vector<Matrix>& d_o) {
  detail::begin_backward(states, d_o);
  std::vector<KvPayload> held(c.devices());
  for (std::size_t p = 0; p < c.devices(); ++p) {
    const auto& s = states[p];
    held[p] = {p, s.k, s.v, Matrix(s.k.rows(), s.k.cols()), Matrix(s.v.rows(), s.v.cols())};
  }
  MessageLog log = detail::circulate(c, held, [&](std::size_t i, std::size_t, KvPayload& kv) {
    auto& s = states[i];
    s.dsum = rowsum_hadamard(s.d_o, s.o);
    detail::backward_block(c.local(i, kv.origin), s.q, kv.k, kv.v, s.d_o, s.dsum, s.lse, s.dq, kv.dk,
                           kv.dv);
  });
  for (std::size_t p = 0; p < c.devices(); ++p) {
    states[p].dk = std::move(held[p].dk);
    states[p].dv = std::move(held[p].dv);
  }
  return log;
}

// Q, dQ, dO, D, Lse circulate; K, V and their gradients stay home. The device
// holding key shard i scores the visiting query shard j against it, so the
// visibility grid is the (j, i) one.
inline MessageLog burst_backward(const Cluster& c, std::vector<DeviceState>& states,
                                 const std::vector<Matrix>& d_o) {
  detail::begin_backward(states, d_o);
  std::vector<QPayload> held(c.devices());
  for (std::size_t p = 0; p < c.devices(); ++p) {
    auto& s = states[p];
    s.dsum = rowsum_hadamard(s.d_o, s.o);
    held[p] = {p, s.q, Matrix(s.q.rows(), s.q.cols()), s.d_o, s.dsum, s.lse};
  }
  MessageLog log = detail::circulate(c, held, [&](std::size_t i, std::size_t, QPayload& qp) {
    auto& s = states[i];
    detail::backward_block(c.local(qp.origin, i), qp.q, s.k, s.v, qp.d_o, qp.dsum, qp.lse, qp.dq, s.dk,
                           s.dv);
  });
  for (std::size_t p = 0; p < c.devices(); ++p) states[p].dq = std::move(held[p].dq);
  return log;
}

struct ScheduleOptions {
  OverlapKind overlap = OverlapKind::none;
  double seconds_per_pair = 1e-9;    // compute cost of one scored (q, k) pair
  double seconds_per_step = 0.0;     // fixed kernel launch cost per step
};

struct ScheduledRun {
  MessageLog log;        // numeric payload movement
  SimulationResult sim;  // timing replay of the same plan
};

namespace detail {

inline std::vector<std::vector<double>> compute_table(const Cluster& c, Pass pass,
                                                      const ScheduleOptions& opt) {
  const std::size_t g = c.devices();
  std::vector<std::vector<double>> t(g, std::vector<double>(g));
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t k = 0; k < g; ++k) {
      const std::size_t j = c.plan.visit[i][k];
      const std::size_t pairs = pass == Pass::burst_backward ? c.local(j, i).pairs : c.local(i, j).pairs;
      t[i][k] = opt.seconds_per_step + opt.seconds_per_pair * static_cast<double>(pairs);
    }
  }
  return t;
}

// Backward with gradient accumulators trailing the compute: every visit
// writes a fresh partial, and partials are folded into the travelling
// accumulator in the order the timeline delivers them.
inline MessageLog lagged_backward(const Cluster& c, Pass pass, std::vector<DeviceState>& states,
                                  const std::vector<Matrix>& d_o, const Timeline& tl) {
  begin_backward(states, d_o);
  const std::size_t g = c.devices();
  const RingPlan& plan = c.plan;
  for (auto& s : states) s.dsum = rowsum_hadamard(s.d_o, s.o);

  // Partial gradient of the travelling accumulator produced by (device, step).
  struct Partial {
    Matrix a, b;  // dK, dV (ring) or dQ (burst, b unused)
  };
  std::vector<std::vector<Partial>> partial(g, std::vector<Partial>(g));
  std::vector<std::vector<bool>> ready(g, std::vector<bool>(g, false));
  std::vector<Partial> acc(g);
  for (std::size_t j = 0; j < g; ++j) {
    const auto& s = states[j];
    if (pass == Pass::ring_backward) {
      acc[j] = {Matrix(s.k.rows(), s.k.cols()), Matrix(s.v.rows(), s.v.cols())};
    } else {
      acc[j] = {Matrix(s.q.rows(), s.q.cols()), Matrix()};
    }
  }

  std::vector<const TimelineEvent*> computes;
  for (const auto& e : tl.events)
    if (e.kind == EventKind::compute) computes.push_back(&e);
  std::stable_sort(computes.begin(), computes.end(), [](const auto* x, const auto* y) {
    return x->start < y->start || (x->start == y->start && x->device < y->device);
  });
  require(computes.size() == g * plan.steps(), "lagged backward: timeline is missing computes");

  // Accumulators are folded in ring order per origin, after the partial exists.
  std::vector<std::size_t> folded(g, 0);
  auto fold_ready = [&](std::size_t j) {
    // The payload from origin j reaches its visitors in step order.
    while (folded[j] < plan.steps()) {
      const std::size_t k = folded[j];
      std::size_t dev = g;
      for (std::size_t i = 0; i < g; ++i)
        if (plan.visit[i][k] == j) dev = i;
      if (!ready[dev][k]) break;
      add_inplace(acc[j].a, partial[dev][k].a);
      if (pass == Pass::ring_backward) add_inplace(acc[j].b, partial[dev][k].b);
      ++folded[j];
    }
  };

  for (const auto* e : computes) {
    const std::size_t i = e->device;
    const std::size_t k = e->step;
    const std::size_t j = plan.visit[i][k];
    auto& s = states[i];
    auto& part = partial[i][k];
    if (pass == Pass::ring_backward) {
      const auto& src = states[j];
      part = {Matrix(src.k.rows(), src.k.cols()), Matrix(src.v.rows(), src.v.cols())};
      backward_block(c.local(i, j), s.q, src.k, src.v, s.d_o, s.dsum, s.lse, s.dq, part.a, part.b);
    } else {
      const auto& src = states[j];
      part = {Matrix(src.q.rows(), src.q.cols()), Matrix()};
      backward_block(c.local(j, i), src.q, s.k, s.v, src.d_o, src.dsum, src.lse, part.a, s.dk, s.dv);
    }
    ready[i][k] = true;
    fold_ready(j);
  }

  for (std::size_t j = 0; j < g; ++j) {
    require(folded[j] == plan.steps(), "lagged backward: accumulator did not complete the ring");
    if (pass == Pass::ring_backward) {
      states[j].dk = std::move(acc[j].a);
      states[j].dv = std::move(acc[j].b);
    } else {
      states[j].dq = std::move(acc[j].a);
    }
  }

  // Same payloads travel the same plan, so the log is the plan's log.
  MessageLog log(g, plan.steps());
  for (std::size_t k = 0; k < plan.steps(); ++k) {
    for (std::size_t i = 0; i < g; ++i) {
      const std::size_t j = plan.visit[i][k];
      const auto& src = states[j];
      const std::size_t elems = pass == Pass::ring_backward
                                    ? 2 * (src.k.size() + src.v.size())
                                    : 3 * src.q.size() + 2 * src.q.rows();
      log.record(i, plan.next[i][k], plan.channel(i, plan.next[i][k]), k, elems);
    }
  }
  return log;
}

}  // namespace detail

// Runs a pass numerically and replays it on the timeline under the chosen
// overlap schedule. Forward results never depend on the schedule. Backward
// under the gradient schedule folds per-step partial gradients into the
// travelling accumulators, which only reassociates the sums.
inline ScheduledRun run_with_schedule(Pass pass, const Cluster& c, std::vector<DeviceState>& states,
                                      const std::vector<Matrix>& d_o, const ScheduleOptions& opt) {
  const std::size_t d = states.empty() ? 0 : states.front().q.cols();
  const StepPayload payload = step_payload(pass, c.layout.n, d, c.devices());
  ScheduledRun run;
  run.sim = simulate_ring(c.plan, payload, opt.overlap, detail::compute_table(c, pass, opt));
  switch (pass) {
    case Pass::forward:
      run.log = distributed_forward(c, states);
      break;
    case Pass::ring_backward:
    case Pass::burst_backward:
      if (opt.overlap == OverlapKind::gradient) {
        run.log = detail::lagged_backward(c, pass, states, d_o, run.sim.timeline);
      } else {
        run.log = pass == Pass::ring_backward ? ring_backward(c, states, d_o)
                                              : burst_backward(c, states, d_o);
      }
      break;
  }
  return run;
}

}  // namespace burst
