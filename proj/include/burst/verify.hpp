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

// Self-check suite behind `burstsim verify`. Every check reports a metric and
// the tolerance it is held to; inputs are drawn from the seed, so a seed and
// a build fully determine the report.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "burst/burst.hpp"

namespace burst {

struct CheckResult {
  std::string name;
  bool passed = false;
  double metric = 0.0;     // worst observed value
  double tolerance = 0.0;  // metric must not exceed this
  std::size_t cases = 0;
};

namespace detail {

inline std::vector<MaskSpec> verify_masks(std::size_t n, std::uint64_t seed) {
  return {MaskSpec::full(), MaskSpec::causal(), MaskSpec::sliding_window(3),
          MaskSpec::random_block_sparse(n, n / 4, seed)};
}

inline bool layout_ok(const ShardLayout& l) {
  try {
    l.validate();
    return true;
  } catch (const PreconditionError&) {
    return false;
  }
}

struct CheckAccumulator {
  std::string name;
  double tolerance = 0.0;
  double worst = 0.0;
  std::size_t cases = 0;
  bool failed = false;

  void observe(double v) {
    ++cases;
    if (!(v <= tolerance)) failed = true;  // NaN fails too
    if (std::isnan(v) || v > worst) worst = v;
  }
  CheckResult result() const { return {name, !failed && cases > 0, worst, tolerance, cases}; }
};

// Layout/mask/G grid shared by the attention checks.
template <class F>
void attention_grid(std::uint64_t seed, const std::vector<std::size_t>& ns,
                    const std::vector<std::size_t>& gs, F&& f) {
  for (std::size_t n : ns) {
    for (std::size_t g : gs) {
      for (LayoutKind lk : {LayoutKind::contiguous, LayoutKind::zigzag, LayoutKind::striped}) {
        const ShardLayout layout{lk, n, g, 0};
        if (!layout_ok(layout)) continue;
        for (const MaskSpec& mask : verify_masks(n, seed + n)) f(layout, mask);
      }
    }
  }
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace detail

inline std::vector<CheckResult> run_verify(std::uint64_t seed, std::size_t threads = 1) {
  using detail::CheckAccumulator;
  std::vector<CheckResult> out;
  const std::size_t d = 4;

  // Online softmax algebra.
  {
    CheckAccumulator acc{"numerics.lse_merge", 1e-12};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-30.0, 30.0);
    for (int t = 0; t < 200; ++t) {
      const double a = u(rng), b = u(rng), c = u(rng);
      acc.observe(std::abs(lse_merge(lse_merge(a, b), c) - lse_merge(a, lse_merge(b, c))));
      acc.observe(std::abs(lse_merge(kNegInf, a) - a));
      acc.observe(std::abs(lse_merge(a, b) - std::log(std::exp(a) + std::exp(b))));
    }
    out.push_back(acc.result());
  }

  // Forward and backward against the dense oracle.
  {
    CheckAccumulator fwd{"forward.oracle", 1e-10};
    CheckAccumulator b_vs_r{"backward.burst_vs_ring", 1e-10};
    CheckAccumulator r_vs_o{"backward.ring_vs_oracle", 1e-9};
    CheckAccumulator comm{"comm.message_log_exact", 0.0};
    detail::attention_grid(seed, {8, 16}, {1, 2, 4}, [&](const ShardLayout& layout, const MaskSpec& mask) {
      const std::size_t n = layout.n;
      const Matrix q = seeded_random_matrix(n, d, seed + 1);
      const Matrix k = seeded_random_matrix(n, d, seed + 2);
      const Matrix v = seeded_random_matrix(n, d, seed + 3);
      const Matrix d_o = seeded_random_matrix(n, d, seed + 4);
      const AttentionResult ref = attention_forward(q, k, v, mask);
      const AttentionGrads gref = attention_backward(q, k, v, ref.o, ref.lse, d_o, mask);
      const Cluster c = make_cluster(layout, mask, Topology::single_node(layout.g), RingKind::flat, threads);

      auto states = scatter(c, q, k, v);
      const MessageLog lf = distributed_forward(c, states);
      const AttentionResult got = gather_forward(c, states);
      fwd.observe(std::max(max_abs_diff(got.o, ref.o), max_abs_diff(got.lse, ref.lse)));

      const auto dos = scatter_matrix(c, d_o);
      auto rs = states;
      const MessageLog lr = ring_backward(c, rs, dos);
      auto bs = states;
      const MessageLog lb = burst_backward(c, bs, dos);
      const AttentionGrads gr = gather_grads(c, rs);
      const AttentionGrads gb = gather_grads(c, bs);
      b_vs_r.observe(std::max({max_abs_diff(gb.dq, gr.dq), max_abs_diff(gb.dk, gr.dk),
                               max_abs_diff(gb.dv, gr.dv)}));
      r_vs_o.observe(std::max({max_abs_diff(gr.dq, gref.dq), max_abs_diff(gr.dk, gref.dk),
                               max_abs_diff(gr.dv, gref.dv)}));

      double mismatches = 0.0;
      const std::pair<const MessageLog*, Pass> logs[] = {
          {&lf, Pass::forward}, {&lr, Pass::ring_backward}, {&lb, Pass::burst_backward}};
      for (const auto& [log, pass] : logs) {
        const std::size_t want = account_attention_comm(pass, n, d, layout.g);
        for (const auto& s : log->sent) mismatches += s.total() == want ? 0.0 : 1.0;
        mismatches += log->balanced() ? 0.0 : 1.0;
      }
      comm.observe(mismatches);
    });
    out.push_back(fwd.result());
    out.push_back(b_vs_r.result());
    out.push_back(r_vs_o.result());
    out.push_back(comm.result());
  }

  // Oracle gradients against central differences of sum(O o dO).
  {
    CheckAccumulator acc{"backward.finite_diff", 1e-5};
    const std::size_t n = 8;
    for (const MaskSpec& mask : detail::verify_masks(n, seed)) {
      const Matrix q = seeded_random_matrix(n, d, seed + 5);
      const Matrix k = seeded_random_matrix(n, d, seed + 6);
      const Matrix v = seeded_random_matrix(n, d, seed + 7);
      const Matrix d_o = seeded_random_matrix(n, d, seed + 8);
      const AttentionResult ref = attention_forward(q, k, v, mask);
      const AttentionGrads g = attention_backward(q, k, v, ref.o, ref.lse, d_o, mask);
      auto objective = [&](const Matrix& qq, const Matrix& kk, const Matrix& vv) {
        const Matrix o = attention_forward(qq, kk, vv, mask).o;
        double s = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i) s += o.data()[i] * d_o.data()[i];
        return s;
      };
      acc.observe(finite_diff_check([&](const Matrix& x) { return objective(x, k, v); }, q, g.dq, 1e-6));
      acc.observe(finite_diff_check([&](const Matrix& x) { return objective(q, x, v); }, k, g.dk, 1e-6));
      acc.observe(finite_diff_check([&](const Matrix& x) { return objective(q, k, x); }, v, g.dv, 1e-6));
    }
    out.push_back(acc.result());
  }

  // Visiting key shards in any order gives the same forward.
  {
    CheckAccumulator acc{"forward.order_independence", 1e-10};
    std::mt19937_64 rng(seed + 9);
    const std::size_t n = 16;
    for (std::size_t g : {2, 4, 8}) {
      const ShardLayout layout{LayoutKind::striped, n, g, 0};
      const MaskSpec mask = MaskSpec::causal();
      const Cluster c = make_cluster(layout, mask);
      const Matrix q = seeded_random_matrix(n, d, seed + 10);
      const Matrix k = seeded_random_matrix(n, d, seed + 11);
      const Matrix v = seeded_random_matrix(n, d, seed + 12);
      auto base = scatter(c, q, k, v);
      distributed_forward(c, base);
      const AttentionResult ref = gather_forward(c, base);
      for (int t = 0; t < 5; ++t) {
        std::vector<std::vector<std::size_t>> order(g);
        for (auto& o : order) {
          for (std::size_t j = 0; j < g; ++j) o.push_back(j);
          std::shuffle(o.begin(), o.end(), rng);
        }
        auto st = scatter(c, q, k, v);
        forward_in_order(c, st, order);
        const AttentionResult got = gather_forward(c, st);
        acc.observe(std::max(max_abs_diff(got.o, ref.o), max_abs_diff(got.lse, ref.lse)));
      }
    }
    out.push_back(acc.result());
  }

  // Closed-form communication volumes and times.
  {
    CheckAccumulator acc{"comm.closed_forms", 0.0};
    const double t1[] = {analytic_comm_time(Strategy::ring, 3.0, 5.0, 8, 2),
                         analytic_comm_time(Strategy::double_ring, 3.0, 5.0, 8, 2),
                         analytic_comm_time(Strategy::burst, 3.0, 5.0, 8, 2)};
    acc.observe(std::abs(t1[0] - 240.0) + std::abs(t1[1] - 128.0) + std::abs(t1[2] - 90.0));
    const auto fwd = account_attention_comm(Pass::forward, 8, 4, 2);
    const auto rb = account_attention_comm(Pass::ring_backward, 8, 4, 2);
    const auto bb = account_attention_comm(Pass::burst_backward, 8, 4, 2);
    acc.observe(static_cast<double>((fwd != 64) + (rb != 128) + (bb != 112)));
    const double ratio = static_cast<double>(account_attention_comm(Pass::burst_backward, 1024, 128, 8)) /
                         static_cast<double>(account_attention_comm(Pass::ring_backward, 1024, 128, 8));
    acc.observe(std::abs(ratio - (3.0 * 128 + 2) / (4.0 * 128)));
    out.push_back(acc.result());
  }
  {
    CheckAccumulator acc{"comm.strategy_ordering", 0.0};
    std::mt19937_64 rng(seed + 13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t shapes[][2] = {{2, 4}, {4, 2}, {2, 8}, {4, 8}, {8, 8}};
    for (int t = 0; t < 100; ++t) {
      const auto& sh = shapes[t % 5];
      Topology topo{sh[0], sh[1], 0.0, 0.0, 1.0, 1.0};
      topo.bw_inter = 1.0 + 99.0 * u(rng);
      topo.bw_intra = topo.bw_inter * (1.0 + 9.0 * u(rng));
      topo.lat_intra = 1e-3 * u(rng);
      topo.lat_inter = topo.lat_intra * (1.0 + 4.0 * u(rng));
      const double p = 1.0 + 1e4 * u(rng);
      const double r = analytic_comm_time(Strategy::ring, topo, p);
      const double dr = analytic_comm_time(Strategy::double_ring, topo, p);
      const double b = analytic_comm_time(Strategy::burst, topo, p);
      acc.observe(static_cast<double>((b > dr) + (dr > r)));
    }
    out.push_back(acc.result());
  }

  // Double-ring coverage and timeline structure.
  {
    CheckAccumulator cov{"fabric.coverage", 0.0};
    CheckAccumulator ser{"timeline.serialized_sum", 1e-9};
    CheckAccumulator stru{"timeline.structure", 0.0};
    CheckAccumulator bounds{"timeline.bounds", 1e-12};
    CheckAccumulator warm{"timeline.gradient_warmup", 0.0};
    const std::size_t shapes[][2] = {{1, 4}, {2, 4}, {4, 2}, {2, 2}, {3, 3}, {8, 1}};
    std::mt19937_64 rng(seed + 14);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (const auto& sh : shapes) {
      Topology topo{sh[0], sh[1], 0.05 * u(rng), 0.2 * u(rng), 100.0 * u(rng), 20.0 * u(rng)};
      for (RingKind rk : {RingKind::flat, RingKind::double_ring}) {
        const RingPlan plan = build_ring(rk, topo);
        const std::size_t g = plan.devices();
        double misses = 0.0;
        for (std::size_t i = 0; i < g; ++i) {
          std::vector<std::size_t> v = plan.visit[i];
          std::sort(v.begin(), v.end());
          for (std::size_t j = 0; j < g; ++j) misses += v[j] == j ? 0.0 : 1.0;
        }
        cov.observe(misses);
        std::vector<std::vector<double>> table(g, std::vector<double>(g));
        for (auto& row : table)
          for (double& x : row) x = u(rng);
        const StepPayload payload{40, 20};
        for (OverlapKind ok : {OverlapKind::none, OverlapKind::activation, OverlapKind::gradient}) {
          const SimulationResult sim = simulate_ring(plan, payload, ok, table);
          stru.observe(static_cast<double>(sim.timeline.violations().size()));
          if (ok == OverlapKind::none) {
            ser.observe(detail::rel_diff(sim.timeline.makespan, serialized_time(plan, payload, table)));
          } else {
            const double hi = serialized_time_split(plan, payload, table);
            const double lo = lane_lower_bound(sim);
            bounds.observe(std::max(0.0, sim.timeline.makespan - hi) / hi);
            bounds.observe(std::max(0.0, lo - sim.timeline.makespan) / hi);
          }
          if (ok == OverlapKind::gradient) {
            // No send before the sender's first compute; no inter-node send
            // before its node finished that round's computes and intra sends.
            double bad = 0.0;
            std::map<std::pair<std::size_t, std::size_t>, double> round_done;
            std::vector<double> warmup(g, 0.0);
            for (const auto& e : sim.timeline.events) {
              if (e.kind == EventKind::compute && e.step == 0) warmup[e.device] = e.end;
              if (e.kind == EventKind::compute || e.kind == EventKind::send_intra) {
                auto& r = round_done[{topo.node_of(e.device), e.round}];
                r = std::max(r, e.end);
              }
            }
            for (const auto& e : sim.timeline.events) {
              const bool send = e.kind == EventKind::send_intra || e.kind == EventKind::send_inter;
              if (send && e.start < warmup[e.device]) bad += 1.0;
              if (e.kind == EventKind::send_inter && topo.num_nodes > 1 && rk == RingKind::double_ring &&
                  e.start < round_done[{topo.node_of(e.device), e.round}]) {
                bad += 1.0;
              }
            }
            warm.observe(bad);
          }
        }
      }
    }
    out.push_back(cov.result());
    out.push_back(ser.result());
    out.push_back(stru.result());
    out.push_back(bounds.result());
    out.push_back(warm.result());
  }

  // Overlap schedules change timing only.
  {
    CheckAccumulator acc{"schedule.neutrality", 1e-12};
    const std::size_t n = 16;
    const Topology topo{2, 2, 1e-3, 5e-3, 1e6, 2e5};
    const ShardLayout layout{LayoutKind::zigzag, n, 4, 0};
    const MaskSpec mask = MaskSpec::causal();
    const Cluster c = make_cluster(layout, mask, topo, RingKind::double_ring, threads);
    const Matrix q = seeded_random_matrix(n, d, seed + 15);
    const Matrix k = seeded_random_matrix(n, d, seed + 16);
    const Matrix v = seeded_random_matrix(n, d, seed + 17);
    const auto dos = scatter_matrix(c, seeded_random_matrix(n, d, seed + 18));
    auto base = scatter(c, q, k, v);
    distributed_forward(c, base);
    const AttentionResult fref = gather_forward(c, base);
    auto rb = base;
    ring_backward(c, rb, dos);
    auto bb = base;
    burst_backward(c, bb, dos);
    const AttentionGrads rref = gather_grads(c, rb);
    const AttentionGrads bref = gather_grads(c, bb);
    for (OverlapKind ok : {OverlapKind::none, OverlapKind::activation, OverlapKind::gradient}) {
      ScheduleOptions opt;
      opt.overlap = ok;
      opt.seconds_per_pair = 1e-6;
      auto st = scatter(c, q, k, v);
      run_with_schedule(Pass::forward, c, st, {}, opt);
      const AttentionResult f = gather_forward(c, st);
      acc.observe(std::max(max_abs_diff(f.o, fref.o), max_abs_diff(f.lse, fref.lse)));
      for (Pass p : {Pass::ring_backward, Pass::burst_backward}) {
        auto s2 = st;
        run_with_schedule(p, c, s2, dos, opt);
        const AttentionGrads gg = gather_grads(c, s2);
        const AttentionGrads& ref = p == Pass::ring_backward ? rref : bref;
        acc.observe(std::max({max_abs_diff(gg.dq, ref.dq), max_abs_diff(gg.dk, ref.dk),
                              max_abs_diff(gg.dv, ref.dv)}));
      }
    }
    out.push_back(acc.result());
  }

  // Causal workload balance per layout.
  {
    CheckAccumulator zz{"balance.zigzag", 0.0};
    CheckAccumulator st{"balance.striped", 0.0};
    CheckAccumulator bl{"balance.block_striped", 0.0};
    CheckAccumulator ct{"balance.contiguous_imbalanced", 0.0};
    const MaskSpec causal = MaskSpec::causal();
    for (std::size_t n : {8, 16, 32, 64}) {
      for (std::size_t g : {2, 4, 8}) {
        const ShardLayout z{LayoutKind::zigzag, n, g, 0};
        if (detail::layout_ok(z)) {
          const WorkloadReport r = balance_report(z, causal);
          zz.observe(static_cast<double>(r.device_spread()));
          zz.observe(r.max_step_spread() <= n / (2 * g) ? 0.0 : 1.0);
        }
        const ShardLayout s{LayoutKind::striped, n, g, 0};
        if (detail::layout_ok(s)) {
          const WorkloadReport r = balance_report(s, causal);
          st.observe(r.device_spread() <= (g - 1) * n / g ? 0.0 : 1.0);
        }
        const std::size_t len = std::max<std::size_t>(g, n / 4);
        const ShardLayout b{LayoutKind::block_striped, n, g, len};
        if (detail::layout_ok(b)) {
          const WorkloadReport r = balance_report(b, MaskSpec::random_block_sparse(n, len, seed + n + g));
          bl.observe(static_cast<double>(r.device_spread()));
        }
        const ShardLayout cl{LayoutKind::contiguous, n, g, 0};
        if (detail::layout_ok(cl)) {
          const WorkloadReport r = balance_report(cl, causal);
          ct.observe(r.per_device_pairs.back() >= 2 * r.per_device_pairs.front() ? 0.0 : 1.0);
        }
      }
    }
    out.push_back(zz.result());
    out.push_back(st.result());
    out.push_back(bl.result());
    out.push_back(ct.result());
  }

  // Fused LM head.
  {
    CheckAccumulator eq{"lmhead.fused_vs_naive", 1e-10};
    CheckAccumulator fd{"lmhead.finite_diff", 1e-5};
    CheckAccumulator pk{"lmhead.peak_bound", 0.0};
    const std::size_t n = 6, v = 11, dd = 4;
    const Matrix h = seeded_random_matrix(n, dd, seed + 19);
    const Matrix w = seeded_random_matrix(v, dd, seed + 20);
    std::vector<std::size_t> y(n);
    std::mt19937_64 rng(seed + 21);
    for (auto& t : y) t = rng() % v;
    const LmHeadLoss ref = naive_lmhead_loss(h, w, y);
    for (std::size_t bs : {1, 2, 4, 6, 7}) {
      for (std::size_t bv : {1, 3, 5, 11, 16}) {
        const FusionConfig cfg{bs, bv};
        const FusedLossResult r = fused_lmhead_loss(h, w, y, cfg);
        eq.observe(std::max({max_abs_diff(r.loss, ref.loss), max_abs_diff(r.dh, ref.dh),
                             max_abs_diff(r.dw, ref.dw)}));
        double bad = r.peak_aux_elements <= fused_aux_bound(n, v, dd, cfg) ? 0.0 : 1.0;
        if (bs < n && r.peak_logits_elements >= n * v) bad += 1.0;
        pk.observe(bad);
      }
    }
    const FusionConfig cfg{2, 3};
    auto total = [&](const Matrix& hh, const Matrix& ww) {
      const auto r = fused_lmhead_loss(hh, ww, y, cfg);
      double s = 0.0;
      for (double x : r.loss) s += x;
      return s;
    };
    const FusedLossResult r = fused_lmhead_loss(h, w, y, cfg);
    fd.observe(finite_diff_check([&](const Matrix& x) { return total(x, w); }, h, r.dh, 1e-6));
    fd.observe(finite_diff_check([&](const Matrix& x) { return total(h, x); }, w, r.dw, 1e-6));
    out.push_back(eq.result());
    out.push_back(fd.result());
    out.push_back(pk.result());
  }

  // Checkpoint policies.
  {
    CheckAccumulator toy{"checkpoint.toy_gradients", 1e-10};
    CheckAccumulator frac{"checkpoint.recompute_fraction", 1e-15};
    CheckAccumulator half{"checkpoint.half_storage", 0.0};
    for (std::size_t n : {8, 16, 32}) {
      for (const MaskSpec& mask : detail::verify_masks(n, seed + 22)) {
        for (const auto& pol : {CheckpointPolicy::full(), CheckpointPolicy::selective(),
                                CheckpointPolicy::sequence(0.5), CheckpointPolicy::sequence(0.25)}) {
          const ToyReport r = execute_toy(pol, n, d, mask, seed + 23);
          toy.observe(r.max_diff());
          if (mask.kind == MaskKind::causal && pol.kind == CheckpointKind::sequence_selective &&
              pol.split == 0.5) {
            const double h2 = static_cast<double>(n / 2);
            const double want = h2 * (h2 + 1) / 2 / (static_cast<double>(n) * (n + 1) / 2);
            frac.observe(std::abs(r.recompute_fraction - want));
          }
        }
        const PlanReport sp = plan(CheckpointPolicy::selective(), n, d, mask);
        const PlanReport ss = plan(CheckpointPolicy::sequence(0.5), n, d, mask);
        half.observe(2 * ss.attention_extra_elements == sp.attention_extra_elements ? 0.0 : 1.0);
      }
    }
    out.push_back(toy.result());
    out.push_back(frac.result());
    out.push_back(half.result());
  }

  return out;
}

}  // namespace burst
