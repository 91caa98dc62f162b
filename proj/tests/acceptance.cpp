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

// Acceptance suite: one line per criterion, exit status 1 if any fails.
// Expected values come from the dense oracles in oracles.hpp or from direct
// counting, never from the library's own reference paths.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "burst/burst.hpp"
#include "burst/cli.hpp"
#include "oracles.hpp"

using namespace burst;

namespace {

struct Criterion {
  bool ok = true;
  std::size_t cases = 0;
  double worst = 0.0;  // largest error / tolerance
  std::string detail;

  void check(bool cond, const std::string& what) {
    ++cases;
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
  void bound(double err, double tol, const std::string& what) {
    worst = std::isnan(err) ? err : std::max(worst, err / tol);
    check(err <= tol, what + " error " + std::to_string(err) + " > " + std::to_string(tol));
  }
};

int failures = 0;

void report(int id, const std::string& title, const Criterion& c, const std::string& extra = "") {
  char worst[32];
  std::snprintf(worst, sizeof worst, "%.3g", c.worst);
  std::printf("[%s] criterion %d: %s (%zu checks, worst error/tolerance %s%s)%s%s\n", c.ok ? "PASS" : "FAIL", id,
              title.c_str(), c.cases, worst, extra.empty() ? "" : (", " + extra).c_str(), c.ok ? "" : ": ",
              c.ok ? "" : c.detail.c_str());
  failures += c.ok ? 0 : 1;
}

std::string label(std::size_t n, std::size_t d, std::size_t g, LayoutKind lk, const MaskSpec& m) {
  std::ostringstream s;
  s << "N=" << n << " d=" << d << " G=" << g << " " << to_string(lk) << " " << m.name();
  return s.str();
}

struct MaskCase {
  MaskSpec spec;
  oracle::Visible vis;
};

std::vector<MaskCase> masks(std::size_t n, std::uint64_t seed) {
  const std::size_t w = n / 4 + 1;
  const MaskSpec blocks = MaskSpec::random_block_sparse(n, n / 4, seed);
  return {{MaskSpec::full(), oracle::full()},
          {MaskSpec::causal(), oracle::causal()},
          {MaskSpec::sliding_window(w), oracle::window(w)},
          {blocks, oracle::blocks(blocks.block_mask, n / 4)}};
}

bool layout_fits(LayoutKind lk, std::size_t n, std::size_t g) {
  return lk == LayoutKind::zigzag ? n % (2 * g) == 0 : n % g == 0;
}

double grads_diff(const AttentionGrads& a, const AttentionGrads& b) {
  return std::max({oracle::max_diff(a.dq, b.dq), oracle::max_diff(a.dk, b.dk), oracle::max_diff(a.dv, b.dv)});
}

double grads_diff(const AttentionGrads& a, const oracle::Grads& b) {
  return std::max({oracle::max_diff(a.dq, b.dq), oracle::max_diff(a.dk, b.dk), oracle::max_diff(a.dv, b.dv)});
}

// Criteria 1 to 3 share the distributed runs over the full grid.
void attention_grid() {
  Criterion fwd, bwd, comm;
  const auto t0 = std::chrono::steady_clock::now();
  std::uint64_t seed = 1000;
  for (std::size_t n : {8u, 16u, 32u, 64u}) {
    for (std::size_t d : {4u, 8u, 16u}) {
      for (std::size_t g : {1u, 2u, 4u, 8u}) {
        for (LayoutKind lk : {LayoutKind::contiguous, LayoutKind::zigzag, LayoutKind::striped}) {
          if (!layout_fits(lk, n, g)) continue;
          for (const MaskCase& mc : masks(n, seed)) {
            ++seed;
            const std::string where = label(n, d, g, lk, mc.spec);
            const Matrix q = seeded_random_matrix(n, d, seed * 4);
            const Matrix k = seeded_random_matrix(n, d, seed * 4 + 1);
            const Matrix v = seeded_random_matrix(n, d, seed * 4 + 2);
            const Matrix d_o = seeded_random_matrix(n, d, seed * 4 + 3);
            const oracle::Dense want = oracle::attention(q, k, v, mc.vis);
            const oracle::Grads want_g = oracle::attention_grads(q, k, v, d_o, mc.vis);

            const Cluster c = make_cluster({lk, n, g}, mc.spec);
            auto ring_states = scatter(c, q, k, v);
            const MessageLog f_log = distributed_forward(c, ring_states);
            const AttentionResult got = gather_forward(c, ring_states);
            fwd.bound(oracle::max_diff(got.o, want.o), 1e-10, where + " O");
            fwd.bound(oracle::max_diff(got.lse, want.lse), 1e-10, where + " Lse");

            auto burst_states = ring_states;
            const auto dos = scatter_matrix(c, d_o);
            const MessageLog r_log = ring_backward(c, ring_states, dos);
            const MessageLog b_log = burst_backward(c, burst_states, dos);
            const AttentionGrads ring_g = gather_grads(c, ring_states);
            const AttentionGrads burst_g = gather_grads(c, burst_states);
            bwd.bound(grads_diff(burst_g, ring_g), 1e-10, where + " burst vs ring");
            bwd.bound(grads_diff(ring_g, want_g), 1e-9, where + " ring vs oracle");
            bwd.bound(grads_diff(burst_g, want_g), 1e-9, where + " burst vs oracle");

            const std::size_t hops = g == 1 ? 0 : 1;
            for (std::size_t i = 0; i < g; ++i) {
              comm.check(f_log.sent[i].total() == hops * 2 * n * d && f_log.received[i].total() == hops * 2 * n * d,
                         where + " forward elements");
              comm.check(r_log.sent[i].total() == hops * 4 * n * d && r_log.received[i].total() == hops * 4 * n * d,
                         where + " ring backward elements");
              comm.check(b_log.sent[i].total() == hops * (3 * n * d + 2 * n) &&
                             b_log.received[i].total() == hops * (3 * n * d + 2 * n),
                         where + " burst backward elements");
            }
            comm.check(f_log.total_sent().total() == g * account_attention_comm(Pass::forward, n, d, g) &&
                           r_log.total_sent().total() == g * account_attention_comm(Pass::ring_backward, n, d, g) &&
                           b_log.total_sent().total() == g * account_attention_comm(Pass::burst_backward, n, d, g),
                       where + " log vs account_attention_comm");
          }
        }
      }
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fwd.check(secs < 60.0, "grid took " + std::to_string(secs) + " s");
  char runtime[48];
  std::snprintf(runtime, sizeof runtime, "grid runtime %.2f s", secs);
  report(1, "distributed forward matches the dense oracle on the full grid", fwd, runtime);

  // Finite differences of the dense oracle itself, on the small corner of the grid.
  for (std::size_t n : {8u, 16u}) {
    for (std::size_t d : {4u, 8u}) {
      for (const MaskCase& mc : masks(n, seed++)) {
        const Matrix q = seeded_random_matrix(n, d, seed * 7);
        const Matrix k = seeded_random_matrix(n, d, seed * 7 + 1);
        const Matrix v = seeded_random_matrix(n, d, seed * 7 + 2);
        const Matrix d_o = seeded_random_matrix(n, d, seed * 7 + 3);
        const oracle::Grads g = oracle::attention_grads(q, k, v, d_o, mc.vis);
        auto objective = [&](const Matrix& qq, const Matrix& kk, const Matrix& vv) {
          const Matrix o = oracle::attention(qq, kk, vv, mc.vis).o;
          double s = 0.0;
          for (std::size_t i = 0; i < o.size(); ++i) s += o.data()[i] * d_o.data()[i];
          return s;
        };
        const std::string where = "N=" + std::to_string(n) + " d=" + std::to_string(d) + " " + mc.spec.name();
        bwd.bound(oracle::rel_err(oracle::numeric_grad([&](const Matrix& x) { return objective(x, k, v); }, q), g.dq),
                  1e-5, where + " finite differences dQ");
        bwd.bound(oracle::rel_err(oracle::numeric_grad([&](const Matrix& x) { return objective(q, x, v); }, k), g.dk),
                  1e-5, where + " finite differences dK");
        bwd.bound(oracle::rel_err(oracle::numeric_grad([&](const Matrix& x) { return objective(q, k, x); }, v), g.dv),
                  1e-5, where + " finite differences dV");
      }
    }
  }
  report(2, "burst backward equals ring backward, the oracle and finite differences", bwd);

  const double ratio = static_cast<double>(account_attention_comm(Pass::burst_backward, 1024, 128, 8)) /
                       static_cast<double>(account_attention_comm(Pass::ring_backward, 1024, 128, 8));
  comm.check(ratio == (3.0 * 128 + 2) / (4.0 * 128), "d=128 backward ratio");
  comm.check(std::abs(ratio - 0.754) < 5e-4, "d=128 ratio is not about 0.754");
  comm.check(account_attention_comm(Pass::forward, 8, 4, 2) == 64 &&
                 account_attention_comm(Pass::ring_backward, 8, 4, 2) == 128 &&
                 account_attention_comm(Pass::burst_backward, 8, 4, 2) == 112,
             "N=8 d=4 G=2 closed forms");
  char r[48];
  std::snprintf(r, sizeof r, "d=128 burst/ring backward %.4f", ratio);
  report(3, "message logs equal 2Nd, 4Nd and 3Nd+2N per device", comm, r);
}

void table_times() {
  Criterion c;
  const double ring = analytic_comm_time(Strategy::ring, 3, 5, 8, 2);
  const double dbl = analytic_comm_time(Strategy::double_ring, 3, 5, 8, 2);
  const double burst = analytic_comm_time(Strategy::burst, 3, 5, 8, 2);
  c.check(ring == 240.0 && dbl == 128.0 && burst == 90.0, "analytic times at T_intra=3, T_inter=5");

  // Without overlap every step waits for its slowest hop: G C plus one hop
  // per step, intra or inter as the plan dictates.
  for (auto [nodes, per] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 8}, {2, 4}, {4, 2}, {8, 1}, {2, 2}}) {
    const Topology t{nodes, per, 2e-6, 7e-6, 3e10, 4e9};
    const std::size_t g = nodes * per;
    for (double payload : {64.0, 4096.0, 1e6}) {
      for (double comp : {0.0, 1e-5, 3e-4}) {
        const SimulationResult dr =
            simulate_ring(build_double_ring(t), {static_cast<std::size_t>(payload), 0}, OverlapKind::none, comp);
        const double want_dr = g * comp + (g - nodes) * (2e-6 + payload / 3e10) +
                               (nodes > 1 ? nodes : 0) * (7e-6 + payload / 4e9) +
                               (nodes == 1 ? 1 : 0) * (2e-6 + payload / 3e10);
        c.bound(std::abs(dr.timeline.makespan - want_dr) / want_dr, 1e-9, "double ring serialized sum");
        const SimulationResult fr =
            simulate_ring(build_flat_ring(t), {static_cast<std::size_t>(payload), 0}, OverlapKind::none, comp);
        const double hop = nodes > 1 ? 7e-6 + payload / 4e9 : 2e-6 + payload / 3e10;
        const double want_fr = g * (comp + hop);
        c.bound(std::abs(fr.timeline.makespan - want_fr) / want_fr, 1e-9, "flat ring serialized sum");
      }
    }
  }

  // 100 random topologies with the intra link at least as fast as the inter one.
  const Matrix r = seeded_random_matrix(100, 6, 2026);
  auto u = [&](std::size_t i, std::size_t j) { return 0.5 * (r(i, j) + 1.0); };
  std::size_t ordered = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t nodes = 2 + static_cast<std::size_t>(u(i, 0) * 7);
    const std::size_t per = 1 + static_cast<std::size_t>(u(i, 1) * 8);
    const double bw_e = 1e9 * (1.0 + 20.0 * u(i, 2));
    const double bw_i = bw_e * (1.0 + 10.0 * u(i, 3));
    const double lat_i = 1e-6 * (0.1 + u(i, 4));
    const double lat_e = lat_i * (1.0 + 5.0 * u(i, 5));
    const Topology t{nodes, per, lat_i, lat_e, bw_i, bw_e};
    const double p = 1e3 * (1.0 + 100.0 * u(i, 2) * u(i, 3));
    const double a = analytic_comm_time(Strategy::burst, t, p);
    const double b = analytic_comm_time(Strategy::double_ring, t, p);
    const double cc = analytic_comm_time(Strategy::ring, t, p);
    ordered += (a <= b && b <= cc) ? 1 : 0;
  }
  c.check(ordered == 100, std::to_string(100 - ordered) + " grid points break burst <= double_ring <= ring");
  report(4, "communication-time model: 240/128/90, serialized sums, strategy ordering", c);
}

void overlap_schedules() {
  Criterion c;
  for (auto [nodes, per] : std::vector<std::pair<std::size_t, std::size_t>>{{2, 4}, {2, 2}, {4, 2}, {1, 4}}) {
    const std::size_t g = nodes * per;
    const std::size_t n = 4 * g, d = 8;
    const Topology t{nodes, per, 1e-6, 5e-6, 1e11, 1e10};
    const Cluster cl = make_cluster({LayoutKind::zigzag, n, g}, MaskSpec::causal(), t, RingKind::double_ring);
    const Matrix q = seeded_random_matrix(n, d, 1), k = seeded_random_matrix(n, d, 2);
    const Matrix v = seeded_random_matrix(n, d, 3), d_o = seeded_random_matrix(n, d, 4);
    const std::string where = std::to_string(nodes) + "x" + std::to_string(per);

    auto barrier = scatter(cl, q, k, v);
    distributed_forward(cl, barrier);
    const AttentionResult base_fwd = gather_forward(cl, barrier);
    const auto dos = scatter_matrix(cl, d_o);
    auto ring_base = barrier, burst_base = barrier;
    ring_backward(cl, ring_base, dos);
    burst_backward(cl, burst_base, dos);
    const AttentionGrads ring_g = gather_grads(cl, ring_base), burst_g = gather_grads(cl, burst_base);

    for (OverlapKind ok : {OverlapKind::none, OverlapKind::activation, OverlapKind::gradient}) {
      const std::string w = where + " " + to_string(ok);
      ScheduleOptions opt{ok, 1e-9, 1e-7};
      auto s = scatter(cl, q, k, v);
      const ScheduledRun f = run_with_schedule(Pass::forward, cl, s, {}, opt);
      const AttentionResult fo = gather_forward(cl, s);
      c.bound(std::max(oracle::max_diff(fo.o, base_fwd.o), oracle::max_diff(fo.lse, base_fwd.lse)), 1e-12,
              w + " forward");
      c.check(f.sim.timeline.violations().empty(), w + " forward timeline violations");
      for (Pass pass : {Pass::ring_backward, Pass::burst_backward}) {
        auto st = s;
        const ScheduledRun b = run_with_schedule(pass, cl, st, dos, opt);
        c.bound(grads_diff(gather_grads(cl, st), pass == Pass::ring_backward ? ring_g : burst_g), 1e-12,
                w + " " + to_string(pass));
        c.check(b.sim.timeline.violations().empty(), w + " backward timeline violations");
        if (ok != OverlapKind::gradient) continue;

        // Warm-up compute first, inter sends only after the node's round of intra work.
        const auto& ev = b.sim.timeline.events;
        std::vector<double> warm(g, -1.0);
        std::vector<std::vector<double>> round_done(nodes, std::vector<double>(g, 0.0));
        for (const auto& e : ev) {
          if (e.kind == EventKind::compute && e.step == 0) warm[e.device] = e.end;
          if (e.kind == EventKind::compute || e.kind == EventKind::send_intra) {
            double& rd = round_done[t.node_of(e.device)][e.round];
            rd = std::max(rd, e.end);
          }
        }
        for (const auto& e : ev) {
          if (e.kind == EventKind::send_intra) {
            c.check(warm[e.device] >= 0.0 && e.start >= warm[e.device], w + " intra send before warm-up compute");
          }
          if (e.kind == EventKind::send_inter) {
            c.check(e.start >= round_done[t.node_of(e.device)][e.round],
                    w + " inter send before the node's intra exchange finished");
          }
        }
      }
    }
  }
  report(5, "overlap schedules keep their ordering and never change results", c);
}

// Token ids per device, written from the layout definitions.
std::vector<std::vector<std::size_t>> oracle_layout(LayoutKind lk, std::size_t n, std::size_t g, std::size_t block) {
  std::vector<std::vector<std::size_t>> dev(g);
  for (std::size_t t = 1; t <= n; ++t) {
    std::size_t owner = 0;
    switch (lk) {
      case LayoutKind::contiguous:
        owner = (t - 1) / (n / g);
        break;
      case LayoutKind::zigzag: {
        const std::size_t chunk = (t - 1) / (n / (2 * g));
        owner = chunk < g ? chunk : 2 * g - 1 - chunk;
        break;
      }
      case LayoutKind::striped:
        owner = (t - 1) % g;
        break;
      case LayoutKind::block_striped:
        owner = ((t - 1) % block) / (block / g);
        break;
    }
    dev[owner].push_back(t);
  }
  return dev;
}

struct Counts {
  std::vector<std::size_t> device;
  std::vector<std::vector<std::size_t>> step;  // [device][ring step]
};

Counts count(const std::vector<std::vector<std::size_t>>& dev, const oracle::Visible& vis) {
  const std::size_t g = dev.size();
  Counts c{std::vector<std::size_t>(g, 0), std::vector<std::vector<std::size_t>>(g, std::vector<std::size_t>(g, 0))};
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t s = 0; s < g; ++s) {
      const auto& keys = dev[(i + g - s) % g];
      for (std::size_t qt : dev[i])
        for (std::size_t kt : keys) c.step[i][s] += vis(qt, kt) ? 1 : 0;
      c.device[i] += c.step[i][s];
    }
  }
  return c;
}

std::size_t spread(const std::vector<std::size_t>& v) {
  return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
}

void workload_balance() {
  Criterion c;
  for (std::size_t n : {8u, 16u, 32u, 64u, 128u}) {
    for (std::size_t g : {1u, 2u, 4u, 8u}) {
      const std::string where = "N=" + std::to_string(n) + " G=" + std::to_string(g);
      if (n % (2 * g) == 0) {
        const Counts z = count(oracle_layout(LayoutKind::zigzag, n, g, 0), oracle::causal());
        c.check(spread(z.device) == 0, where + " zigzag per-device totals differ");
        for (std::size_t s = 0; s < g; ++s) {
          std::vector<std::size_t> col;
          for (std::size_t i = 0; i < g; ++i) col.push_back(z.step[i][s]);
          c.check(spread(col) <= n / (2 * g), where + " zigzag step spread");
        }
        const WorkloadReport lib = balance_report({LayoutKind::zigzag, n, g}, MaskSpec::causal());
        c.check(lib.per_device_pairs == z.device && lib.per_step_pairs == z.step, where + " zigzag report");
      }
      const Counts s = count(oracle_layout(LayoutKind::striped, n, g, 0), oracle::causal());
      c.check(spread(s.device) <= (g - 1) * n / g, where + " striped spread");
      c.check(balance_report({LayoutKind::striped, n, g}, MaskSpec::causal()).per_device_pairs == s.device,
              where + " striped report");

      const Counts ct = count(oracle_layout(LayoutKind::contiguous, n, g, 0), oracle::causal());
      if (g > 1) c.check(ct.device[g - 1] >= 2 * ct.device[0], where + " contiguous causal not imbalanced");
      c.check(balance_report({LayoutKind::contiguous, n, g}, MaskSpec::causal()).per_device_pairs == ct.device,
              where + " contiguous report");

      for (std::size_t block : {g, 2 * g, 4 * g}) {
        if (n % block != 0) continue;
        for (std::uint64_t seed : {1u, 2u, 3u}) {
          const MaskSpec m = MaskSpec::random_block_sparse(n, block, seed);
          const Counts b = count(oracle_layout(LayoutKind::block_striped, n, g, block), oracle::blocks(m.block_mask, block));
          c.check(spread(b.device) == 0, where + " block_striped totals differ");
          c.check(balance_report({LayoutKind::block_striped, n, g, block}, m).per_device_pairs == b.device,
                  where + " block_striped report");
        }
      }
    }
  }
  report(6, "workload balance across layouts", c);
}

double total(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

void lm_head() {
  Criterion c;
  std::uint64_t seed = 500;
  for (std::size_t n : {1u, 6u, 17u, 64u}) {
    for (std::size_t v : {2u, 11u, 64u, 257u}) {
      for (std::size_t d : {1u, 4u, 16u}) {
        const Matrix h = seeded_random_matrix(n, d, seed++);
        const Matrix w = seeded_random_matrix(v, d, seed++);
        std::vector<std::size_t> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = (i * 7 + seed) % v;
        const oracle::Lm want = oracle::lm_head(h, w, y);
        for (FusionConfig cfg : {FusionConfig{1, 1}, FusionConfig{2, 3}, FusionConfig{5, 16}, FusionConfig{n, v},
                                 FusionConfig{64, 1000}}) {
          const std::string where = "N=" + std::to_string(n) + " v=" + std::to_string(v) + " d=" + std::to_string(d) +
                                    " Bs=" + std::to_string(cfg.b_s) + " Bv=" + std::to_string(cfg.b_v);
          const FusedLossResult r = fused_lmhead_loss(h, w, y, cfg);
          c.bound(std::max({oracle::max_diff(r.loss, want.loss), oracle::max_diff(r.dh, want.dh),
                            oracle::max_diff(r.dw, want.dw)}),
                  1e-10, where + " fused vs naive");
          const std::size_t bs = std::min(cfg.b_s, n), bv = std::min(cfg.b_v, v);
          c.check(r.peak_aux_elements <= bs * v + bs * d + bv * d + 2 * bs, where + " aux bound");
          if (cfg.b_s < n) c.check(r.peak_logits_elements < n * v, where + " logits not below N v");
          if (n * d <= 64 && v * d <= 256) {
            auto fh = [&](const Matrix& x) { return total(oracle::lm_head(x, w, y).loss); };
            auto fw = [&](const Matrix& x) { return total(oracle::lm_head(h, x, y).loss); };
            c.bound(oracle::rel_err(oracle::numeric_grad(fh, h), r.dh), 1e-5, where + " finite differences dH");
            c.bound(oracle::rel_err(oracle::numeric_grad(fw, w), r.dw), 1e-5, where + " finite differences dW");
          }
        }
      }
    }
  }
  report(7, "fused LM head matches the naive head within its memory bound", c);
}

void checkpointing() {
  Criterion c;
  for (const MaskCase& mc : masks(16, 77)) {
    for (const CheckpointPolicy& p : {CheckpointPolicy::full(), CheckpointPolicy::selective(), CheckpointPolicy::sequence(0.5)}) {
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        const ToyReport t = execute_toy(p, 16, 8, mc.spec, seed);
        c.bound(t.max_diff(), 1e-10, p.name() + " " + mc.spec.name());
      }
    }
  }
  for (std::size_t n : {16u, 32u, 64u}) {
    const ToyReport t = execute_toy(CheckpointPolicy::sequence(0.5), n, 4, MaskSpec::causal(), n);
    c.bound(t.max_diff(), 1e-10, "causal toy N=" + std::to_string(n));
    c.check(t.recompute_pairs == (n / 2) * (n / 2 + 1) / 2, "causal toy recompute pairs");
  }
  for (std::size_t n : {2u, 16u, 64u, 1000u, 4096u}) {
    const PlanReport r = plan(CheckpointPolicy::sequence(0.5), n, 64, MaskSpec::causal());
    const double want = ((n / 2.0) * (n / 2.0 + 1) / 2.0) / (n * (n + 1) / 2.0);
    c.bound(std::abs(r.recompute_fraction - want), 1e-15, "causal fraction N=" + std::to_string(n));
    const PlanReport sel = plan(CheckpointPolicy::selective(), n, 64, MaskSpec::causal());
    c.check(2 * r.attention_extra_elements == sel.attention_extra_elements, "half of selective++ storage");
  }
  report(8, "checkpoint policies reproduce exact gradients and the causal cost model", c);
}

void determinism() {
  Criterion c;
  for (std::uint64_t seed : {0u, 7u, 12345u}) {
    for (const char* fmt : {"table", "json", "csv"}) {
      std::string first;
      for (const char* threads : {"1", "4", "1", "3"}) {
        std::ostringstream out, err;
        const int code = cli::run_cli({"verify", "--seed", std::to_string(seed), "--threads", threads, "--format", fmt},
                                      out, err);
        c.check(code == 0, "verify --seed " + std::to_string(seed) + " exited " + std::to_string(code));
        if (first.empty()) first = out.str();
        c.check(!first.empty() && out.str() == first,
                "verify --seed " + std::to_string(seed) + " --format " + fmt + " differs with " + threads + " threads");
      }
    }
  }
  report(9, "verify output is byte-identical across runs and thread counts", c);
}

}  // namespace

int main() {
  attention_grid();
  table_times();
  overlap_schedules();
  workload_balance();
  lm_head();
  checkpointing();
  determinism();
  return failures == 0 ? 0 : 1;
}
