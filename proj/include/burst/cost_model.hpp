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

// Strategy comparison: communication volume, closed-form and simulated
// communication time, and per-layer memory model for each scenario.
//
// Strategy to fabric mapping:
//   ring         flat ring; K, V stream in both passes, dK, dV trail compute
//   double_ring  double ring; K, V stream, dK, dV are not overlapped
//   burst        double ring; forward as above, backward circulates Q-side
//                payloads with the dQ accumulator trailing compute

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "burst/burst_attention.hpp"
#include "burst/checkpoint_planner.hpp"
#include "burst/error.hpp"
#include "burst/lm_head_fusion.hpp"
#include "burst/mask.hpp"
#include "burst/partitioning.hpp"
#include "burst/ring_fabric.hpp"

namespace burst {

struct Scenario {
  std::string name;
  std::size_t n = 0;
  std::size_t d = 0;
  Topology topology;
  Strategy strategy = Strategy::burst;
  LayoutKind layout = LayoutKind::zigzag;
  std::size_t block_len = 0;
  MaskSpec mask = MaskSpec::causal();
  CheckpointPolicy checkpoint = CheckpointPolicy::sequence(0.5);
  std::size_t vocab = 0;  // 0 skips the LM head term
  FusionConfig lm_head{1, 1};
  double seconds_per_pair = 1e-9;

  std::size_t g() const noexcept { return topology.devices(); }
};

struct StrategyRow {
  std::string name;
  Strategy strategy = Strategy::ring;
  std::size_t comm_forward_elements = 0;   // per device
  std::size_t comm_backward_elements = 0;  // per device
  double analytic_seconds = 0.0;           // forward + backward, communication only
  double simulated_forward_seconds = 0.0;
  double simulated_backward_seconds = 0.0;
  double serial_bound_seconds = 0.0;  // no overlap at all, both passes
  double lane_bound_seconds = 0.0;    // busiest lane, both passes
  std::size_t checkpoint_elements = 0;
  std::size_t lm_head_elements = 0;
  double comm_backward_ratio = 1.0;  // vs the first scenario
  double analytic_ratio = 1.0;
  double simulated_ratio = 1.0;

  double simulated_seconds() const { return simulated_forward_seconds + simulated_backward_seconds; }
  std::size_t memory_elements() const { return checkpoint_elements + lm_head_elements; }
};

struct ComparisonReport {
  std::vector<StrategyRow> rows;
};

inline StrategyRow evaluate(const Scenario& s) {
  s.topology.validate();
  ShardLayout layout{s.layout, s.n, s.g(), s.block_len};
  const RingKind ring = s.strategy == Strategy::ring ? RingKind::flat : RingKind::double_ring;
  const Cluster c = make_cluster(layout, s.mask, s.topology, ring);

  StrategyRow row;
  row.name = s.name.empty() ? to_string(s.strategy) : s.name;
  row.strategy = s.strategy;
  const Pass bwd = s.strategy == Strategy::burst ? Pass::burst_backward : Pass::ring_backward;
  row.comm_forward_elements = account_attention_comm(Pass::forward, s.n, s.d, s.g());
  row.comm_backward_elements = account_attention_comm(bwd, s.n, s.d, s.g());
  row.analytic_seconds =
      analytic_comm_time(s.strategy, s.topology, static_cast<double>(s.n / s.g() * s.d));

  const OverlapKind bwd_kind = s.strategy == Strategy::double_ring ? OverlapKind::activation : OverlapKind::gradient;
  ScheduleOptions opt;
  opt.seconds_per_pair = s.seconds_per_pair;
  for (const Pass pass : {Pass::forward, bwd}) {
    opt.overlap = pass == Pass::forward ? OverlapKind::activation : bwd_kind;
    const auto table = detail::compute_table(c, pass, opt);
    const StepPayload payload = step_payload(pass, s.n, s.d, s.g());
    const SimulationResult sim = simulate_ring(c.plan, payload, opt.overlap, table);
    (pass == Pass::forward ? row.simulated_forward_seconds : row.simulated_backward_seconds) =
        sim.timeline.makespan;
    row.serial_bound_seconds += serialized_time_split(c.plan, payload, table);
    row.lane_bound_seconds += lane_lower_bound(sim);
  }

  row.checkpoint_elements = plan(s.checkpoint, s.n, s.d, s.mask).stored_elements;
  if (s.vocab > 0) row.lm_head_elements = memory_footprint(s.n, s.vocab, s.d, s.lm_head).fused_working_set;
  return row;
}

namespace detail {

inline double ratio(double a, double b) {
  if (b == 0.0) return a == 0.0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  return a / b;
}

}  // namespace detail

inline ComparisonReport compare(const std::vector<Scenario>& scenarios) {
  detail::require(!scenarios.empty(), "compare: no scenarios");
  ComparisonReport rep;
  for (const auto& s : scenarios) rep.rows.push_back(evaluate(s));
  const StrategyRow& base = rep.rows.front();
  for (auto& r : rep.rows) {
    r.comm_backward_ratio = detail::ratio(static_cast<double>(r.comm_backward_elements),
                                          static_cast<double>(base.comm_backward_elements));
    r.analytic_ratio = detail::ratio(r.analytic_seconds, base.analytic_seconds);
    r.simulated_ratio = detail::ratio(r.simulated_seconds(), base.simulated_seconds());
  }
  return rep;
}

// The three strategies on one shared scenario, ring first.
inline std::vector<Scenario> strategy_sweep(Scenario s) {
  std::vector<Scenario> out;
  for (Strategy st : {Strategy::ring, Strategy::double_ring, Strategy::burst}) {
    s.strategy = st;
    s.name = to_string(st);
    out.push_back(s);
  }
  return out;
}

}  // namespace burst
