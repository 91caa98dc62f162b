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

#include <gtest/gtest.h>

#include <cmath>

#include "burst/cost_model.hpp"

using namespace burst;

namespace {

// T_intra = 1 + 4/2 = 3, T_inter = 1 + 4/1 = 5 at P = (8/8)*4.
Scenario table_scenario() {
  Scenario s;
  s.n = 8;
  s.d = 4;
  s.topology = {2, 4, 1.0, 1.0, 2.0, 1.0};
  s.layout = LayoutKind::contiguous;
  s.mask = MaskSpec::full();
  return s;
}

}  // namespace

TEST(Compare, AnalyticTimesAndRatios) {
  const ComparisonReport r = compare(strategy_sweep(table_scenario()));
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].name, "ring");
  EXPECT_DOUBLE_EQ(r.rows[0].analytic_seconds, 240.0);
  EXPECT_DOUBLE_EQ(r.rows[1].analytic_seconds, 128.0);
  EXPECT_DOUBLE_EQ(r.rows[2].analytic_seconds, 90.0);
  EXPECT_DOUBLE_EQ(r.rows[2].analytic_ratio, 90.0 / 240.0);
  EXPECT_EQ(r.rows[0].comm_forward_elements, 2u * 8 * 4);
  EXPECT_EQ(r.rows[1].comm_backward_elements, 4u * 8 * 4);
  EXPECT_EQ(r.rows[2].comm_backward_elements, 3u * 8 * 4 + 2 * 8);
}

TEST(Compare, BackwardRatioAtWideHeads) {
  Scenario s = table_scenario();
  s.n = 64;
  s.d = 128;
  s.topology = {1, 4, 1e-6, 1e-6, 1e11, 1e11};
  const ComparisonReport r = compare(strategy_sweep(s));
  EXPECT_DOUBLE_EQ(r.rows[2].comm_backward_ratio, 386.0 / 512.0);
  EXPECT_NEAR(r.rows[2].comm_backward_ratio, 0.7539, 1e-4);
  EXPECT_DOUBLE_EQ(r.rows[1].comm_backward_ratio, 1.0);
}

TEST(Compare, SimulatedWithinBounds) {
  for (const Topology& t : {Topology{2, 4, 1e-6, 5e-6, 1e11, 1e10}, Topology{1, 4, 1e-6, 1e-6, 1e11, 1e11},
                            Topology{4, 2, 2e-6, 2e-5, 5e10, 5e9}}) {
    Scenario s;
    s.n = 64;
    s.d = 16;
    s.topology = t;
    s.vocab = 100;
    s.lm_head = {8, 16};
    for (const StrategyRow& row : compare(strategy_sweep(s)).rows) {
      EXPECT_GE(row.simulated_seconds() * (1 + 1e-12), row.lane_bound_seconds) << row.name;
      EXPECT_LE(row.simulated_seconds(), row.serial_bound_seconds * (1 + 1e-12)) << row.name;
      EXPECT_EQ(row.checkpoint_elements, 64u * 16u + 32u * 16u);
      EXPECT_EQ(row.lm_head_elements, fused_aux_bound(64, 100, 16, {8, 16}));
      EXPECT_EQ(row.memory_elements(), row.checkpoint_elements + row.lm_head_elements);
    }
  }
}

TEST(Compare, Deterministic) {
  Scenario s;
  s.n = 32;
  s.d = 8;
  s.topology = {2, 2, 1e-6, 5e-6, 1e11, 1e10};
  const ComparisonReport a = compare(strategy_sweep(s));
  const ComparisonReport b = compare(strategy_sweep(s));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.rows[i].simulated_forward_seconds, b.rows[i].simulated_forward_seconds);
    EXPECT_EQ(a.rows[i].simulated_backward_seconds, b.rows[i].simulated_backward_seconds);
    EXPECT_EQ(a.rows[i].analytic_seconds, b.rows[i].analytic_seconds);
  }
}

TEST(Compare, UniformLinksCollapseTheMax) {
  // Same link everywhere: with one GPU per node every hop is inter-node and
  // the two-level ring costs exactly what the flat ring does.
  Scenario s = table_scenario();
  s.topology = {8, 1, 1.0, 1.0, 1.0, 1.0};
  const ComparisonReport r = compare(strategy_sweep(s));
  EXPECT_DOUBLE_EQ(r.rows[1].analytic_seconds, r.rows[0].analytic_seconds);
  // Two nodes of four on uniform links: max((G-n)T, nT) = 6T, sum = 8T.
  s.topology = {2, 4, 1.0, 1.0, 1.0, 1.0};
  const double t = 1.0 + 4.0;
  const ComparisonReport u = compare(strategy_sweep(s));
  EXPECT_DOUBLE_EQ(u.rows[0].analytic_seconds, 6 * 8 * t);
  EXPECT_DOUBLE_EQ(u.rows[1].analytic_seconds, 4 * 6 * t + 2 * 8 * t);
  EXPECT_DOUBLE_EQ(u.rows[2].analytic_seconds, 5 * 6 * t);
}

TEST(Compare, ErrorsPropagate) {
  EXPECT_THROW(compare({}), PreconditionError);
  Scenario s = table_scenario();
  s.n = 12;
  EXPECT_THROW(compare(strategy_sweep(s)), PreconditionError);
  s = table_scenario();
  s.topology.bw_inter = 0.0;
  EXPECT_THROW(evaluate(s), PreconditionError);
  EXPECT_TRUE(std::isnan(detail::ratio(1.0, 0.0)));
  EXPECT_EQ(detail::ratio(0.0, 0.0), 1.0);
}
