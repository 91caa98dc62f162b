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

#include "burst/checkpoint_planner.hpp"

using namespace burst;

TEST(Plan, CausalHalfSplitFractionIsExact) {
  for (std::size_t n : {2u, 4u, 16u, 64u, 256u, 1024u}) {
    const PlanReport r = plan(CheckpointPolicy::sequence(0.5), n, 8, MaskSpec::causal());
    const std::size_t h = n / 2;
    EXPECT_EQ(r.recompute_pairs, h * (h + 1) / 2);
    EXPECT_EQ(r.total_pairs, n * (n + 1) / 2);
    const double want = (h * (h + 1) / 2.0) / (n * (n + 1) / 2.0);
    EXPECT_DOUBLE_EQ(r.recompute_fraction, want);
  }
  const PlanReport big = plan(CheckpointPolicy::sequence(0.5), 4096, 1, MaskSpec::causal());
  EXPECT_NEAR(big.recompute_fraction, 0.25, 1e-3);
}

TEST(Plan, PolicyEndpoints) {
  const std::size_t n = 32, d = 8;
  const PlanReport full = plan(CheckpointPolicy::full(), n, d, MaskSpec::causal());
  EXPECT_EQ(full.stored_elements, n * d);
  EXPECT_EQ(full.recompute_pairs, full.total_pairs);
  EXPECT_DOUBLE_EQ(full.recompute_fraction, 1.0);
  const PlanReport sel = plan(CheckpointPolicy::selective(), n, d, MaskSpec::causal());
  EXPECT_EQ(sel.stored_elements, 2 * n * d);
  EXPECT_EQ(sel.recompute_pairs, 0u);
  // s close to 1 approaches full recompute.
  const PlanReport near = plan(CheckpointPolicy::sequence(31.0 / 32.0), n, d, MaskSpec::causal());
  EXPECT_EQ(near.stored_elements, n * d + d);
  EXPECT_EQ(near.recompute_pairs, full.recompute_pairs - n);
}

TEST(Plan, HalfSplitHalvesSelectiveExtra) {
  for (std::size_t n : {8u, 64u, 4096u}) {
    for (std::size_t d : {1u, 64u, 128u}) {
      const PlanReport seq = plan(CheckpointPolicy::sequence(0.5), n, d, MaskSpec::causal());
      const PlanReport sel = plan(CheckpointPolicy::selective(), n, d, MaskSpec::causal());
      EXPECT_EQ(2 * seq.attention_extra_elements, sel.attention_extra_elements);
    }
  }
}

TEST(Plan, MonotoneAndLinearInSplit) {
  const std::size_t n = 64, d = 16;
  std::size_t prev_pairs = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const double s = static_cast<double>(k) / static_cast<double>(n);
    const PlanReport r = plan(CheckpointPolicy::sequence(s), n, d, MaskSpec::causal());
    EXPECT_GT(r.recompute_pairs, prev_pairs);
    prev_pairs = r.recompute_pairs;
    EXPECT_EQ(r.recompute_pairs, k * (k + 1) / 2);  // s^2 N^2 / 2 + sN / 2
    EXPECT_EQ(r.stored_elements, n * d + (n - k) * d);
  }
}

TEST(Plan, OtherMasksCountByQuery) {
  const std::size_t n = 16;
  // Full mask: every recomputed query row has N keys.
  EXPECT_EQ(plan(CheckpointPolicy::sequence(0.25), n, 2, MaskSpec::full()).recompute_pairs, 4 * n);
  // Window 3: rows 1..8 see 1, 2, 3, 3, 3, 3, 3, 3 keys.
  EXPECT_EQ(plan(CheckpointPolicy::sequence(0.5), n, 2, MaskSpec::sliding_window(3)).recompute_pairs, 21u);
}

TEST(Plan, Errors) {
  EXPECT_THROW(plan(CheckpointPolicy::sequence(0.3), 16, 4, MaskSpec::causal()), PreconditionError);
  EXPECT_THROW(plan(CheckpointPolicy::sequence(0.0), 16, 4, MaskSpec::causal()), PreconditionError);
  EXPECT_THROW(plan(CheckpointPolicy::sequence(1.0), 16, 4, MaskSpec::causal()), PreconditionError);
  EXPECT_THROW(plan(CheckpointPolicy::sequence(0.5), 16, 4, MaskSpec::sliding_window(0)), PreconditionError);
  EXPECT_EQ(CheckpointPolicy::sequence().split, 0.5);
}

TEST(Toy, EveryPolicyReproducesBaseline) {
  for (const MaskSpec& m : {MaskSpec::causal(), MaskSpec::full(), MaskSpec::sliding_window(4)}) {
    for (const CheckpointPolicy& p :
         {CheckpointPolicy::full(), CheckpointPolicy::selective(), CheckpointPolicy::sequence(0.5),
          CheckpointPolicy::sequence(0.25)}) {
      const ToyReport r = execute_toy(p, 16, 4, m, 5);
      EXPECT_LE(r.max_diff(), 1e-10) << p.name() << " " << m.name();
      const PlanReport pl = plan(p, 16, 4, m);
      EXPECT_EQ(r.recompute_pairs, pl.recompute_pairs);
      EXPECT_EQ(r.stored_elements, pl.stored_elements);
      EXPECT_DOUBLE_EQ(r.recompute_fraction, pl.recompute_fraction);
    }
  }
}

TEST(Toy, SelectiveRecomputesNothingAndFullRecomputesAll) {
  const ToyReport sel = execute_toy(CheckpointPolicy::selective(), 16, 4, MaskSpec::causal(), 9);
  EXPECT_EQ(sel.recompute_pairs, 0u);
  EXPECT_EQ(sel.recomputed_rows, 0u);
  const ToyReport full = execute_toy(CheckpointPolicy::full(), 16, 4, MaskSpec::causal(), 9);
  EXPECT_EQ(full.recompute_pairs, 136u);
  EXPECT_EQ(full.recomputed_rows, 16u);
  const ToyReport half = execute_toy(CheckpointPolicy::sequence(0.5), 16, 4, MaskSpec::causal(), 9);
  EXPECT_EQ(half.recompute_pairs, 36u);
}

TEST(Toy, Errors) {
  EXPECT_THROW(execute_toy(CheckpointPolicy::full(), 65, 4, MaskSpec::causal(), 1), PreconditionError);
  EXPECT_THROW(execute_toy(CheckpointPolicy::sequence(0.3), 16, 4, MaskSpec::causal(), 1), PreconditionError);
}
