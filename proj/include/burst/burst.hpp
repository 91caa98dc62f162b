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

#include "burst/error.hpp"
#include "burst/numerics.hpp"
#include "burst/mask.hpp"
#include "burst/reference.hpp"
#include "burst/partitioning.hpp"
#include "burst/ring_fabric.hpp"
#include "burst/burst_attention.hpp"
#include "burst/lm_head_fusion.hpp"
#include "burst/checkpoint_planner.hpp"
#include "burst/cost_model.hpp"
