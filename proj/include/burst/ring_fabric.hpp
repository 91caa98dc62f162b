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

// Simulated communication fabric for ring-style context parallelism.
//
// A RingPlan fixes, for every device and ring step, which shard the device
// computes on and where the circulating payload goes next. Numeric passes move
// real payloads along a plan; simulate_ring replays the same plan on an event
// timeline with per-device lanes (one compute, one intra-node, one inter-node)
// to price a schedule. Devices are 0-based here; partitioning's 1-based device
// i sits at ring position i - 1.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "burst/error.hpp"

namespace burst {

enum class Channel { local, intra, inter };
enum class RingKind { flat, double_ring };
enum class OverlapKind { none, activation, gradient };
enum class EventKind { compute, send_intra, send_inter, recv, buffer_swap };
enum class Flow { none, activation, gradient, combined };

inline std::string to_string(RingKind k) { return k == RingKind::flat ? "flat" : "double_ring"; }

inline std::string to_string(OverlapKind k) {
  switch (k) {
    case OverlapKind::none:
      return "none";
    case OverlapKind::activation:
      return "activation";
    case OverlapKind::gradient:
      return "gradient";
  }
  return "?";
}

inline std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::compute:
      return "compute";
    case EventKind::send_intra:
      return "send_intra";
    case EventKind::send_inter:
      return "send_inter";
    case EventKind::recv:
      return "recv";
    case EventKind::buffer_swap:
      return "buffer_swap";
  }
  return "?";
}

inline std::string to_string(Flow f) {
  switch (f) {
    case Flow::none:
      return "none";
    case Flow::activation:
      return "activation";
    case Flow::gradient:
      return "gradient";
    case Flow::combined:
      return "combined";
  }
  return "?";
}

// Cluster shape. Latencies in seconds, bandwidths in elements per second.
struct Topology {
  std::size_t num_nodes = 1;
  std::size_t gpus_per_node = 1;
  double lat_intra = 0.0;
  double lat_inter = 0.0;
  double bw_intra = 1.0;
  double bw_inter = 1.0;

  static Topology single_node(std::size_t gpus, double lat = 0.0, double bw = 1.0) {
    return {1, gpus, lat, lat, bw, bw};
  }

  std::size_t devices() const noexcept { return num_nodes * gpus_per_node; }
  std::size_t node_of(std::size_t device) const noexcept { return device / gpus_per_node; }
  std::size_t local_of(std::size_t device) const noexcept { return device % gpus_per_node; }
  std::size_t device_at(std::size_t node, std::size_t local) const noexcept {
    return node * gpus_per_node + local;
  }

  double t_intra(double elements) const noexcept { return lat_intra + elements / bw_intra; }
  double t_inter(double elements) const noexcept { return lat_inter + elements / bw_inter; }

  double transfer_time(Channel c, double elements) const noexcept {
    switch (c) {
      case Channel::local:
        return 0.0;
      case Channel::intra:
        return t_intra(elements);
      case Channel::inter:
        return t_inter(elements);
    }
    return 0.0;
  }

  void validate() const {
    detail::require(num_nodes >= 1 && gpus_per_node >= 1, "topology: node and GPU counts must be positive");
    detail::require(lat_intra >= 0.0 && lat_inter >= 0.0, "topology: latencies must be non-negative");
    detail::require(bw_intra > 0.0 && bw_inter > 0.0, "topology: bandwidths must be positive");
  }
};

struct RingPlan {
  RingKind kind = RingKind::flat;
  Topology topology;
  std::size_t rounds = 1;           // outer (inter-node) rounds
  std::size_t steps_per_round = 1;  // compute steps per outer round
  // visit[i][k]: origin of the payload device i computes on at step k.
  std::vector<std::vector<std::size_t>> visit;
  // next[i][k]: where device i forwards that payload after step k.
  std::vector<std::vector<std::size_t>> next;
  // Device ids of each node's sub-ring, and of each inter-node ring (one per
  // local GPU index, so every NIC carries traffic).
  std::vector<std::vector<std::size_t>> sub_rings;
  std::vector<std::vector<std::size_t>> inter_rings;

  std::size_t devices() const noexcept { return topology.devices(); }
  std::size_t steps() const noexcept { return topology.devices(); }

  Channel channel(std::size_t from, std::size_t to) const noexcept {
    if (from == to) return Channel::local;
    return topology.node_of(from) == topology.node_of(to) ? Channel::intra : Channel::inter;
  }
};

namespace detail {

inline void fill_rings(RingPlan& plan) {
  const Topology& t = plan.topology;
  plan.sub_rings.assign(t.num_nodes, {});
  for (std::size_t n = 0; n < t.num_nodes; ++n)
    for (std::size_t l = 0; l < t.gpus_per_node; ++l) plan.sub_rings[n].push_back(t.device_at(n, l));
  plan.inter_rings.assign(t.gpus_per_node, {});
  for (std::size_t l = 0; l < t.gpus_per_node; ++l)
    for (std::size_t n = 0; n < t.num_nodes; ++n) plan.inter_rings[l].push_back(t.device_at(n, l));
}

}  // namespace detail

// Single global ring 0 -> 1 -> ... -> G-1 -> 0; device i computes on shard
// i - k at step k and the last hop returns each payload to its owner.
inline RingPlan build_flat_ring(const Topology& topology) {
  topology.validate();
  RingPlan plan;
  plan.kind = RingKind::flat;
  plan.topology = topology;
  const std::size_t g = topology.devices();
  plan.rounds = 1;
  plan.steps_per_round = g;
  plan.visit.assign(g, std::vector<std::size_t>(g));
  plan.next.assign(g, std::vector<std::size_t>(g));
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t k = 0; k < g; ++k) {
      plan.visit[i][k] = (i + g - k) % g;
      plan.next[i][k] = (i + 1) % g;
    }
  }
  detail::fill_rings(plan);
  return plan;
}

// Hierarchical ring: each node's GPUs form a sub-ring that is walked in
// gpus_per_node steps, then one inter-node hop moves every payload to the
// next node; this repeats num_nodes times. Device (n, l) computes on the
// shard of (n - r, l - t) at round r, in-round step t.
inline RingPlan build_double_ring(const Topology& topology) {
  topology.validate();
  RingPlan plan;
  plan.kind = RingKind::double_ring;
  plan.topology = topology;
  const std::size_t nodes = topology.num_nodes;
  const std::size_t per = topology.gpus_per_node;
  const std::size_t g = topology.devices();
  plan.rounds = nodes;
  plan.steps_per_round = per;
  plan.visit.assign(g, std::vector<std::size_t>(g));
  plan.next.assign(g, std::vector<std::size_t>(g));
  for (std::size_t n = 0; n < nodes; ++n) {
    for (std::size_t l = 0; l < per; ++l) {
      const std::size_t dev = topology.device_at(n, l);
      for (std::size_t r = 0; r < nodes; ++r) {
        for (std::size_t t = 0; t < per; ++t) {
          const std::size_t k = r * per + t;
          plan.visit[dev][k] = topology.device_at((n + nodes - r) % nodes, (l + per - t) % per);
          // Intra hop inside the round, inter hop (to the next node's next
          // GPU) when the round ends.
          plan.next[dev][k] = t + 1 < per ? topology.device_at(n, (l + 1) % per)
                                          : topology.device_at((n + 1) % nodes, (l + 1) % per);
        }
      }
    }
  }
  detail::fill_rings(plan);
  return plan;
}

inline RingPlan build_ring(RingKind kind, const Topology& topology) {
  return kind == RingKind::flat ? build_flat_ring(topology) : build_double_ring(topology);
}

struct ChannelCount {
  std::size_t intra = 0;
  std::size_t inter = 0;
  std::size_t total() const noexcept { return intra + inter; }
  bool operator==(const ChannelCount&) const = default;
};

// Exact element counts moved across the fabric.
struct MessageLog {
  std::vector<ChannelCount> sent;                    // [device]
  std::vector<ChannelCount> received;                // [device]
  std::vector<std::vector<std::size_t>> step_sent;   // [step][device]

  MessageLog() = default;
  MessageLog(std::size_t devices, std::size_t steps)
      : sent(devices), received(devices), step_sent(steps, std::vector<std::size_t>(devices, 0)) {}

  void record(std::size_t from, std::size_t to, Channel c, std::size_t step, std::size_t elements) {
    if (c == Channel::local) return;
    auto& s = sent[from];
    auto& r = received[to];
    (c == Channel::intra ? s.intra : s.inter) += elements;
    (c == Channel::intra ? r.intra : r.inter) += elements;
    step_sent[step][from] += elements;
  }

  ChannelCount total_sent() const {
    ChannelCount t;
    for (const auto& c : sent) {
      t.intra += c.intra;
      t.inter += c.inter;
    }
    return t;
  }
  ChannelCount total_received() const {
    ChannelCount t;
    for (const auto& c : received) {
      t.intra += c.intra;
      t.inter += c.inter;
    }
    return t;
  }
  bool balanced() const { return total_sent() == total_received(); }

  bool operator==(const MessageLog&) const = default;
};

// Per-step payload of one ring hop, split by whether the data is read-only
// (activations: K, V, Q, dO, D, Lse) or accumulated in flight (gradients).
struct StepPayload {
  std::size_t activation = 0;
  std::size_t gradient = 0;
  std::size_t total() const noexcept { return activation + gradient; }
};

struct TimelineEvent {
  std::size_t device = 0;
  EventKind kind = EventKind::compute;
  Flow flow = Flow::none;
  std::size_t step = 0;
  std::size_t round = 0;
  std::size_t origin = 0;   // shard the payload belongs to
  std::size_t peer = 0;     // destination for sends, source for recvs
  std::size_t elements = 0;
  double start = 0.0;
  double end = 0.0;
  std::vector<std::size_t> deps;  // indices of events that must finish first
};

struct Timeline {
  std::vector<TimelineEvent> events;
  double makespan = 0.0;

  // Structural checks: one compute at a time per device, one transfer at a
  // time per device lane, recvs after their sends, dependency edges honored.
  std::vector<std::string> violations(double tol = 1e-12) const {
    std::vector<std::string> out;
    auto lane_check = [&](auto&& pred, const std::string& what) {
      std::vector<std::vector<const TimelineEvent*>> lanes;
      for (const auto& e : events) {
        if (!pred(e)) continue;
        if (lanes.size() <= e.device) lanes.resize(e.device + 1);
        lanes[e.device].push_back(&e);
      }
      for (auto& lane : lanes) {
        std::sort(lane.begin(), lane.end(), [](const auto* a, const auto* b) {
          return a->start < b->start || (a->start == b->start && a->end < b->end);
        });
        for (std::size_t i = 1; i < lane.size(); ++i) {
          if (lane[i]->start + tol < lane[i - 1]->end) {
            out.push_back(what + " overlap on device " + std::to_string(lane[i]->device));
          }
        }
      }
    };
    lane_check([](const TimelineEvent& e) { return e.kind == EventKind::compute; }, "compute");
    lane_check([](const TimelineEvent& e) { return e.kind == EventKind::send_intra; }, "intra lane");
    lane_check([](const TimelineEvent& e) { return e.kind == EventKind::send_inter; }, "inter lane");
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      for (std::size_t d : e.deps) {
        if (d >= events.size() || e.start + tol < events[d].end) {
          out.push_back("event " + std::to_string(i) + " (" + to_string(e.kind) +
                        ") starts before dependency " + std::to_string(d) + " ends");
        }
      }
      if (e.kind == EventKind::recv && e.deps.empty()) {
        out.push_back("recv " + std::to_string(i) + " has no matching send");
      }
    }
    return out;
  }
};

// Three buffers per device; swaps exchange the compute role with one of the
// communication roles, so the roles always stay a permutation.
enum class BufferRole { intra_comm, inter_comm, compute };

class BufferSet {
 public:
  BufferRole role(std::size_t buffer) const { return roles_.at(buffer); }
  std::size_t holder(BufferRole r) const {
    for (std::size_t b = 0; b < roles_.size(); ++b)
      if (roles_[b] == r) return b;
    return roles_.size();
  }
  void swap_into_compute(BufferRole from) {
    const std::size_t a = holder(from);
    const std::size_t c = holder(BufferRole::compute);
    std::swap(roles_[a], roles_[c]);
  }
  bool is_permutation() const {
    bool seen[3] = {false, false, false};
    for (BufferRole r : roles_) seen[static_cast<int>(r)] = true;
    return seen[0] && seen[1] && seen[2];
  }

 private:
  std::vector<BufferRole> roles_{BufferRole::intra_comm, BufferRole::inter_comm,
                                 BufferRole::compute};
};

struct SimulationResult {
  MessageLog log;
  Timeline timeline;
  std::vector<BufferSet> buffers;  // final buffer roles per device
};

namespace detail {

// List scheduler: tasks are appended in an order where every dependency
// already exists, and each lane serves its tasks first-come first-served, so
// start = max(lane free, dependency ends). Ties never reorder anything, which
// keeps the timeline deterministic.
class TaskGraph {
 public:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  explicit TaskGraph(std::size_t lanes) : lane_free_(lanes, 0.0) {}

  std::size_t add(std::optional<std::size_t> lane, double duration, std::vector<std::size_t> deps,
                  std::optional<TimelineEvent> ev) {
    double start = 0.0;
    std::erase(deps, kNone);
    for (std::size_t d : deps) start = std::max(start, end_[d]);
    if (lane) start = std::max(start, lane_free_[*lane]);
    const double end = start + duration;
    if (lane) lane_free_[*lane] = end;
    start_.push_back(start);
    end_.push_back(end);
    deps_.push_back(std::move(deps));
    events_.push_back(std::move(ev));
    return end_.size() - 1;
  }

  double start(std::size_t id) const { return start_[id]; }
  double end(std::size_t id) const { return end_[id]; }

  Timeline export_timeline() {
    Timeline tl;
    std::vector<std::size_t> index(events_.size(), kNone);
    std::vector<std::vector<std::size_t>> flat(events_.size());
    for (std::size_t id = 0; id < events_.size(); ++id) {
      // Visible dependencies, looking through invisible barrier tasks.
      std::vector<std::size_t> vis;
      for (std::size_t d : deps_[id]) {
        if (index[d] != kNone) {
          vis.push_back(index[d]);
        } else {
          vis.insert(vis.end(), flat[d].begin(), flat[d].end());
        }
      }
      std::sort(vis.begin(), vis.end());
      vis.erase(std::unique(vis.begin(), vis.end()), vis.end());
      if (events_[id]) {
        TimelineEvent e = *events_[id];
        e.start = start_[id];
        e.end = end_[id];
        e.deps = vis;
        index[id] = tl.events.size();
        tl.events.push_back(std::move(e));
      } else {
        flat[id] = std::move(vis);
      }
      tl.makespan = std::max(tl.makespan, end_[id]);
    }
    const std::size_t sends = tl.events.size();
    for (std::size_t i = 0; i < sends; ++i) {
      const auto& s = tl.events[i];
      if (s.kind != EventKind::send_intra && s.kind != EventKind::send_inter) continue;
      TimelineEvent r;
      r.device = s.peer;
      r.kind = EventKind::recv;
      r.flow = s.flow;
      r.step = s.step;
      r.round = s.round;
      r.origin = s.origin;
      r.peer = s.device;
      r.elements = s.elements;
      r.start = s.end;
      r.end = s.end;
      r.deps = {i};
      tl.events.push_back(std::move(r));
    }
    return tl;
  }

 private:
  std::vector<double> lane_free_;
  std::vector<double> start_, end_;
  std::vector<std::vector<std::size_t>> deps_;
  std::vector<std::optional<TimelineEvent>> events_;
};

}  // namespace detail

// Replays a ring plan as an event timeline.
//
//   none        barrier-synchronous: every step computes, then every device
//               sends one combined message; no overlap at all.
//   activation  read-only payloads are forwarded as soon as they arrive and
//               the first compute starts at t = 0; double rings push each
//               round's first shard to the next node while the intra ring
//               turns. Gradient payloads, if any, are sent after the compute
//               that updates them and the next compute waits for them.
//   gradient    one warm-up compute precedes any send. Activations then
//               stream ahead, while gradient accumulators trail one step
//               behind the compute that updates them; inter-node sends wait
//               until the node has finished the round's intra exchange.
//
// compute_seconds[i][k] is the duration of device i's step-k compute. A
// transfer occupies the sender's lane for latency + elements / bandwidth.
inline SimulationResult simulate_ring(const RingPlan& plan, StepPayload payload, OverlapKind kind,
                                      const std::vector<std::vector<double>>& compute_seconds) {
  using detail::TaskGraph;
  const Topology& topo = plan.topology;
  const std::size_t g = plan.devices();
  const std::size_t steps = plan.steps();
  detail::require(compute_seconds.size() == g, "simulate_ring: compute table needs one row per device");
  for (const auto& row : compute_seconds) {
    detail::require(row.size() == steps, "simulate_ring: compute table needs one column per step");
  }
  detail::require(payload.total() > 0, "simulate_ring: payload must be positive");

  const std::size_t per = plan.steps_per_round;
  const bool act_route = kind == OverlapKind::activation && plan.kind == RingKind::double_ring &&
                         topo.num_nodes >= 2;
  const bool node_barrier = kind == OverlapKind::gradient && plan.kind == RingKind::double_ring &&
                            topo.num_nodes >= 2;

  TaskGraph graph(3 * g);
  auto compute_lane = [](std::size_t dev) { return 3 * dev; };
  auto comm_lane = [](std::size_t dev, Channel c) { return 3 * dev + (c == Channel::intra ? 1 : 2); };

  SimulationResult result;
  result.log = MessageLog(g, steps);
  result.buffers.assign(g, BufferSet{});

  constexpr std::size_t kNone = TaskGraph::kNone;
  std::vector<std::vector<std::size_t>> act_arrival(g, std::vector<std::size_t>(steps + 1, kNone));
  std::vector<std::vector<std::size_t>> grad_arrival(g, std::vector<std::size_t>(steps + 1, kNone));
  std::vector<std::vector<std::size_t>> compute(g, std::vector<std::size_t>(steps, kNone));
  std::vector<std::vector<std::size_t>> swap(g, std::vector<std::size_t>(steps, kNone));
  std::vector<std::vector<std::size_t>> node_round_tasks(topo.num_nodes);
  std::size_t prev_barrier = kNone;

  auto round_of = [&](std::size_t k) { return k / per; };

  auto send = [&](std::size_t from, std::size_t to, std::size_t k, Flow flow, std::size_t elements,
                  std::vector<std::size_t> deps) -> std::size_t {
    const Channel c = plan.channel(from, to);
    if (c == Channel::local || elements == 0) return kNone;
    TimelineEvent ev;
    ev.device = from;
    ev.kind = c == Channel::intra ? EventKind::send_intra : EventKind::send_inter;
    ev.flow = flow;
    ev.step = k;
    ev.round = round_of(k);
    ev.origin = plan.visit[from][k];
    ev.peer = to;
    ev.elements = elements;
    result.log.record(from, to, c, k, elements);
    return graph.add(comm_lane(from, c), topo.transfer_time(c, static_cast<double>(elements)),
                     std::move(deps), ev);
  };

  auto add_compute = [&](std::size_t i, std::size_t k, std::vector<std::size_t> deps) {
    TimelineEvent ev;
    ev.device = i;
    ev.kind = EventKind::compute;
    ev.step = k;
    ev.round = round_of(k);
    ev.origin = plan.visit[i][k];
    if (k > 0 && kind != OverlapKind::none) {
      // Received data moves into the compute role: from the inter buffer at
      // the start of a double-ring round, otherwise from the intra buffer.
      const bool from_inter = plan.kind == RingKind::double_ring && k % per == 0 && topo.num_nodes >= 2;
      TimelineEvent sw = ev;
      sw.kind = EventKind::buffer_swap;
      sw.flow = from_inter ? Flow::activation : Flow::none;
      result.buffers[i].swap_into_compute(from_inter ? BufferRole::inter_comm : BufferRole::intra_comm);
      swap[i][k] = graph.add(compute_lane(i), 0.0, deps, sw);
      deps = {swap[i][k]};
    }
    compute[i][k] = graph.add(compute_lane(i), compute_seconds[i][k], std::move(deps), ev);
  };

  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = k % per;
    if (kind == OverlapKind::none) {
      std::vector<std::size_t> computes;
      for (std::size_t i = 0; i < g; ++i) {
        add_compute(i, k, {prev_barrier});
        computes.push_back(compute[i][k]);
      }
      const std::size_t after_compute = graph.add(std::nullopt, 0.0, computes, std::nullopt);
      std::vector<std::size_t> hops;
      for (std::size_t i = 0; i < g; ++i) {
        const std::size_t h = send(i, plan.next[i][k], k, Flow::combined, payload.total(), {after_compute});
        if (h != kNone) hops.push_back(h);
      }
      hops.push_back(after_compute);
      prev_barrier = graph.add(std::nullopt, 0.0, hops, std::nullopt);
      continue;
    }

    for (std::size_t i = 0; i < g; ++i) {
      std::vector<std::size_t> deps{act_arrival[i][k]};
      if (kind == OverlapKind::activation) deps.push_back(grad_arrival[i][k]);
      add_compute(i, k, std::move(deps));
      if (node_barrier) node_round_tasks[topo.node_of(i)].push_back(compute[i][k]);
    }

    // Node-wide barrier closing round r before any inter-node send.
    std::vector<std::size_t> round_done(topo.num_nodes, kNone);
    if (node_barrier && t + 1 == per) {
      for (std::size_t n = 0; n < topo.num_nodes; ++n) {
        round_done[n] = graph.add(std::nullopt, 0.0, node_round_tasks[n], std::nullopt);
        node_round_tasks[n].clear();
      }
    }

    for (std::size_t i = 0; i < g; ++i) {
      const std::size_t n = topo.node_of(i);
      const std::size_t l = topo.local_of(i);
      const std::size_t dest = plan.next[i][k];
      const bool last = k + 1 == steps;
      const std::size_t recv_swap = last ? kNone : swap[dest][k];

      // Activation flow.
      if (payload.activation > 0) {
        if (act_route) {
          if (t + 1 < per) {
            const std::size_t h = send(i, dest, k, Flow::activation, payload.activation,
                                       {act_arrival[i][k], recv_swap});
            if (!last) act_arrival[dest][k + 1] = h;
          }
          if (t == 0) {
            const std::size_t to = topo.device_at((n + 1) % topo.num_nodes, l);
            const std::size_t lands = k + per;
            const std::size_t inter_swap = k == 0 ? kNone : swap[to][k];
            const std::size_t h = send(i, to, k, Flow::activation, payload.activation,
                                       {act_arrival[i][k], inter_swap});
            if (lands < steps) act_arrival[to][lands] = h;
          }
        } else {
          std::vector<std::size_t> deps{act_arrival[i][k], recv_swap};
          if (kind == OverlapKind::gradient) {
            deps.push_back(compute[i][0]);  // warm-up
            if (plan.channel(i, dest) == Channel::inter) deps.push_back(round_done[n]);
          }
          const std::size_t h = send(i, dest, k, Flow::activation, payload.activation, std::move(deps));
          if (!last) act_arrival[dest][k + 1] = h;
          if (node_barrier && h != kNone && plan.channel(i, dest) == Channel::intra) {
            node_round_tasks[n].push_back(h);
          }
        }
      }

      // Gradient flow: the accumulator leaves only after this step's update.
      if (payload.gradient > 0) {
        std::vector<std::size_t> deps{compute[i][k], grad_arrival[i][k]};
        if (node_barrier && plan.channel(i, dest) == Channel::inter) deps.push_back(round_done[n]);
        const std::size_t h = send(i, dest, k, Flow::gradient, payload.gradient, std::move(deps));
        if (!last) grad_arrival[dest][k + 1] = h;
        if (node_barrier && h != kNone && plan.channel(i, dest) == Channel::intra) {
          node_round_tasks[n].push_back(h);
        }
      }
    }
  }

  result.timeline = graph.export_timeline();
  return result;
}

inline SimulationResult simulate_ring(const RingPlan& plan, StepPayload payload, OverlapKind kind,
                                      double compute_seconds_per_step) {
  return simulate_ring(plan, payload, kind,
                       std::vector<std::vector<double>>(
                           plan.devices(), std::vector<double>(plan.steps(), compute_seconds_per_step)));
}

inline SimulationResult simulate_ring(StepPayload payload, const Topology& topology, OverlapKind kind,
                                      double compute_seconds_per_step,
                                      RingKind ring = RingKind::double_ring) {
  return simulate_ring(build_ring(ring, topology), payload, kind, compute_seconds_per_step);
}

// Makespan of the barrier-synchronous schedule in closed form: every step
// costs its slowest compute plus its slowest hop.
inline double serialized_time(const RingPlan& plan, StepPayload payload,
                              const std::vector<std::vector<double>>& compute_seconds) {
  double total = 0.0;
  for (std::size_t k = 0; k < plan.steps(); ++k) {
    double c = 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < plan.devices(); ++i) {
      c = std::max(c, compute_seconds[i][k]);
      h = std::max(h, plan.topology.transfer_time(plan.channel(i, plan.next[i][k]),
                                                  static_cast<double>(payload.total())));
    }
    total += c + h;
  }
  return total;
}

// Same as serialized_time but pricing activation and gradient parts as two
// messages, which is what the overlapped schedules send.
inline double serialized_time_split(const RingPlan& plan, StepPayload payload,
                                    const std::vector<std::vector<double>>& compute_seconds) {
  double total = 0.0;
  for (std::size_t k = 0; k < plan.steps(); ++k) {
    double c = 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < plan.devices(); ++i) {
      c = std::max(c, compute_seconds[i][k]);
      const Channel ch = plan.channel(i, plan.next[i][k]);
      double lane = 0.0;
      for (std::size_t part : {payload.activation, payload.gradient}) {
        if (part > 0) lane += plan.topology.transfer_time(ch, static_cast<double>(part));
      }
      h = std::max(h, lane);
    }
    total += c + h;
  }
  return total;
}

// No schedule can beat the busiest single lane.
inline double lane_lower_bound(const SimulationResult& sim) {
  std::vector<double> busy;
  for (const auto& e : sim.timeline.events) {
    if (e.kind == EventKind::recv || e.kind == EventKind::buffer_swap) continue;
    const std::size_t lane = 3 * e.device + (e.kind == EventKind::compute      ? 0
                                             : e.kind == EventKind::send_intra ? 1
                                                                               : 2);
    if (busy.size() <= lane) busy.resize(lane + 1, 0.0);
    busy[lane] += e.end - e.start;
  }
  return busy.empty() ? 0.0 : *std::max_element(busy.begin(), busy.end());
}

enum class Strategy { ring, double_ring, burst };

inline std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::ring:
      return "ring";
    case Strategy::double_ring:
      return "double_ring";
    case Strategy::burst:
      return "burst";
  }
  return "?";
}

// Forward + backward communication time in closed form, where G is the total
// ring length and t_intra / t_inter are per-hop times:
//   ring         6 max(G t_intra, G t_inter)
//   double_ring  4 max((G - n) t_intra, n t_inter) + 2 ((G - n) t_intra + n t_inter)
//   burst        5 max((G - n) t_intra, n t_inter)
// with n the number of nodes.
inline double analytic_comm_time(Strategy s, double t_intra, double t_inter, std::size_t g,
                                 std::size_t nodes) {
  const double gd = static_cast<double>(g);
  const double nd = static_cast<double>(nodes);
  const double intra = (gd - nd) * t_intra;
  const double inter = nd * t_inter;
  switch (s) {
    case Strategy::ring:
      return 6.0 * std::max(gd * t_intra, gd * t_inter);
    case Strategy::double_ring:
      return 4.0 * std::max(intra, inter) + 2.0 * (intra + inter);
    case Strategy::burst:
      return 5.0 * std::max(intra, inter);
  }
  return 0.0;
}

inline double analytic_comm_time(Strategy s, const Topology& topo, double payload_elements) {
  topo.validate();
  return analytic_comm_time(s, topo.t_intra(payload_elements), topo.t_inter(payload_elements),
                            topo.devices(), topo.num_nodes);
}

enum class Pass { forward, ring_backward, burst_backward };

inline std::string to_string(Pass p) {
  switch (p) {
    case Pass::forward:
      return "forward";
    case Pass::ring_backward:
      return "ring_backward";
    case Pass::burst_backward:
      return "burst_backward";
  }
  return "?";
}

// Elements in one ring hop of a pass with shards of N/G tokens:
//   forward         K, V                       2 (N/G) d
//   ring_backward   K, V | dK, dV              2 (N/G) d | 2 (N/G) d
//   burst_backward  Q, dO, D, Lse | dQ         2 (N/G) d + 2 (N/G) | (N/G) d
inline StepPayload step_payload(Pass pass, std::size_t n, std::size_t d, std::size_t g) {
  detail::require(g >= 1 && n % g == 0, "step_payload: G must divide N");
  const std::size_t rows = n / g;
  switch (pass) {
    case Pass::forward:
      return {2 * rows * d, 0};
    case Pass::ring_backward:
      return {2 * rows * d, 2 * rows * d};
    case Pass::burst_backward:
      return {2 * rows * d + 2 * rows, rows * d};
  }
  return {};
}

// Elements each device sends during one pass: G hops of step_payload, i.e.
// 2Nd, 4Nd and 3Nd + 2N. A one-device ring moves nothing.
inline std::size_t account_attention_comm(Pass pass, std::size_t n, std::size_t d, std::size_t g) {
  const StepPayload p = step_payload(pass, n, d, g);
  return g == 1 ? 0 : g * p.total();
}

}  // namespace burst
