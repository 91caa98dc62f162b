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

// burstsim command line. Everything is reachable through run_cli so tests can
// drive the tool in-process.
//
// Config files are INI; section headers only group keys, so
//   [topology]
//   nodes = 2
// is the same as `--nodes 2`. Command-line flags override file values.
//
// Exit codes: 0 success, 1 a numerical check failed, 2 invalid configuration.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "burst/burst.hpp"
#include "burst/verify.hpp"

namespace burst::cli {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

struct RunConfig {
  std::size_t seq = 16;
  std::size_t dim = 4;
  std::size_t gpus = 4;
  std::size_t nodes = 1;
  double lat_intra = 1e-6;  // seconds
  double lat_inter = 5e-6;
  double bw_intra = 1e11;  // elements per second
  double bw_inter = 1e10;
  std::string ring = "double";
  std::string layout = "zigzag";
  std::string mask = "causal";
  std::size_t window = 4;
  std::size_t block_len = 4;
  std::string overlap = "gradient";
  std::string pass = "burst_backward";
  double compute_per_pair = 1e-9;  // seconds
  std::size_t vocab = 32;
  std::size_t bs = 4;
  std::size_t bv = 8;
  double split = 0.5;
  std::uint64_t seed = 0;
  std::string format = "table";
  std::string output;
  std::size_t threads = 1;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
};

struct Report {
  std::string command;
  Json config = Json::object();
  Json summary = Json::object();
  std::vector<Table> tables;
  bool failed = false;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> d)
      : std::runtime_error("invalid configuration"), diagnostics(std::move(d)) {}
  std::vector<std::string> diagnostics;
};

namespace detail {

// INI reader that treats sections as grouping only and accepts snake_case keys
// for the dashed flag names.
class SectionedConfig : public CLI::ConfigINI {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> flat;
    for (auto& item : CLI::ConfigINI::from_config(input)) {
      if (item.name == "++" || item.name == "--") continue;
      item.parents.clear();
      std::replace(item.name.begin(), item.name.end(), '_', '-');
      flat.push_back(std::move(item));
    }
    return flat;
  }
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string cell(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_null()) return "";
  return v.dump();
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline Json number(double v) {
  // JSON has no NaN or infinity.
  return std::isfinite(v) ? Json(v) : Json(nullptr);
}

}  // namespace detail

inline std::string render_json(const Report& r, std::uint64_t seed) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = r.command;
  j["seed"] = seed;
  j["config"] = r.config;
  j["summary"] = r.summary;
  Json tables = Json::object();
  for (const auto& t : r.tables) {
    Json rows = Json::array();
    for (const auto& row : t.rows) {
      Json o = Json::object();
      for (std::size_t c = 0; c < t.columns.size(); ++c) o[t.columns[c]] = row[c];
      rows.push_back(std::move(o));
    }
    tables[t.name] = std::move(rows);
  }
  j["tables"] = std::move(tables);
  return j.dump(2) + "\n";
}

// One block per table, each starting with a "# name" line; the first block is
// the summary as key,value rows.
inline std::string render_csv(const Report& r, std::uint64_t seed) {
  std::ostringstream os;
  os << "# summary\nkey,value\n";
  os << "schema_version," << kSchemaVersion << "\ncommand," << r.command << "\nseed," << seed << "\n";
  for (const auto& [k, v] : r.summary.items()) os << k << "," << detail::csv_escape(detail::cell(v)) << "\n";
  for (const auto& t : r.tables) {
    os << "# " << t.name << "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
    os << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << detail::csv_escape(detail::cell(row[c]));
      os << "\n";
    }
  }
  return os.str();
}

inline std::string render_table(const Report& r, std::uint64_t seed) {
  std::ostringstream os;
  os << r.command << " (seed " << seed << ")\n";
  std::size_t key_w = 0;
  for (const auto& [k, v] : r.summary.items()) key_w = std::max(key_w, k.size());
  for (const auto& [k, v] : r.summary.items()) {
    os << "  " << k << std::string(key_w - k.size(), ' ') << "  " << detail::cell(v) << "\n";
  }
  for (const auto& t : r.tables) {
    os << "\n" << t.name << "\n";
    std::vector<std::size_t> w(t.columns.size());
    for (std::size_t c = 0; c < t.columns.size(); ++c) w[c] = t.columns[c].size();
    std::vector<std::vector<std::string>> cells;
    for (const auto& row : t.rows) {
      cells.emplace_back();
      for (std::size_t c = 0; c < row.size(); ++c) {
        cells.back().push_back(detail::cell(row[c]));
        w[c] = std::max(w[c], cells.back().back().size());
      }
    }
    auto line = [&](const std::vector<std::string>& v) {
      for (std::size_t c = 0; c < v.size(); ++c) {
        os << "  " << v[c];
        if (c + 1 < v.size()) os << std::string(w[c] - v[c].size(), ' ');
      }
      os << "\n";
    };
    line(t.columns);
    for (const auto& c : cells) line(c);
  }
  return os.str();
}

namespace detail {

inline Topology topology_of(const RunConfig& c) {
  return {c.nodes, c.gpus / c.nodes, c.lat_intra, c.lat_inter, c.bw_intra, c.bw_inter};
}

inline LayoutKind layout_kind(const std::string& s) {
  if (s == "contiguous") return LayoutKind::contiguous;
  if (s == "zigzag") return LayoutKind::zigzag;
  if (s == "striped") return LayoutKind::striped;
  return LayoutKind::block_striped;
}

inline ShardLayout layout_of(const RunConfig& c) {
  return {layout_kind(c.layout), c.seq, c.gpus, c.block_len};
}

inline MaskSpec mask_of(const RunConfig& c) {
  if (c.mask == "full") return MaskSpec::full();
  if (c.mask == "causal") return MaskSpec::causal();
  if (c.mask == "sliding_window") return MaskSpec::sliding_window(c.window);
  return block_mask_from_window(c.seq, c.block_len, c.window);
}

inline RingKind ring_of(const RunConfig& c) { return c.ring == "flat" ? RingKind::flat : RingKind::double_ring; }

inline OverlapKind overlap_of(const RunConfig& c) {
  if (c.overlap == "none") return OverlapKind::none;
  if (c.overlap == "activation") return OverlapKind::activation;
  return OverlapKind::gradient;
}

inline Pass pass_of(const RunConfig& c) {
  if (c.pass == "forward") return Pass::forward;
  if (c.pass == "ring_backward") return Pass::ring_backward;
  return Pass::burst_backward;
}

// Cross-field checks, phrased in terms of the flags involved.
inline std::vector<std::string> validate(const std::string& cmd, const RunConfig& c) {
  std::vector<std::string> out;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) out.push_back(msg);
  };
  const bool attention = cmd == "balance" || cmd == "timeline" || cmd == "compare" || cmd == "comm";
  if (attention) {
    need(c.gpus % c.nodes == 0, "--nodes: " + std::to_string(c.nodes) + " does not divide --gpus " +
                                    std::to_string(c.gpus));
    need(c.seq % c.gpus == 0, "--seq: " + std::to_string(c.seq) + " is not a multiple of --gpus " +
                                  std::to_string(c.gpus));
  }
  if (attention && cmd != "comm") {
    if (c.layout == "zigzag") {
      need(c.seq % (2 * c.gpus) == 0, "--layout zigzag: --seq " + std::to_string(c.seq) +
                                          " must be a multiple of 2 x --gpus = " + std::to_string(2 * c.gpus));
    }
    if (c.layout == "block_striped") {
      need(c.block_len % c.gpus == 0, "--block-len: " + std::to_string(c.block_len) +
                                          " must be a multiple of --gpus " + std::to_string(c.gpus) +
                                          " for block_striped");
    }
  }
  const bool masked = attention || cmd == "checkpoint";
  if (masked && c.mask == "sliding_window") {
    need(c.window <= c.seq, "--window: " + std::to_string(c.window) + " exceeds --seq " + std::to_string(c.seq));
  }
  if (masked && (c.mask == "block_sparse" || c.layout == "block_striped")) {
    need(c.seq % c.block_len == 0, "--block-len: " + std::to_string(c.block_len) + " does not divide --seq " +
                                       std::to_string(c.seq));
  }
  if (masked && c.mask == "block_sparse") {
    need(c.window % c.block_len == 0 && c.window <= c.seq,
         "--window: block_sparse needs a window that is a multiple of --block-len " +
             std::to_string(c.block_len) + " and at most --seq");
  }
  if (cmd == "checkpoint") {
    const double b = c.split * static_cast<double>(c.seq);
    need(std::abs(b - std::round(b)) < 1e-9, "--split: " + format_double(c.split) + " x --seq " +
                                                  std::to_string(c.seq) + " is not a whole token count");
  }
  return out;
}

inline Json config_json(const std::string& cmd, const RunConfig& c) {
  Json j = Json::object();
  auto topo = [&] {
    j["gpus"] = c.gpus;
    j["nodes"] = c.nodes;
    j["ring"] = c.ring;
    j["lat_intra_seconds"] = c.lat_intra;
    j["lat_inter_seconds"] = c.lat_inter;
    j["bw_intra_elements_per_second"] = c.bw_intra;
    j["bw_inter_elements_per_second"] = c.bw_inter;
  };
  auto masks = [&] {
    j["layout"] = c.layout;
    j["mask"] = c.mask;
    j["window_tokens"] = c.window;
    j["block_len_tokens"] = c.block_len;
  };
  if (cmd == "verify") return j;
  j["seq_tokens"] = c.seq;
  j["dim"] = c.dim;
  if (cmd == "comm") topo();
  if (cmd == "balance") {
    j["gpus"] = c.gpus;
    masks();
  }
  if (cmd == "timeline" || cmd == "compare") {
    topo();
    masks();
    j["compute_seconds_per_pair"] = c.compute_per_pair;
  }
  if (cmd == "timeline") {
    j["pass"] = c.pass;
    j["overlap"] = c.overlap;
  }
  if (cmd == "lmhead" || cmd == "compare") {
    j["vocab"] = c.vocab;
    j["bs_tokens"] = c.bs;
    j["bv_entries"] = c.bv;
  }
  if (cmd == "checkpoint" || cmd == "compare") {
    if (cmd == "checkpoint") masks();
    j["split"] = c.split;
  }
  return j;
}

inline Report cmd_verify(const RunConfig& c) {
  Report r;
  Table t{"checks", {"check", "passed", "metric", "tolerance", "cases"}, {}};
  std::size_t failed = 0;
  for (const auto& res : run_verify(c.seed, c.threads)) {
    t.rows.push_back({res.name, res.passed, number(res.metric), res.tolerance, res.cases});
    failed += res.passed ? 0 : 1;
  }
  r.summary["checks"] = t.rows.size();
  r.summary["failed"] = failed;
  r.failed = failed > 0;
  r.tables.push_back(std::move(t));
  return r;
}

inline Report cmd_comm(const RunConfig& c) {
  Report r;
  const Topology topo = topology_of(c);
  const RingPlan plan = build_ring(ring_of(c), topo);
  Table passes{"passes", {"pass", "step_payload_elements", "elements_per_device", "simulated_elements_per_device"}, {}};
  for (Pass p : {Pass::forward, Pass::ring_backward, Pass::burst_backward}) {
    const StepPayload sp = step_payload(p, c.seq, c.dim, c.gpus);
    const SimulationResult sim = simulate_ring(plan, sp, OverlapKind::none, 0.0);
    std::size_t hi = 0, lo = SIZE_MAX;
    for (const auto& s : sim.log.sent) {
      hi = std::max(hi, s.total());
      lo = std::min(lo, s.total());
    }
    passes.rows.push_back({to_string(p), sp.total(), account_attention_comm(p, c.seq, c.dim, c.gpus),
                           hi == lo ? Json(hi) : Json("uneven")});
  }
  const double payload = static_cast<double>(c.seq / c.gpus * c.dim);
  Table strat{"strategies", {"strategy", "t_intra_seconds", "t_inter_seconds", "analytic_seconds"}, {}};
  for (Strategy s : {Strategy::ring, Strategy::double_ring, Strategy::burst}) {
    strat.rows.push_back({to_string(s), topo.t_intra(payload), topo.t_inter(payload),
                          analytic_comm_time(s, topo, payload)});
  }
  r.summary["shard_elements"] = c.seq / c.gpus * c.dim;
  r.summary["burst_over_ring_backward"] =
      number(static_cast<double>(account_attention_comm(Pass::burst_backward, c.seq, c.dim, c.gpus)) /
             static_cast<double>(account_attention_comm(Pass::ring_backward, c.seq, c.dim, c.gpus)));
  r.tables.push_back(std::move(passes));
  r.tables.push_back(std::move(strat));
  return r;
}

inline Report cmd_balance(const RunConfig& c) {
  Report r;
  const ShardLayout layout = layout_of(c);
  const MaskSpec mask = mask_of(c);
  const WorkloadReport w = balance_report(layout, mask);
  const auto shards = make_layout(layout);
  Table dev{"devices", {"device", "tokens", "pairs"}, {}};
  for (std::size_t i = 0; i < layout.g; ++i) dev.rows.push_back({i + 1, shards[i].token_ids.size(), w.per_device_pairs[i]});
  Table steps{"steps", {"step", "device", "key_shard", "pairs"}, {}};
  for (std::size_t s = 0; s < layout.g; ++s)
    for (std::size_t i = 0; i < layout.g; ++i)
      steps.rows.push_back({s, i + 1, ring_source(i + 1, s, layout.g), w.per_step_pairs[i][s]});
  r.summary["total_pairs"] = w.total_pairs;
  r.summary["device_spread_pairs"] = w.device_spread();
  r.summary["max_step_spread_pairs"] = w.max_step_spread();
  r.tables.push_back(std::move(dev));
  r.tables.push_back(std::move(steps));
  return r;
}

inline Report cmd_timeline(const RunConfig& c) {
  Report r;
  const Cluster cl = make_cluster(layout_of(c), mask_of(c), topology_of(c), ring_of(c), 1);
  ScheduleOptions opt;
  opt.overlap = overlap_of(c);
  opt.seconds_per_pair = c.compute_per_pair;
  const Pass pass = pass_of(c);
  const auto table = burst::detail::compute_table(cl, pass, opt);
  const StepPayload sp = step_payload(pass, c.seq, c.dim, c.gpus);
  const SimulationResult sim = simulate_ring(cl.plan, sp, opt.overlap, table);
  Table ev{"events",
           {"index", "device", "kind", "flow", "step", "round", "origin", "peer", "elements", "start_seconds",
            "end_seconds"},
           {}};
  for (std::size_t i = 0; i < sim.timeline.events.size(); ++i) {
    const auto& e = sim.timeline.events[i];
    const bool comm = e.kind != EventKind::compute && e.kind != EventKind::buffer_swap;
    ev.rows.push_back({i, e.device, to_string(e.kind), to_string(e.flow), e.step, e.round, e.origin,
                       comm ? Json(e.peer) : Json(nullptr), e.elements, e.start, e.end});
  }
  const auto violations = sim.timeline.violations();
  r.summary["makespan_seconds"] = sim.timeline.makespan;
  r.summary["serialized_seconds"] = serialized_time(cl.plan, sp, table);
  r.summary["serialized_split_seconds"] = serialized_time_split(cl.plan, sp, table);
  r.summary["lane_bound_seconds"] = lane_lower_bound(sim);
  r.summary["events"] = sim.timeline.events.size();
  r.summary["violations"] = violations.size();
  r.failed = !violations.empty();
  r.tables.push_back(std::move(ev));
  return r;
}

inline Report cmd_lmhead(const RunConfig& c) {
  Report r;
  const Matrix h = seeded_random_matrix(c.seq, c.dim, c.seed);
  const Matrix w = seeded_random_matrix(c.vocab, c.dim, c.seed + 1);
  std::vector<std::size_t> y(c.seq);
  std::mt19937_64 rng(c.seed + 2);
  for (auto& t : y) t = rng() % c.vocab;
  const FusionConfig cfg{c.bs, c.bv};
  const LmHeadLoss ref = naive_lmhead_loss(h, w, y);
  const FusedLossResult got = fused_lmhead_loss(h, w, y, cfg);
  const double diff = std::max({max_abs_diff(got.loss, ref.loss), max_abs_diff(got.dh, ref.dh),
                                max_abs_diff(got.dw, ref.dw)});
  double loss = 0.0;
  for (double x : got.loss) loss += x;
  const MemoryFootprint fp = memory_footprint(c.seq, c.vocab, c.dim, cfg);
  r.summary["mean_loss_nats"] = loss / static_cast<double>(c.seq);
  r.summary["max_abs_diff_vs_naive"] = diff;
  bool ok = diff <= 1e-10;
  if (c.seq * c.dim <= 512 && c.vocab * c.dim <= 4096) {
    auto total = [&](const Matrix& hh, const Matrix& ww) {
      double s = 0.0;
      for (double x : fused_lmhead_loss(hh, ww, y, cfg).loss) s += x;
      return s;
    };
    const double fh = finite_diff_check([&](const Matrix& x) { return total(x, w); }, h, got.dh, 1e-6);
    const double fw = finite_diff_check([&](const Matrix& x) { return total(h, x); }, w, got.dw, 1e-6);
    r.summary["finite_diff_rel_dh"] = fh;
    r.summary["finite_diff_rel_dw"] = fw;
    ok = ok && fh <= 1e-5 && fw <= 1e-5;
  } else {
    r.summary["finite_diff_rel_dh"] = "skipped";
    r.summary["finite_diff_rel_dw"] = "skipped";
  }
  r.summary["peak_aux_elements"] = got.peak_aux_elements;
  r.summary["aux_bound_elements"] = fused_aux_bound(c.seq, c.vocab, c.dim, cfg);
  r.summary["peak_logits_elements"] = got.peak_logits_elements;
  r.summary["naive_logits_elements"] = fp.naive_elements;
  r.summary["passed"] = ok;
  r.failed = !ok;
  return r;
}

inline Report cmd_checkpoint(const RunConfig& c) {
  Report r;
  const MaskSpec mask = mask_of(c);
  Table t{"policies",
          {"policy", "split", "stored_elements", "attention_extra_elements", "recompute_pairs", "total_pairs",
           "recompute_fraction", "toy_recompute_pairs", "toy_max_abs_diff"},
          {}};
  bool ok = true;
  for (const auto& pol : {CheckpointPolicy::full(), CheckpointPolicy::selective(), CheckpointPolicy::sequence(c.split)}) {
    const PlanReport p = plan(pol, c.seq, c.dim, mask);
    Json toy_pairs = nullptr, toy_diff = nullptr;
    if (c.seq <= 64) {
      const ToyReport toy = execute_toy(pol, c.seq, c.dim, mask, c.seed);
      toy_pairs = toy.recompute_pairs;
      toy_diff = toy.max_diff();
      ok = ok && toy.max_diff() <= 1e-10 && toy.recompute_pairs == p.recompute_pairs;
    }
    t.rows.push_back({pol.name(), pol.kind == CheckpointKind::sequence_selective ? Json(pol.split) : Json(nullptr),
                      p.stored_elements, p.attention_extra_elements, p.recompute_pairs, p.total_pairs,
                      p.recompute_fraction, toy_pairs, toy_diff});
  }
  r.summary["toy_executed"] = c.seq <= 64;
  r.summary["passed"] = ok;
  r.failed = !ok;
  r.tables.push_back(std::move(t));
  return r;
}

inline Report cmd_compare(const RunConfig& c) {
  Report r;
  Scenario s;
  s.n = c.seq;
  s.d = c.dim;
  s.topology = topology_of(c);
  s.layout = layout_kind(c.layout);
  s.block_len = c.block_len;
  s.mask = mask_of(c);
  s.checkpoint = CheckpointPolicy::sequence(c.split);
  s.vocab = c.vocab;
  s.lm_head = {c.bs, c.bv};
  s.seconds_per_pair = c.compute_per_pair;
  const ComparisonReport rep = compare(strategy_sweep(s));
  Table t{"strategies",
          {"strategy", "comm_forward_elements", "comm_backward_elements", "analytic_seconds",
           "simulated_forward_seconds", "simulated_backward_seconds", "serial_bound_seconds", "lane_bound_seconds",
           "checkpoint_elements", "lm_head_elements", "comm_backward_ratio", "analytic_ratio", "simulated_ratio"},
          {}};
  for (const auto& row : rep.rows) {
    t.rows.push_back({row.name, row.comm_forward_elements, row.comm_backward_elements, row.analytic_seconds,
                      row.simulated_forward_seconds, row.simulated_backward_seconds, row.serial_bound_seconds,
                      row.lane_bound_seconds, row.checkpoint_elements, row.lm_head_elements,
                      number(row.comm_backward_ratio), number(row.analytic_ratio), number(row.simulated_ratio)});
  }
  r.summary["baseline"] = "ring";
  r.tables.push_back(std::move(t));
  return r;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Desk-scale simulator for ring context-parallel attention"};
  app.name("burstsim");
  app.config_formatter(std::make_shared<detail::SectionedConfig>());
  app.set_config("--config", "", "INI file with option values; flags override it");
  app.require_subcommand(1);

  RunConfig c;
  const auto positive = CLI::PositiveNumber;
  auto* wl = app.add_option_group("workload");
  wl->add_option("--seq", c.seq, "Sequence length in tokens")->check(positive)->capture_default_str();
  wl->add_option("--dim", c.dim, "Head dimension")->check(positive)->capture_default_str();
  wl->add_option("--layout", c.layout, "Token layout")
      ->check(CLI::IsMember({"contiguous", "zigzag", "striped", "block_striped"}))
      ->capture_default_str();
  wl->add_option("--mask", c.mask, "Attention mask")
      ->check(CLI::IsMember({"full", "causal", "sliding_window", "block_sparse"}))
      ->capture_default_str();
  wl->add_option("--window", c.window, "Window in tokens (sliding_window, block_sparse)")
      ->check(positive)
      ->capture_default_str();
  wl->add_option("--block-len", c.block_len, "Block length in tokens (block_sparse, block_striped)")
      ->check(positive)
      ->capture_default_str();
  wl->add_option("--seed", c.seed, "Seed for all generated inputs")->capture_default_str();

  auto* tp = app.add_option_group("topology");
  tp->add_option("--gpus", c.gpus, "Total devices G")->check(positive)->capture_default_str();
  tp->add_option("--nodes", c.nodes, "Number of nodes")->check(positive)->capture_default_str();
  tp->add_option("--lat-intra", c.lat_intra, "Intra-node latency, seconds")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  tp->add_option("--lat-inter", c.lat_inter, "Inter-node latency, seconds")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  tp->add_option("--bw-intra", c.bw_intra, "Intra-node bandwidth, elements/second")->check(positive)->capture_default_str();
  tp->add_option("--bw-inter", c.bw_inter, "Inter-node bandwidth, elements/second")->check(positive)->capture_default_str();
  tp->add_option("--ring", c.ring, "Ring shape")->check(CLI::IsMember({"flat", "double"}))->capture_default_str();

  auto* sc = app.add_option_group("schedule");
  sc->add_option("--overlap", c.overlap, "Overlap schedule")
      ->check(CLI::IsMember({"none", "activation", "gradient"}))
      ->capture_default_str();
  sc->add_option("--pass", c.pass, "Attention pass")
      ->check(CLI::IsMember({"forward", "ring_backward", "burst_backward"}))
      ->capture_default_str();
  sc->add_option("--compute-per-pair", c.compute_per_pair, "Compute seconds per scored pair")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  auto* lm = app.add_option_group("lmhead");
  lm->add_option("--vocab", c.vocab, "Vocabulary size")->check(positive)->capture_default_str();
  lm->add_option("--bs", c.bs, "Row tile in tokens")->check(positive)->capture_default_str();
  lm->add_option("--bv", c.bv, "Vocabulary tile in entries")->check(positive)->capture_default_str();

  auto* ck = app.add_option_group("checkpoint");
  ck->add_option("--split", c.split, "Leading fraction recomputed by sequence_selective")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  auto* op = app.add_option_group("output");
  op->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"table", "csv", "json"}))->capture_default_str();
  op->add_option("--output", c.output, "Write the report to this file instead of stdout");
  op->add_option("--threads", c.threads, "Worker threads for device steps")->check(positive)->capture_default_str();

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"verify", "Run the property suite; exit 1 on any failure"},
      {"comm", "Per-device communication volumes and closed-form times"},
      {"balance", "Causal workload per device and ring step"},
      {"timeline", "Simulate one pass under an overlap schedule"},
      {"lmhead", "Fused vs naive LM head loss and footprint"},
      {"checkpoint", "Checkpoint policy costs and recomputation check"},
      {"compare", "Ring, double ring and burst side by side"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (c.split <= 0.0 || c.split >= 1.0) {
      throw ConfigError({"--split: must lie strictly between 0 and 1"});
    }
    if (auto diags = detail::validate(cmd, c); !diags.empty()) throw ConfigError(std::move(diags));
    Report rep;
    if (cmd == "verify") rep = detail::cmd_verify(c);
    if (cmd == "comm") rep = detail::cmd_comm(c);
    if (cmd == "balance") rep = detail::cmd_balance(c);
    if (cmd == "timeline") rep = detail::cmd_timeline(c);
    if (cmd == "lmhead") rep = detail::cmd_lmhead(c);
    if (cmd == "checkpoint") rep = detail::cmd_checkpoint(c);
    if (cmd == "compare") rep = detail::cmd_compare(c);
    rep.command = cmd;
    rep.config = detail::config_json(cmd, c);
    const std::string text = c.format == "json"  ? render_json(rep, c.seed)
                             : c.format == "csv" ? render_csv(rep, c.seed)
                                                 : render_table(rep, c.seed);
    if (c.output.empty()) {
      out << text;
    } else {
      std::ofstream f(c.output, std::ios::binary);
      if (!f) throw ConfigError({"--output: cannot open " + c.output});
      f << text;
    }
    if (rep.failed) {
      err << cmd << ": numerical check failed\n";
      return 1;
    }
    return 0;
  } catch (const ConfigError& e) {
    for (const auto& d : e.diagnostics) err << "config error: " << d << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    // Shape and precondition errors from the library surface as config errors.
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"burstsim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace burst::cli
