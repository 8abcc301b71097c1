// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "cbsnr/bounds.hpp"
#include "cbsnr/calibration.hpp"
#include "cbsnr/io.hpp"
#include "cbsnr/lockstep.hpp"

namespace cbsnr {

namespace fs = std::filesystem;

inline constexpr Slot kTraceDefaultLimit = 10'000;

struct RunOptions {
  std::string out_root = "out";
  bool trace = false;  // force a trace; short runs get one anyway
  bool write = true;
};

struct RunOutcome {
  RunPlan plan;
  MetricsReport report;
  std::string dir;
  nlohmann::json manifest;
  bool traced = false;
};

inline std::string default_out_root() {
  const char* env = std::getenv("CBSNR_OUT");
  return env && *env ? env : "out";
}

inline std::string scenario_dir_name(const std::string& name) {
  std::string s = name.empty() ? "run" : name;
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  return s;
}

/// One simulation, written to <out_root>/<scenario>/<point-hash>/.
inline RunOutcome run_point(const SimConfig& cfg, const RunOptions& opt) {
  RunOutcome o;
  o.plan = make_plan(cfg);
  o.traced = opt.write && (opt.trace || cfg.num_slots <= kTraceDefaultLimit);
  if (opt.write) {
    o.dir = (fs::path(opt.out_root) / scenario_dir_name(cfg.name) / point_hash(cfg)).string();
    fs::create_directories(o.dir);
  }
  Simulator sim(o.plan);
  std::unique_ptr<TraceWriter> tw;
  if (o.traced) {
    tw = std::make_unique<TraceWriter>((fs::path(o.dir) / "trace.csv.gz").string());
    sim.set_observer([&](const SlotRecord& r) { tw->observe(r); });
  }
  sim.run();
  if (tw) tw->close();
  if (!sim.conservation_holds()) throw InvariantError(sim.now(), "byte conservation failed");
  o.report = sim.report();
  o.manifest = make_manifest(o.plan, o.report);
  o.manifest["trace"] = o.traced ? nlohmann::json("trace.csv.gz") : nlohmann::json(nullptr);
  if (opt.write) {
    write_metrics_csv((fs::path(o.dir) / "metrics.csv").string(), o.report);
    write_json_file((fs::path(o.dir) / "manifest.json").string(), o.manifest);
  }
  return o;
}

/// Accepts either a bare config document or a run manifest holding one.
inline nlohmann::json config_document(const nlohmann::json& j) {
  if (j.is_object() && j.contains("config") && j.contains("point_hash")) return j.at("config");
  return j;
}

/// Audits a run directory written by run_point. Missing files raise IoError.
inline AuditReport audit_run_dir(const std::string& dir) {
  const fs::path d(dir);
  const auto manifest = read_json_file((d / "manifest.json").string());
  const SimConfig cfg = config_from_json(manifest.at("config"));
  const fs::path trace = d / "trace.csv.gz";
  if (!fs::exists(trace)) throw IoError("no trace in '" + dir + "' (rerun with --trace)");
  Auditor a(ue_plans_from_json(manifest.at("plan"), cfg), cfg.grant_cap, cfg.e_max,
            cfg.scheduler == SchedulerKind::RR && !cfg.gate_pf_hybrid, cfg.gate != GateVariant::None);
  read_trace(trace.string(), cfg.num_ues(), [&](const SlotRecord& r) { a.observe(r); });
  return a.finish();
}

}  // namespace cbsnr
