// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cbsnr/runner.hpp"

namespace cbsnr {

/// Sweep description: a base config plus axes whose cartesian product gives
/// the run points. Axis keys are override keys (aliases allowed); the special
/// key "num_ues" resizes the UE list by repeating the base UEs cyclically.
struct Scenario {
  std::string name;
  nlohmann::json base;
  std::vector<std::pair<std::string, std::vector<nlohmann::json>>> axes;
  std::string out_root;
};

inline Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir = ".") {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  detail::reject_unknown(j, "", {"name", "base", "base_path", "sweep", "out"});
  Scenario s;
  s.name = j.value("name", std::string("scenario"));
  if (j.contains("base")) {
    s.base = j.at("base");
  } else if (j.contains("base_path")) {
    s.base = read_json_file((fs::path(base_dir) / j.at("base_path").get<std::string>()).string());
  } else {
    throw ConfigError("scenario needs 'base' or 'base_path'");
  }
  s.base = config_document(s.base);
  s.base["name"] = s.name;
  if (j.contains("sweep")) {
    const auto& sw = j.at("sweep");
    if (!sw.is_object()) throw ConfigError("key 'sweep' must be an object of arrays");
    for (auto it = sw.begin(); it != sw.end(); ++it) {
      if (!it.value().is_array()) throw ConfigError("key 'sweep." + it.key() + "' must be an array");
      if (it.value().empty()) continue;
      s.axes.emplace_back(it.key(), std::vector<nlohmann::json>(it.value().begin(), it.value().end()));
    }
  }
  s.out_root = j.value("out", std::string());
  return s;
}

inline void resize_ues(nlohmann::json& doc, int n) {
  SimConfig probe = config_from_json(doc);
  if (n < 1) throw ConfigError("key 'num_ues' must be >= 1");
  const nlohmann::json base_ues = config_to_json(probe)["ues"];
  nlohmann::json ues = nlohmann::json::array();
  for (int i = 0; i < n; ++i) ues.push_back(base_ues[static_cast<std::size_t>(i) % base_ues.size()]);
  doc.erase("ue_groups");
  doc["ues"] = ues;
}

/// Expands the grid into validated configs. Empty axes give the base alone.
inline std::vector<SimConfig> expand(const Scenario& s) {
  std::vector<nlohmann::json> docs{s.base};
  for (const auto& [key, values] : s.axes) {
    std::vector<nlohmann::json> next;
    for (const auto& d : docs) {
      for (const auto& v : values) {
        nlohmann::json e = d;
        if (key == "num_ues") {
          resize_ues(e, v.get<int>());
        } else {
          apply_override(e, key, v.is_string() ? v.get<std::string>() : v.dump());
        }
        next.push_back(std::move(e));
      }
    }
    docs = std::move(next);
  }
  std::vector<SimConfig> out;
  for (const auto& d : docs) out.push_back(config_from_json(d));
  return out;
}

struct PointResult {
  SimConfig config;
  std::string dir;
  std::string hash;
  bool ok = false;
  std::string error;
  double measured_rho = 0.0;
  // per-slot rates after warm-up
  double touched = 0.0;
  double work = 0.0;
  double activations = 0.0;
  double grants = 0.0;
};

inline constexpr const char* kSummaryHeader =
    "point_hash,scenario,gate,scheduler,engine,rho,num_ues,seed,status,class,packets,p50_ms,p99_ms,eta,"
    "measured_rho,touched_per_slot,work_per_slot,activations_per_slot,grants_per_slot";

/// Runs every point on a bounded worker pool and writes summary.csv next to
/// the point directories. Class rows are recomputed from each point's
/// metrics.csv, so the summary is exactly what the per-run files contain.
inline std::vector<PointResult> run_sweep(const Scenario& s, RunOptions opt, unsigned workers = 0,
                                          std::ostream* log = nullptr) {
  const auto points = expand(s);
  if (!s.out_root.empty() && opt.out_root == default_out_root()) opt.out_root = s.out_root;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(points.size()));
  std::vector<PointResult> results(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      PointResult& r = results[i];
      r.config = points[i];
      r.hash = point_hash(points[i]);
      try {
        const auto o = run_point(points[i], opt);
        r.dir = o.dir;
        r.touched = o.report.steady_rate(&EventCounters::touched);
        r.work = o.report.steady_work();
        r.activations = o.report.steady_rate(&EventCounters::activations);
        r.grants = o.report.steady_rate(&EventCounters::new_grants);
        r.measured_rho = o.report.measured_rho;
        r.ok = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      if (log) {
        std::lock_guard<std::mutex> lk(log_mu);
        *log << "[" << (i + 1) << "/" << points.size() << "] " << r.hash << (r.ok ? " ok" : " FAILED: " + r.error) << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (opt.write) {
    const fs::path dir = fs::path(opt.out_root) / scenario_dir_name(s.name);
    fs::create_directories(dir);
    std::ofstream out(dir / "summary.csv");
    if (!out) throw IoError("cannot write summary in '" + dir.string() + "'");
    out << kSummaryHeader << "\n";
    for (const auto& r : results) {
      const auto& c = r.config;
      const std::string head = r.hash + "," + scenario_dir_name(s.name) + "," + to_string(c.gate) + "," +
                               to_string(c.scheduler) + "," + to_string(c.engine) + "," +
                               fmt_num(c.traffic.target_rho) + "," + std::to_string(c.num_ues()) + "," +
                               std::to_string(c.seed) + ",";
      if (!r.ok) {
        out << head << "failed,,,,,,,,,,\n";
        continue;
      }
      const auto table = read_metrics_csv((fs::path(r.dir) / "metrics.csv").string());
      const auto cls = class_summary(table.latency_ms, table.ue, table.ue_class);
      const std::string tail = "," + fmt_num(r.measured_rho) + "," + fmt_num(r.touched) + "," + fmt_num(r.work) +
                               "," + fmt_num(r.activations) + "," + fmt_num(r.grants);
      for (auto it = cls.begin(); it != cls.end(); ++it) {
        const auto& v = it.value();
        auto num = [](const nlohmann::json& x) { return x.is_null() ? std::string() : fmt_num(x.get<double>()); };
        out << head << "ok," << it.key() << "," << v["packets"].get<std::size_t>() << "," << num(v["p50_ms"]) << ","
            << num(v["p99_ms"]) << "," << fmt_num(v["eta"].get<double>()) << tail << "\n";
      }
    }
  }
  return results;
}

}  // namespace cbsnr
