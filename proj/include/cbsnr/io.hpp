// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbsnr/config.hpp"
#include "cbsnr/simulator.hpp"

namespace cbsnr {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Content address of a run: FNV-1a over the canonical config JSON.
inline std::string point_hash(const SimConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config_to_json(c).dump())));
  return buf;
}

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Linear interpolation between closest ranks; p in [0,1].
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  const double f = pos - static_cast<double>(i);
  return v[i] + f * (v[i + 1] - v[i]);
}

inline constexpr const char* kMetricsHeader =
    "kind,ue,class,arrival_ms,latency_ms,served_bytes,tbs_bytes,new_grants,arrived_bytes,acked_bytes,dropped_bytes,eta";

inline void write_metrics_csv(std::ostream& out, const MetricsReport& r) {
  out << kMetricsHeader << "\n";
  for (const auto& p : r.packets) {
    out << "packet," << p.ue << "," << to_string(p.cls) << "," << fmt_num(static_cast<double>(p.arrival_slot) * r.slot_ms)
        << "," << fmt_num(static_cast<double>(p.latency_slots) * r.slot_ms) << ",,,,,,,\n";
  }
  for (std::size_t u = 0; u < r.ue.size(); ++u) {
    const auto& m = r.ue[u];
    out << "ue," << u << "," << to_string(r.ue_class[u]) << ",,," << m.served_bytes << "," << m.tbs_bytes << ","
        << m.new_grants << "," << m.arrived_bytes << "," << m.acked_bytes << "," << m.dropped_bytes << ","
        << fmt_num(m.utilization()) << "\n";
  }
}

inline void write_metrics_csv(const std::string& path, const MetricsReport& r) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_metrics_csv(out, r);
}

/// Per-UE rows of a metrics CSV, and per-class packet latencies in ms.
struct MetricsTable {
  std::vector<UeMetrics> ue;
  std::vector<PriorityId> ue_class;
  std::map<PriorityId, std::vector<double>> latency_ms;
};

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ls(line);
  while (std::getline(ls, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline MetricsTable read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw IoError("'" + path + "' is not a metrics CSV");
  MetricsTable t;
  while (std::getline(in, line)) {
    const auto f = split_csv(line);
    if (f.size() != 12) throw IoError("'" + path + "': malformed row '" + line + "'");
    const PriorityId cls = parse_priority(f[2]);
    if (f[0] == "packet") {
      t.latency_ms[cls].push_back(std::stod(f[4]));
    } else if (f[0] == "ue") {
      const auto u = static_cast<std::size_t>(std::stoi(f[1]));
      if (t.ue.size() <= u) {
        t.ue.resize(u + 1);
        t.ue_class.resize(u + 1);
      }
      t.ue_class[u] = cls;
      auto& m = t.ue[u];
      m.served_bytes = std::stoll(f[5]);
      m.tbs_bytes = std::stoll(f[6]);
      m.new_grants = std::stoull(f[7]);
      m.arrived_bytes = std::stoll(f[8]);
      m.acked_bytes = std::stoll(f[9]);
      m.dropped_bytes = std::stoll(f[10]);
    }
  }
  return t;
}

/// Per-class latency quantiles and pooled utilization.
inline nlohmann::json class_summary(const std::map<PriorityId, std::vector<double>>& lat, const std::vector<UeMetrics>& ue,
                                    const std::vector<PriorityId>& ue_class) {
  nlohmann::json j = nlohmann::json::object();
  for (PriorityId id : {PriorityId::P1, PriorityId::P2, PriorityId::P3}) {
    Bytes s = 0, t = 0;
    int n_ue = 0;
    for (std::size_t u = 0; u < ue.size(); ++u) {
      if (ue_class[u] != id) continue;
      ++n_ue;
      s += ue[u].served_bytes;
      t += ue[u].tbs_bytes;
    }
    if (n_ue == 0) continue;
    const auto it = lat.find(id);
    const std::vector<double> v = it == lat.end() ? std::vector<double>{} : it->second;
    nlohmann::json c;
    c["packets"] = v.size();
    c["p50_ms"] = v.empty() ? nlohmann::json(nullptr) : nlohmann::json(quantile(v, 0.5));
    c["p99_ms"] = v.empty() ? nlohmann::json(nullptr) : nlohmann::json(quantile(v, 0.99));
    c["eta"] = t > 0 ? static_cast<double>(s) / static_cast<double>(t) : 1.0;
    j[to_string(id)] = c;
  }
  return j;
}

inline nlohmann::json counters_to_json(const EventCounters& k) {
  return {{"activations", k.activations},         {"new_grants", k.new_grants},
          {"wakeups", k.wakeups},                 {"stale_pops", k.stale_pops},
          {"heap_inserts", k.heap_inserts},       {"heap_comparisons", k.heap_comparisons},
          {"ring_ops", k.ring_ops},               {"harq_touches", k.harq_touches},
          {"touched", k.touched},                 {"slots", k.slots},
          {"max_touched_in_slot", k.max_touched_in_slot}, {"work", k.work()}};
}

inline nlohmann::json plan_to_json(const RunPlan& p) {
  nlohmann::json j;
  j["q"] = p.q;
  j["payload_factor"] = p.payload_factor;
  j["offered_bytes_per_slot"] = p.offered_bytes_per_slot;
  j["c_dl_bytes_per_slot"] = p.c_dl;
  j["c_res_bytes_per_slot"] = p.c_res;
  j["reference_rate_bytes_per_s"] = p.reference_rate_bytes_per_s;
  j["ues"] = nlohmann::json::array();
  for (const auto& u : p.ues)
    j["ues"].push_back({{"class", to_string(u.cls.id)},
                        {"payload_bytes", u.payload},
                        {"allowance", u.allowance},
                        {"clamp_lo", u.clamp_lo},
                        {"clamp_hi", u.clamp_hi},
                        {"max_tbs", u.max_tbs}});
  return j;
}

inline std::vector<UePlan> ue_plans_from_json(const nlohmann::json& plan, const SimConfig& c) {
  std::vector<UePlan> out;
  for (const auto& j : plan.at("ues")) {
    UePlan u;
    u.cls = c.classes.at(parse_priority(j.at("class").get<std::string>()));
    u.payload = j.at("payload_bytes").get<Bytes>();
    u.allowance = j.at("allowance").get<Bytes>();
    u.clamp_lo = j.at("clamp_lo").get<Bytes>();
    u.clamp_hi = j.at("clamp_hi").get<Bytes>();
    u.max_tbs = j.at("max_tbs").get<Bytes>();
    out.push_back(u);
  }
  return out;
}

inline nlohmann::json make_manifest(const RunPlan& plan, const MetricsReport& r) {
  nlohmann::json j;
  j["point_hash"] = point_hash(plan.config);
  j["seed"] = plan.config.seed;
  j["config"] = config_to_json(plan.config);
  j["plan"] = plan_to_json(plan);
  j["counters"] = counters_to_json(r.counters);
  j["per_slot_after_warmup"] = {{"activations", r.steady_rate(&EventCounters::activations)},
                                {"new_grants", r.steady_rate(&EventCounters::new_grants)},
                                {"touched", r.steady_rate(&EventCounters::touched)},
                                {"heap_inserts", r.steady_rate(&EventCounters::heap_inserts)},
                                {"work", r.steady_work()}};
  std::map<PriorityId, std::vector<double>> lat;
  for (const auto& p : r.packets) lat[p.cls].push_back(static_cast<double>(p.latency_slots) * r.slot_ms);
  j["classes"] = class_summary(lat, r.ue, r.ue_class);
  j["measured_rho"] = r.measured_rho;
  j["eta_overall"] = r.utilization();
  j["harq"] = {{"tb_feedbacks", r.tb_feedbacks},
               {"first_tx_feedbacks", r.first_tx_feedbacks},
               {"first_tx_nacks", r.first_tx_nacks},
               {"retx_grants", r.retx_grants},
               {"tb_drops", r.tb_drops},
               {"packets_lost", r.packets_lost}};
  return j;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

inline constexpr const char* kTraceHeader = "slot,event,ue,v1,v2,v3";

/// Gzipped per-slot trace. One `cap` row per slot (v1 = new-grant capacity,
/// v2 = UEs touched by the gate), one `credit` row per UE when gated.
class TraceWriter {
 public:
  explicit TraceWriter(const std::string& path) : path_(path) {
    file_ = gzopen(path.c_str(), "wb6");
    if (!file_) throw IoError("cannot write '" + path + "'");
    line(kTraceHeader);
  }
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;
  ~TraceWriter() { close(); }

  void observe(const SlotRecord& r) {
    const Slot n = r.slot;
    row(n, "cap", -1, r.grant_capacity, static_cast<std::int64_t>(r.touched), 0);
    for (std::size_t u = 0; u < r.credits.size(); ++u) row(n, "credit", static_cast<UeId>(u), r.credits[u], 0, 0);
    for (UeId u : r.eligible) row(n, "elig", u, 0, 0, 0);
    for (const auto& g : r.grants) {
      if (g.retx) {
        row(n, "grant_retx", g.ue, g.tbs, g.rbs, g.harq_pid);
      } else {
        row(n, "grant_new", g.ue, g.tbs, g.served, g.rbs);
      }
    }
    for (const auto& [u, b] : r.arrivals) row(n, "arrival", u, b, 0, 0);
  }

  void close() {
    if (file_) {
      gzclose(file_);
      file_ = nullptr;
    }
  }

 private:
  void row(Slot n, const char* ev, UeId u, std::int64_t a, std::int64_t b, std::int64_t c) {
    char buf[128];
    const int len = std::snprintf(buf, sizeof buf, "%lld,%s,%d,%lld,%lld,%lld\n", static_cast<long long>(n), ev, u,
                                  static_cast<long long>(a), static_cast<long long>(b), static_cast<long long>(c));
    if (gzwrite(file_, buf, static_cast<unsigned>(len)) != len) throw IoError("write failed on '" + path_ + "'");
  }
  void line(const char* s) {
    const std::string l = std::string(s) + "\n";
    if (gzwrite(file_, l.data(), static_cast<unsigned>(l.size())) != static_cast<int>(l.size()))
      throw IoError("write failed on '" + path_ + "'");
  }

  std::string path_;
  gzFile file_ = nullptr;
};

/// Streams a trace back as slot records. `num_ues` sizes the credit vector.
inline void read_trace(const std::string& path, int num_ues, const std::function<void(const SlotRecord&)>& fn) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open trace '" + path + "'");
  struct Closer {
    gzFile f;
    ~Closer() { gzclose(f); }
  } closer{f};
  char buf[256];
  if (!gzgets(f, buf, sizeof buf) || std::string(buf).rfind(kTraceHeader, 0) != 0)
    throw IoError("'" + path + "' is not a trace file");
  SlotRecord rec;
  bool open = false;
  bool has_credit = false;
  auto flush = [&] {
    if (!open) return;
    if (!has_credit) rec.credits.clear();
    fn(rec);
  };
  while (gzgets(f, buf, sizeof buf)) {
    long long n = 0, a = 0, b = 0, c = 0;
    int u = 0;
    char ev[32];
    if (std::sscanf(buf, "%lld,%31[^,],%d,%lld,%lld,%lld", &n, ev, &u, &a, &b, &c) != 6)
      throw IoError("'" + path + "': malformed trace row '" + std::string(buf) + "'");
    if (!open || n != rec.slot) {
      flush();
      rec.reset(n);
      rec.credits.assign(static_cast<std::size_t>(num_ues), 0);
      open = true;
      has_credit = false;
    }
    const std::string e(ev);
    if (u >= num_ues) throw IoError("'" + path + "': UE id " + std::to_string(u) + " out of range");
    if (e == "cap") {
      rec.grant_capacity = static_cast<int>(a);
      rec.touched = static_cast<std::uint64_t>(b);
    } else if (e == "credit") {
      rec.credits[u] = a;
      has_credit = true;
    } else if (e == "elig") {
      rec.eligible.push_back(u);
    } else if (e == "grant_new") {
      rec.grants.push_back({u, false, static_cast<int>(c), 0, a, b, 0});
    } else if (e == "grant_retx") {
      rec.grants.push_back({u, true, static_cast<int>(b), 0, a, 0, static_cast<int>(c)});
    } else if (e == "arrival") {
      rec.arrivals.emplace_back(u, a);
    } else {
      throw IoError("'" + path + "': unknown trace event '" + e + "'");
    }
  }
  flush();
}

}  // namespace cbsnr
