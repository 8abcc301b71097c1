// cbsnr: run, sweep and audit credit-gated NR downlink simulations.
#include <CLI11.hpp>

#include <cmath>
#include <iostream>

#include "cbsnr/cost_model.hpp"
#include "cbsnr/scenario.hpp"

using namespace cbsnr;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

nlohmann::json load_config_doc(const std::string& path, const std::vector<std::string>& sets,
                               std::optional<std::uint64_t> seed, const std::string& engine) {
  nlohmann::json doc = config_document(read_json_file(path));
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_override(doc, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (seed) doc["seed"] = *seed;
  if (engine == "naive" || engine == "event") doc["engine"] = engine;
  return doc;
}

void print_summary(const RunOutcome& o) {
  std::cout << "run " << o.manifest["point_hash"].get<std::string>() << " -> " << o.dir << "\n";
  std::cout << "  measured rho " << fmt_num(o.report.measured_rho) << ", C_DL " << fmt_num(o.plan.c_dl)
            << " B/slot, eta " << fmt_num(o.report.utilization()) << "\n";
  for (auto it = o.manifest["classes"].begin(); it != o.manifest["classes"].end(); ++it) {
    const auto& v = it.value();
    std::cout << "  " << it.key() << ": packets " << v["packets"];
    if (!v["p50_ms"].is_null()) std::cout << ", p50 " << fmt_num(v["p50_ms"].get<double>()) << " ms, p99 " << fmt_num(v["p99_ms"].get<double>()) << " ms";
    std::cout << ", eta " << fmt_num(v["eta"].get<double>()) << "\n";
  }
}

int cmd_run(const std::string& path, const std::vector<std::string>& sets, std::optional<std::uint64_t> seed,
            const std::string& engine, bool trace, const std::string& out) {
  const SimConfig cfg = config_from_json(load_config_doc(path, sets, seed, engine == "both" ? "event" : engine));
  int rc = 0;
  if (engine == "both") {
    const auto r = run_lockstep(make_plan(cfg));
    if (r.identical) {
      std::cout << "engines agree over " << r.slots << " slots\n";
    } else {
      std::cerr << "engine mismatch at slot " << r.first_mismatch << ": " << r.detail << "\n";
      rc = kExitFailure;
    }
  }
  RunOptions opt;
  opt.out_root = out;
  opt.trace = trace;
  print_summary(run_point(cfg, opt));
  return rc;
}

int cmd_sweep(const std::string& path, bool trace, const std::string& out, unsigned jobs) {
  const Scenario s = scenario_from_json(read_json_file(path), fs::path(path).parent_path().string());
  RunOptions opt;
  opt.out_root = out;
  opt.trace = trace;
  const auto results = run_sweep(s, opt, jobs, &std::cerr);
  int failed = 0;
  for (const auto& r : results) failed += r.ok ? 0 : 1;
  const std::string root = s.out_root.empty() || out != default_out_root() ? out : s.out_root;
  std::cout << results.size() - failed << "/" << results.size() << " points ok, summary in "
            << (fs::path(root) / scenario_dir_name(s.name) / "summary.csv").string() << "\n";
  return failed ? kExitFailure : 0;
}

int cmd_audit(const std::string& dir) {
  if (!fs::exists(fs::path(dir) / "manifest.json")) throw IoError("no manifest.json in '" + dir + "'");
  const auto r = audit_run_dir(dir);
  write_json_file((fs::path(dir) / "audit.json").string(), audit_to_json(r));
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "audit: " << r.violations.size() << " violations, checked w_elig " << r.elig_checked << ", w_queue "
            << r.queue_checked << ", w_reelig " << r.reelig_checked << " (E_max " << r.e_max_used << ", open at end "
            << r.open_at_end << ")\n";
  for (std::size_t i = 0; i < r.violations.size() && i < 20; ++i) {
    const auto& v = r.violations[i];
    std::cout << "  " << v.kind << " ue " << v.ue << " slot " << v.start << ": " << v.measured << " > "
              << v.bound << "\n";
  }
  return r.ok() ? 0 : kExitFailure;
}

int cmd_cost(CostModel m, const std::string& fit_path, double u_min, double u_max, int points) {
  if (!fit_path.empty()) {
    std::ifstream in(fit_path);
    if (!in) throw IoError("cannot open '" + fit_path + "'");
    std::string line;
    std::getline(in, line);
    const auto head = split_csv(line);
    auto col = [&](const std::string& name) {
      const auto it = std::find(head.begin(), head.end(), name);
      if (it == head.end()) throw IoError("'" + fit_path + "' lacks column '" + name + "'");
      return static_cast<std::size_t>(it - head.begin());
    };
    const auto c_engine = col("engine"), c_u = col("num_ues"), c_touch = col("touched_per_slot"),
               c_work = col("work_per_slot"), c_a = col("activations_per_slot"), c_g = col("grants_per_slot"),
               c_cls = col("class"), c_status = col("status");
    std::vector<double> nx, ny, ex, ey;
    double sa = 0, sg = 0;
    while (std::getline(in, line)) {
      const auto f = split_csv(line);
      if (f.size() != head.size() || f[c_status] != "ok" || f[c_cls] != "p1") continue;
      const double u = std::stod(f[c_u]);
      if (f[c_engine] == "naive") {
        nx.push_back(u);
        ny.push_back(std::stod(f[c_touch]));
      } else {
        const double a = std::stod(f[c_a]), g = std::stod(f[c_g]);
        ex.push_back((a + g) * std::log2(u));
        ey.push_back(std::stod(f[c_work]));
        sa += a;
        sg += g;
      }
    }
    if (nx.size() < 2 || ex.size() < 2) throw IoError("'" + fit_path + "' needs naive and event rows at two or more U");
    const auto fn = fit_affine(nx, ny), fe = fit_affine(ex, ey);
    m.c0 = fn.intercept;
    m.cU = fn.slope;
    m.c0e = fe.intercept;
    m.cG = 0.0;
    m.cH = fe.slope;
    m.A = sa / static_cast<double>(ex.size());
    m.G = sg / static_cast<double>(ex.size());
    std::cerr << "fit: naive c0=" << fmt_num(fn.intercept) << " cU=" << fmt_num(fn.slope) << " R2=" << fmt_num(fn.r2)
              << "; event c0'=" << fmt_num(fe.intercept) << " cH=" << fmt_num(fe.slope) << " R2=" << fmt_num(fe.r2)
              << "; A=" << fmt_num(m.A) << " G=" << fmt_num(m.G) << "\n";
  }
  std::vector<double> us;
  for (int i = 0; i < points; ++i) us.push_back(u_min * std::pow(u_max / u_min, points > 1 ? double(i) / (points - 1) : 0.0));
  std::cout << "U,naive_cost,event_cost\n";
  for (const auto& p : cost_curves(m, us)) std::cout << fmt_num(p.u) << "," << fmt_num(p.naive) << "," << fmt_num(p.event) << "\n";
  const auto x = find_crossover(m, u_min, u_max);
  std::cerr << "crossover U*: " << (x.u_star ? fmt_num(*x.u_star) : std::string("none")) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Credit-based shaping for NR downlink scheduling: simulator and trace auditor"};
  app.require_subcommand(1);

  std::string out = default_out_root();
  bool trace = false;

  auto* run = app.add_subcommand("run", "Run one configuration (a config file or a run manifest)");
  std::string run_path, engine = "";
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  run->add_option("config", run_path, "Config JSON or manifest.json")->required();
  run->add_option("--set", sets, "Override key=value (dotted keys; aliases rho, q, K, N)");
  run->add_option("--seed", seed, "Random seed");
  run->add_option("--engine", engine, "Gate engine")->check(CLI::IsMember({"naive", "event", "both"}));
  run->add_flag("--trace", trace, "Write trace.csv.gz regardless of run length");
  run->add_option("--out", out, "Output root (default $CBSNR_OUT or ./out)");

  auto* sweep = app.add_subcommand("sweep", "Run every point of a scenario grid");
  std::string sweep_path;
  unsigned jobs = 0;
  sweep->add_option("scenario", sweep_path, "Scenario JSON")->required();
  sweep->add_flag("--trace", trace, "Write traces for every point");
  sweep->add_option("--out", out, "Output root (default $CBSNR_OUT, the scenario's 'out', or ./out)");
  sweep->add_option("-j,--jobs", jobs, "Worker threads (default: hardware threads)");

  auto* audit = app.add_subcommand("audit", "Check a traced run against the waiting-time bounds");
  std::string audit_dir;
  audit->add_option("run_dir", audit_dir, "Directory holding manifest.json and trace.csv.gz")->required();

  auto* cost = app.add_subcommand("cost", "Per-slot cost curves of the naive and event-driven gates");
  CostModel model;
  std::string fit_path;
  double u_min = 2, u_max = 4096;
  int points = 12;
  cost->add_option("--fit", fit_path, "Fit constants from a sweep summary.csv (engines naive and event)");
  cost->add_option("--c0", model.c0);
  cost->add_option("--cU", model.cU);
  cost->add_option("--c0e", model.c0e, "Event-driven fixed cost");
  cost->add_option("--cG", model.cG);
  cost->add_option("--cH", model.cH);
  cost->add_option("--A", model.A, "Activations per slot");
  cost->add_option("--G", model.G, "New grants per slot");
  cost->add_option("--umin", u_min);
  cost->add_option("--umax", u_max);
  cost->add_option("--points", points);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_path, sets, seed, engine, trace, out);
    if (*sweep) return cmd_sweep(sweep_path, trace, out, jobs);
    if (*audit) return cmd_audit(audit_dir);
    if (*cost) return cmd_cost(model, fit_path, u_min, u_max, points);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvariantError& e) {
    std::cerr << "invariant breach at slot " << e.slot() << ": " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
