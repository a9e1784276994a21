// Command-line front end: sample -> fit -> simulate/compare -> optimize,
// plus the flow-cost calculator. Every run leaves a JSON manifest recording
// input digests, the seed and the artifacts it wrote.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "metapll/configio.hpp"
#include "metapll/costmodel.hpp"
#include "metapll/manifest.hpp"
#include "metapll/metamodel.hpp"
#include "metapll/optimize.hpp"
#include "metapll/oracle.hpp"
#include "metapll/pllsim.hpp"

namespace {

using namespace metapll;
namespace fs = std::filesystem;

struct GlobalOpts {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int work_factor = 1;
  bool work_factor_given = false;
};

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 1; i < argc; ++i) {
    if (i > 1) s += ' ';
    s += argv[i];
  }
  return s;
}

// captures input digests up front, artifacts as they are written, and stamps
// the wall clock when the command completes
class ManifestScope {
 public:
  ManifestScope(const GlobalOpts& g, std::string command_line,
                std::string name)
      : t0_(std::chrono::steady_clock::now()),
        path_((fs::path(g.out_dir) / (name + "_manifest.json")).string()) {
    m_.command = std::move(command_line);
    m_.seed = g.seed;
  }
  void input(const std::string& p) {
    m_.input_digests[p] = digest_hex(fnv1a64_file(p));
  }
  void artifact(const std::string& p) { m_.artifacts.push_back(p); }
  void write() {
    m_.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
            .count();
    write_manifest(m_, path_);
  }

 private:
  RunManifest m_;
  std::chrono::steady_clock::time_point t0_;
  std::string path_;
};

std::string out_path(const GlobalOpts& g, const std::string& name) {
  return (fs::path(g.out_dir) / name).string();
}

void ensure_out_dir(const GlobalOpts& g) {
  if (!g.out_dir.empty()) fs::create_directories(g.out_dir);
}

OracleConfig make_oracle_config(const GlobalOpts& g,
                                const std::string& config_path) {
  OracleConfig cfg;
  if (!config_path.empty()) cfg = load_oracle_config(config_path);
  if (g.work_factor_given) cfg.work_factor = g.work_factor;
  return cfg;
}

PolyMetamodel autofit_metamodel(const GlobalOpts& g, const OracleConfig& ocfg,
                                double vdd_v) {
  const std::array<VarRange, 3> ranges = {
      VarRange{5e-6, 25e-6}, VarRange{5e-6, 25e-6}, VarRange{0.0, vdd_v}};
  SamplePlan plan =
      lhs_sample(100, ranges, derive_seed(g.seed, "autofit"));
  attach_oracle_responses(plan, ocfg);
  const FitResult fr = fit(plan, 2);
  std::printf("fitted metamodel from 100 oracle samples: freq R2 %.6f, power R2 %.6f\n",
              fr.freq.r2, fr.power.r2);
  return fr.model;
}

VcoView make_view(const std::string& name, const GlobalOpts& g,
                  const PllConfig& scenario, const std::string& model_path,
                  const std::string& oracle_cfg_path, ManifestScope& scope) {
  const OracleConfig ocfg = make_oracle_config(g, oracle_cfg_path);
  if (name == "oracle") return ocfg;
  if (name == "linear")
    return fit_linear_model(ocfg, scenario.wp_m, scenario.wn_m,
                            {0.0, scenario.vdd_v});
  if (name == "metamodel") {
    if (model_path.empty()) return autofit_metamodel(g, ocfg, scenario.vdd_v);
    scope.input(model_path);
    return load_csv(model_path);
  }
  throw std::invalid_argument("unknown view '" + name +
                              "' (expected linear, metamodel or oracle)");
}

std::string opt_str(const std::optional<double>& v,
                    const char* absent = "never") {
  return v ? format_sci(*v) : std::string(absent);
}

void print_metrics(const std::string& view, const SimMetrics& m) {
  std::printf("view: %s\n", view.c_str());
  std::printf("  lock_time_s: %s\n", opt_str(m.lock_time_s).c_str());
  std::printf("  f_locked_hz: %s\n", opt_str(m.f_locked_hz, "n/a").c_str());
  std::printf("  p_locked_w:  %s\n", opt_str(m.p_locked_w, "n/a").c_str());
}

// ---- subcommand handlers ----

struct SampleArgs {
  int n = 100;
  double wp_lo = 5e-6, wp_hi = 25e-6;
  double wn_lo = 5e-6, wn_hi = 25e-6;
  double vc_lo = 0.0, vc_hi = 1.8;
  std::string out;
  std::string oracle_cfg;
};

void do_sample(const GlobalOpts& g, const SampleArgs& a,
               const std::string& cmdline) {
  ensure_out_dir(g);
  ManifestScope scope(g, cmdline, "sample");
  if (!a.oracle_cfg.empty()) scope.input(a.oracle_cfg);
  if (a.n < 1) throw std::invalid_argument("sample count must be >= 1");

  const OracleConfig ocfg = make_oracle_config(g, a.oracle_cfg);
  const std::array<VarRange, 3> ranges = {VarRange{a.wp_lo, a.wp_hi},
                                          VarRange{a.wn_lo, a.wn_hi},
                                          VarRange{a.vc_lo, a.vc_hi}};
  SamplePlan plan = lhs_sample(a.n, ranges, derive_seed(g.seed, "sample"));
  attach_oracle_responses(plan, ocfg);

  const std::string out = a.out.empty() ? out_path(g, "samples.csv") : a.out;
  save_samples_csv(plan, out);
  scope.artifact(out);
  scope.write();
  std::printf("wrote %d oracle samples to %s\n", a.n, out.c_str());
}

struct FitArgs {
  std::string in;
  int degree = 2;
  std::string out;
  std::string vams;
  std::string module_name = "vco_pam";
};

void do_fit(const GlobalOpts& g, const FitArgs& a, const std::string& cmdline) {
  ensure_out_dir(g);
  ManifestScope scope(g, cmdline, "fit");
  const std::string in = a.in.empty() ? out_path(g, "samples.csv") : a.in;
  scope.input(in);
  if (a.degree < 0) throw std::invalid_argument("degree must be >= 0");

  const SamplePlan plan = load_samples_csv(in);
  if (!plan.has_responses())
    throw FitError("sample file has no response columns: " + in);
  const FitResult fr = fit(plan, a.degree);

  const std::string out = a.out.empty() ? out_path(g, "model.csv") : a.out;
  save_csv(fr.model, out);
  scope.artifact(out);
  std::printf("fit degree %d on %zu samples (%zu terms)\n", a.degree,
              plan.points.size(), fr.model.terms.size());
  std::printf("  freq : RMSE %s Hz, R2 %.8f\n", format_sci(fr.freq.rmse).c_str(),
              fr.freq.r2);
  std::printf("  power: RMSE %s W,  R2 %.8f\n",
              format_sci(fr.power.rmse).c_str(), fr.power.r2);
  std::printf("wrote %s\n", out.c_str());

  if (!a.vams.empty()) {
    std::ofstream os(a.vams, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + a.vams);
    os << emit_vams(fr.model, a.module_name,
                    fs::path(out).filename().string());
    scope.artifact(a.vams);
    std::printf("wrote %s\n", a.vams.c_str());
  }
  scope.write();
}

struct SimArgs {
  std::string config;
  std::string view = "metamodel";
  std::string model;
  std::string oracle_cfg;
  std::string trace_out;
  std::string edges_out;
};

void do_simulate(const GlobalOpts& g, const SimArgs& a,
                 const std::string& cmdline) {
  ensure_out_dir(g);
  ManifestScope scope(g, cmdline, "simulate");
  PllConfig cfg;
  if (!a.config.empty()) {
    scope.input(a.config);
    cfg = load_pll_config(a.config);
  }
  if (!a.oracle_cfg.empty()) scope.input(a.oracle_cfg);
  cfg.vco_view = make_view(a.view, g, cfg, a.model, a.oracle_cfg, scope);

  const SimResult res = run(cfg);
  print_metrics(a.view, res.metrics);

  if (!a.trace_out.empty()) {
    save_trace_csv(res.trace, cfg.power_window_cycles, a.trace_out);
    scope.artifact(a.trace_out);
  }
  if (!a.edges_out.empty()) {
    save_edges_csv(res.trace, a.edges_out);
    scope.artifact(a.edges_out);
  }
  scope.write();
}

struct CompareArgs {
  std::string views = "oracle,linear,metamodel";
  std::string config;
  std::string model;
  std::string oracle_cfg;
  std::string out;
};

void do_compare(const GlobalOpts& g, const CompareArgs& a,
                const std::string& cmdline) {
  ensure_out_dir(g);
  ManifestScope scope(g, cmdline, "compare");
  PllConfig cfg;
  if (!a.config.empty()) {
    scope.input(a.config);
    cfg = load_pll_config(a.config);
  }
  if (!a.oracle_cfg.empty()) scope.input(a.oracle_cfg);

  std::vector<std::string> names;
  std::stringstream ss(a.views);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) names.push_back(tok);
  if (names.size() < 2)
    throw std::invalid_argument("compare needs at least 2 views");

  std::vector<VcoView> views;
  for (const auto& n : names)
    views.push_back(make_view(n, g, cfg, a.model, a.oracle_cfg, scope));

  const auto reports = compare_views(cfg, views);

  std::printf("%-10s %14s %14s %14s %12s %10s %10s %10s %10s\n", "view",
              "lock_time_s", "f_locked_hz", "p_locked_w", "vc_rmse_v",
              "lock_err%", "f_err%", "p_err%", "wall_s");
  for (const auto& r : reports) {
    auto pct = [](const std::optional<double>& v) {
      char buf[32];
      if (!v) return std::string("n/a");
      std::snprintf(buf, sizeof buf, "%.3f", *v);
      return std::string(buf);
    };
    std::printf("%-10s %14s %14s %14s %12s %10s %10s %10s %10.4f\n",
                r.view.c_str(), opt_str(r.metrics.lock_time_s).c_str(),
                opt_str(r.metrics.f_locked_hz, "n/a").c_str(),
                opt_str(r.metrics.p_locked_w, "n/a").c_str(),
                format_sci(r.vc_rmse_v).c_str(), pct(r.lock_time_err_pct).c_str(),
                pct(r.f_locked_err_pct).c_str(), pct(r.p_locked_err_pct).c_str(),
                r.wall_clock_s);
  }

  // the CSV artifact stays deterministic: wall clock is stdout/manifest only
  const std::string out = a.out.empty() ? out_path(g, "compare.csv") : a.out;
  std::ofstream os(out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + out);
  os << "view,lock_time_s,f_locked_hz,p_locked_w,vc_rmse_v,lock_time_err_pct,"
        "f_locked_err_pct,p_locked_err_pct\n";
  for (const auto& r : reports) {
    auto cell = [](const std::optional<double>& v) {
      return v ? format_sci(*v) : std::string("never");
    };
    os << r.view << ',' << cell(r.metrics.lock_time_s) << ','
       << cell(r.metrics.f_locked_hz) << ',' << cell(r.metrics.p_locked_w)
       << ',' << format_sci(r.vc_rmse_v) << ',' << cell(r.lock_time_err_pct)
       << ',' << cell(r.f_locked_err_pct) << ',' << cell(r.p_locked_err_pct)
       << '\n';
  }
  os.close();
  scope.artifact(out);
  scope.write();
}

struct OptArgs {
  std::string problem;
  std::string de;
  std::string view = "metamodel";
  std::string model;
  std::string oracle_cfg;
  std::string history_out;
};

void do_optimize(const GlobalOpts& g, const OptArgs& a,
                 const std::string& cmdline) {
  ensure_out_dir(g);
  ManifestScope scope(g, cmdline, "optimize");
  OptProblem prob;
  if (!a.problem.empty()) {
    scope.input(a.problem);
    prob = load_opt_problem(a.problem);
  }
  DeConfig de;
  if (!a.de.empty()) {
    scope.input(a.de);
    de = load_de_config(a.de);
  }
  de.seed = derive_seed(g.seed, "de");  // --seed is the single entropy source
  if (!a.oracle_cfg.empty()) scope.input(a.oracle_cfg);
  if (a.view != "metamodel" && a.view != "oracle")
    throw std::invalid_argument("optimize supports metamodel or oracle views");
  prob.scenario.vco_view =
      make_view(a.view, g, prob.scenario, a.model, a.oracle_cfg, scope);

  const OptResult res = de_run(prob, de);

  const std::string out =
      a.history_out.empty() ? out_path(g, "history.csv") : a.history_out;
  save_history_csv(res.history, out);
  scope.artifact(out);
  scope.write();

  std::printf("generations run: %d\n", res.generations_run);
  std::printf("best design: wp %s m, wn %s m\n",
              format_sci(res.best.wp_m).c_str(),
              format_sci(res.best.wn_m).c_str());
  std::printf("  power_w: %s\n", format_sci(res.best.power_w).c_str());
  std::printf("  lock_time_s: %s\n", opt_str(res.best.lock_time_s).c_str());
  std::printf("  tuning range: %s .. %s Hz\n",
              format_sci(res.best.f_tuning_min_hz).c_str(),
              format_sci(res.best.f_tuning_max_hz).c_str());
  std::printf("  feasible: %s\n", res.feasible ? "yes" : "NO (best by constraint violation)");
  std::printf("wrote %s\n", out.c_str());
}

struct CostArgs {
  long long ni = 0, ns = 0;
  double text = 0, tsim = 0, tgen = 0, tini = 0;
};

void do_cost(const GlobalOpts& g, const CostArgs& a,
             const std::string& cmdline) {
  ensure_out_dir(g);
  ManifestScope scope(g, cmdline, "cost");
  const CostParams p{a.ni, a.ns, a.text, a.tsim, a.tgen, a.tini};
  const double t_ma = t_macromodel(p);
  const double t_full = t_metamodel_flow(p, true);
  const double t_red = t_metamodel_flow(p, false);
  const double t_d = t_difference(p);

  std::printf("%-26s %14s %12s\n", "flow", "seconds", "hours");
  auto row = [](const char* name, double s) {
    std::printf("%-26s %14.3f %12.3f\n", name, s, s / 3600.0);
  };
  row("macromodel", t_ma);
  row("metamodel (full)", t_full);
  row("metamodel (reduced)", t_red);
  row("difference", t_d);
  std::printf("difference is %.1f h; reduction %.1f %%\n", t_d / 3600.0,
              t_ma > 0 ? reduction_pct(t_ma, t_red) * 100.0 : 0.0);
  scope.write();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polynomial-metamodel PLL design toolkit"};
  app.require_subcommand(1);
  GlobalOpts g;
  app.add_option("--seed", g.seed, "master seed for every random stream")
      ->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "directory for artifacts")
      ->capture_default_str();
  auto* wf = app.add_option("--work-factor", g.work_factor,
                            "mesh solves per oracle evaluation")
                 ->check(CLI::PositiveNumber);

  SampleArgs sa;
  auto* sc_sample =
      app.add_subcommand("sample", "draw an LHS plan and evaluate the oracle");
  sc_sample->fallthrough();
  sc_sample->add_option("-n,--num", sa.n, "number of samples")->required();
  sc_sample->add_option("--wp-lo", sa.wp_lo, "")->capture_default_str();
  sc_sample->add_option("--wp-hi", sa.wp_hi, "")->capture_default_str();
  sc_sample->add_option("--wn-lo", sa.wn_lo, "")->capture_default_str();
  sc_sample->add_option("--wn-hi", sa.wn_hi, "")->capture_default_str();
  sc_sample->add_option("--vc-lo", sa.vc_lo, "")->capture_default_str();
  sc_sample->add_option("--vc-hi", sa.vc_hi, "")->capture_default_str();
  sc_sample->add_option("--out", sa.out, "sample CSV path");
  sc_sample->add_option("--oracle-config", sa.oracle_cfg, "oracle JSON");

  FitArgs fa;
  auto* sc_fit = app.add_subcommand("fit", "fit a polynomial metamodel");
  sc_fit->fallthrough();
  sc_fit->add_option("--in", fa.in, "sample CSV (default <out-dir>/samples.csv)");
  sc_fit->add_option("-d,--degree", fa.degree, "polynomial degree")
      ->capture_default_str();
  sc_fit->add_option("--out", fa.out, "model CSV path");
  sc_fit->add_option("--vams", fa.vams, "also emit a Verilog-AMS module here");
  sc_fit->add_option("--module", fa.module_name, "Verilog-AMS module name")
      ->capture_default_str();

  SimArgs sim;
  auto* sc_sim = app.add_subcommand("simulate", "run the PLL once");
  sc_sim->fallthrough();
  sc_sim->add_option("--config", sim.config, "scenario JSON");
  sc_sim->add_option("--view", sim.view, "linear | metamodel | oracle")
      ->capture_default_str();
  sc_sim->add_option("--model", sim.model, "metamodel CSV (default: refit)");
  sc_sim->add_option("--oracle-config", sim.oracle_cfg, "oracle JSON");
  sc_sim->add_option("--trace-out", sim.trace_out, "uniform-grid trace CSV");
  sc_sim->add_option("--edges-out", sim.edges_out, "digital edge log CSV");

  CompareArgs ca;
  auto* sc_cmp =
      app.add_subcommand("compare", "run several views on one scenario");
  sc_cmp->fallthrough();
  sc_cmp->add_option("--views", ca.views, "comma list; first is the reference")
      ->capture_default_str();
  sc_cmp->add_option("--config", ca.config, "scenario JSON");
  sc_cmp->add_option("--model", ca.model, "metamodel CSV (default: refit)");
  sc_cmp->add_option("--oracle-config", ca.oracle_cfg, "oracle JSON");
  sc_cmp->add_option("--out", ca.out, "report CSV path");

  OptArgs oa;
  auto* sc_opt =
      app.add_subcommand("optimize", "constrained power minimization (DE)");
  sc_opt->fallthrough();
  sc_opt->add_option("--problem", oa.problem, "problem JSON");
  sc_opt->add_option("--de", oa.de, "DE hyperparameter JSON (seed superseded by --seed)");
  sc_opt->add_option("--view", oa.view, "metamodel | oracle")
      ->capture_default_str();
  sc_opt->add_option("--model", oa.model, "metamodel CSV (default: refit)");
  sc_opt->add_option("--oracle-config", oa.oracle_cfg, "oracle JSON");
  sc_opt->add_option("--history-out", oa.history_out, "history CSV path");

  CostArgs cta;
  auto* sc_cost = app.add_subcommand("cost", "flow computation-time model");
  sc_cost->fallthrough();
  sc_cost->add_option("--ni", cta.ni, "optimizer iterations")->required();
  sc_cost->add_option("--ns", cta.ns, "metamodel samples")->required();
  sc_cost->add_option("--text", cta.text, "seconds per extraction")->required();
  sc_cost->add_option("--tsim", cta.tsim, "seconds per transient")->required();
  sc_cost->add_option("--tgen", cta.tgen, "metamodel generation seconds")
      ->capture_default_str();
  sc_cost->add_option("--tini", cta.tini, "per-iteration init seconds")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  g.work_factor_given = wf->count() > 0;

  const std::string cmdline = join_args(argc, argv);
  try {
    if (sc_sample->parsed()) do_sample(g, sa, cmdline);
    if (sc_fit->parsed()) do_fit(g, fa, cmdline);
    if (sc_sim->parsed()) do_simulate(g, sim, cmdline);
    if (sc_cmp->parsed()) do_compare(g, ca, cmdline);
    if (sc_opt->parsed()) do_optimize(g, oa, cmdline);
    if (sc_cost->parsed()) do_cost(g, cta, cmdline);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const FitError& e) {
    std::fprintf(stderr, "fit error: %s\n", e.what());
    return 3;
  } catch (const SimError& e) {
    std::fprintf(stderr, "simulation error: %s\n", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
  return 0;
}
