#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "metapll/oracle.hpp"
#include "metapll/pllsim.hpp"

using namespace metapll;

namespace {

// quick well-behaved linear view: locks at vc = 0.25 for the default target
LinearVcoModel easy_linear() {
  LinearVcoModel m;
  m.wp_m = 20e-6;
  m.wn_m = 10e-6;
  m.f0_hz = 2.18e9;
  m.kvco_hz_per_v = 8e7;
  m.power_w = 6e-4;
  return m;
}

PolyMetamodel fitted_metamodel(std::uint64_t seed = 42) {
  OracleConfig ocfg;
  const std::array<VarRange, 3> r = {VarRange{5e-6, 25e-6},
                                     VarRange{5e-6, 25e-6}, VarRange{0.0, 1.8}};
  SamplePlan plan = lhs_sample(100, r, seed);
  attach_oracle_responses(plan, ocfg);
  return fit(plan, 2).model;
}

std::string tmp_file(const char* stem) {
  return (std::filesystem::temp_directory_path() /
          (std::string(stem) + "_" + std::to_string(::getpid()) + ".csv"))
      .string();
}

}  // namespace

TEST_CASE("pfd raises up on a reference edge and resets after both arrive") {
  PfdState st;
  pfd_step(st, true, false, 0, 1);
  CHECK(st.up);
  CHECK_FALSE(st.dn);
  CHECK(st.clear_tick == -1);

  // feedback catches up 5 ticks later; both high schedules a clear
  pfd_step(st, false, true, 5, 3);
  CHECK(st.up);
  CHECK(st.dn);
  CHECK(st.clear_tick == 8);

  apply_pfd_clear(st, 7);  // too early
  CHECK(st.up);
  apply_pfd_clear(st, 8);
  CHECK_FALSE(st.up);
  CHECK_FALSE(st.dn);
  CHECK(st.clear_tick == -1);

  // a zero reset delay still holds the pulse for one tick
  pfd_step(st, true, true, 10, 0);
  CHECK(st.clear_tick == 11);
}

TEST_CASE("pfd always has a clear pending while both outputs are high") {
  // Simultaneous edges landing exactly on a clear tick can re-arm the pair,
  // so the raw both-high duration is unbounded; the real promise is that a
  // clear is always scheduled at most max(1, reset) ticks out.
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution edge(0.2);
    const long long reset_ticks = (long long)(seed % 4);
    const long long hold = std::max<long long>(1, reset_ticks);
    PfdState st;
    for (long long t = 0; t < 400; ++t) {
      apply_pfd_clear(st, t);
      const long long armed_before = st.clear_tick;
      pfd_step(st, edge(rng), edge(rng), t, reset_ticks);
      CAPTURE(seed);
      CAPTURE(t);
      if (st.up && st.dn) {
        REQUIRE(st.clear_tick > t);
        REQUIRE(st.clear_tick - t <= hold);
      } else {
        // a pending clear only exists for a both-high state
        REQUIRE(st.clear_tick == -1);
      }
      // arming never reschedules an already pending clear
      if (armed_before >= 0 && st.clear_tick >= 0)
        REQUIRE(st.clear_tick == armed_before);
    }
  }
}

TEST_CASE("charge pump integrates onto the filter at the textbook rate") {
  PllConfig cfg;
  cfg.lf.r1_ohm = 0.0;  // pure capacitive integrator
  cfg.lf.c2_f = 0.0;
  CpLfState st;
  const int steps = 1000;
  for (int i = 0; i < steps; ++i) cp_lf_step(st, true, false, cfg);
  // the slew limit exceeds the target in one step, so the ramp is exact
  const double want = cfg.cp_current_a * steps * cfg.analog_dt_s / cfg.lf.c1_f;
  CHECK(st.vc_v == doctest::Approx(want).epsilon(1e-9));
  CHECK(st.vc_v == doctest::Approx(0.42373).epsilon(0.01));

  // discharging pulls it back down at the same rate
  CpLfState st2 = st;
  for (int i = 0; i < steps / 2; ++i) cp_lf_step(st2, false, true, cfg);
  CHECK(st2.vc_v == doctest::Approx(st.vc_v - want / 2).epsilon(1e-6));
}

TEST_CASE("up and dn together leave the control voltage alone") {
  PllConfig cfg;
  CpLfState st;
  st.vc_v = 0.9;
  st.v1_v = 0.9;
  for (int i = 0; i < 200; ++i) cp_lf_step(st, true, true, cfg);
  CHECK(st.vc_v == doctest::Approx(0.9).epsilon(1e-12));
  for (int i = 0; i < 200; ++i) cp_lf_step(st, false, false, cfg);
  CHECK(st.vc_v == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("charge pump respects the supply rails") {
  PllConfig cfg;
  CpLfState st;
  st.vc_v = cfg.vdd_v;
  st.v1_v = cfg.vdd_v;
  for (int i = 0; i < 100; ++i) cp_lf_step(st, true, false, cfg);
  CHECK(st.vc_v == cfg.vdd_v);  // pumping up against the rail is gated off

  st = CpLfState{};
  for (int i = 0; i < 100; ++i) cp_lf_step(st, false, true, cfg);
  CHECK(st.vc_v == 0.0);
}

TEST_CASE("vco_step dispatches to whichever view is loaded") {
  const LinearVcoModel lin = easy_linear();
  VcoResponse r = vco_step(lin, 20e-6, 10e-6, 0.5);
  CHECK(r.freq_hz == doctest::Approx(2.18e9 + 0.5 * 8e7));
  CHECK(r.power_w == 6e-4);

  OracleConfig ocfg;
  r = vco_step(ocfg, 20e-6, 10e-6, 0.5);
  const VcoResponse want = oracle_eval(ocfg, 20e-6, 10e-6, 0.5);
  CHECK(r.freq_hz == want.freq_hz);
  CHECK(r.power_w == want.power_w);

  const PolyMetamodel m = fitted_metamodel();
  r = vco_step(m, 18e-6, 12e-6, 0.7);
  CHECK(r.freq_hz == evaluate(m, 18e-6, 12e-6, 0.7).freq_hz);

  LinearVcoModel broken = lin;
  broken.f0_hz = -1e9;
  CHECK_THROWS_WITH_AS(vco_step(broken, 20e-6, 10e-6, 0.0),
                       doctest::Contains("linear"), SimError);
}

TEST_CASE("default scenario locks to 2.2 GHz on the fitted metamodel") {
  PllConfig cfg;
  cfg.vco_view = fitted_metamodel();
  const SimResult res = run(cfg);
  REQUIRE(res.metrics.lock_time_s.has_value());
  CHECK(*res.metrics.lock_time_s > 0.0);
  CHECK(*res.metrics.lock_time_s < 400e-9);
  const double target = cfg.n_div * cfg.f_in_hz;
  CHECK(std::abs(*res.metrics.f_locked_hz - target) / target < 1e-3);
  CHECK(*res.metrics.p_locked_w > 4e-4);
  CHECK(*res.metrics.p_locked_w < 8e-4);

  // trace shape: one vc entry per tick plus the initial state
  CHECK(res.trace.vc_v.size() ==
        std::size_t(std::llround(cfg.t_end_s / cfg.analog_dt_s)) + 1);
  CHECK(res.trace.vc_v.front() == cfg.vc0_v);
  CHECK_FALSE(res.trace.cycles.empty());
  CHECK(res.trace.cycles.front().t_s == 0.0);
  // one reference sample per input cycle
  const auto want_refs =
      std::size_t(std::floor(cfg.t_end_s * cfg.f_in_hz));
  CHECK(res.trace.ref_samples.size() >= want_refs - 1);
  CHECK(res.trace.ref_samples.size() <= want_refs + 1);
}

TEST_CASE("simulation output is bitwise reproducible") {
  PllConfig cfg;
  cfg.vco_view = easy_linear();
  // default 500 ns horizon: the lock window needs ~20 reference cycles of
  // settled tail after the ~260 ns transient
  const SimResult a = run(cfg);
  const SimResult b = run(cfg);
  REQUIRE(a.trace.vc_v.size() == b.trace.vc_v.size());
  CHECK(a.trace.vc_v == b.trace.vc_v);
  REQUIRE(a.metrics.lock_time_s.has_value());
  CHECK(*a.metrics.lock_time_s == *b.metrics.lock_time_s);
  CHECK(*a.metrics.f_locked_hz == *b.metrics.f_locked_hz);
}

TEST_CASE("halving the step size barely moves the lock time") {
  PllConfig cfg;
  cfg.vco_view = fitted_metamodel();
  const SimResult coarse = run(cfg);
  PllConfig fine = cfg;
  fine.analog_dt_s = cfg.analog_dt_s / 2.0;
  const SimResult fin = run(fine);
  REQUIRE(coarse.metrics.lock_time_s.has_value());
  REQUIRE(fin.metrics.lock_time_s.has_value());
  const double rel = std::abs(*fin.metrics.lock_time_s -
                              *coarse.metrics.lock_time_s) /
                     *coarse.metrics.lock_time_s;
  CHECK(rel < 0.02);
}

TEST_CASE("divide-by-one loop locks the vco straight to the reference") {
  PllConfig cfg;
  cfg.vco_view = easy_linear();
  cfg.n_div = 1;
  cfg.f_in_hz = 2.2e9;
  cfg.t_end_s = 200e-9;
  cfg.lock_window = 10;
  const SimResult res = run(cfg);
  REQUIRE(res.metrics.lock_time_s.has_value());
  CHECK(std::abs(*res.metrics.f_locked_hz - 2.2e9) / 2.2e9 < 1e-3);
}

TEST_CASE("control voltage always stays inside the rails") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> cur(10e-6, 400e-6);
  std::uniform_real_distribution<double> vc0(0.0, 1.8);
  for (int trial = 0; trial < 12; ++trial) {
    PllConfig cfg;
    cfg.vco_view = easy_linear();
    cfg.t_end_s = 150e-9;
    cfg.cp_current_a = cur(rng);  // some of these badly overdrive the loop
    cfg.vc0_v = vc0(rng);
    const SimResult res = run(cfg);
    for (double v : res.trace.vc_v) {
      REQUIRE(v >= 0.0);
      REQUIRE(v <= cfg.vdd_v);
    }
  }
}

TEST_CASE("feedback divider produces one pulse per n vco cycles") {
  for (int n : {1, 2, 4, 9}) {
    PllConfig cfg;
    cfg.vco_view = easy_linear();
    cfg.n_div = n;
    cfg.f_in_hz = 2.2e9 / n;
    cfg.t_end_s = 200e-9;
    const SimResult res = run(cfg);
    long long out_rises = 0, fb_rises = 0;
    for (const auto& e : res.trace.edges) {
      if (e.signal == Signal::out && e.value == 1) ++out_rises;
      if (e.signal == Signal::fb && e.value == 1) ++fb_rises;
    }
    CAPTURE(n);
    REQUIRE(fb_rises > 0);
    // the divider fires on every n-th vco rising edge, nothing else
    CHECK(fb_rises == out_rises / n);
  }
}

TEST_CASE("vc_rmse measures exactly what it says on simple traces") {
  SimTrace a, b;
  a.dt_s = 1e-10;
  b.dt_s = 1e-10;
  a.t_end_s = 1e-8;
  b.t_end_s = 1e-8;
  for (int i = 0; i <= 100; ++i) {
    a.vc_v.push_back(0.5);
    b.vc_v.push_back(0.8);
  }
  CHECK(vc_rmse(a, a) == 0.0);
  CHECK(vc_rmse(a, b) == doctest::Approx(0.3).epsilon(1e-12));

  // different step sizes are resampled onto the common grid
  SimTrace c;
  c.dt_s = 2.5e-10;
  c.t_end_s = 1e-8;
  for (int i = 0; i <= 40; ++i) c.vc_v.push_back(0.5);
  CHECK(vc_rmse(a, c) == doctest::Approx(0.0));

  SimTrace empty;
  CHECK_THROWS_AS(vc_rmse(a, empty), std::invalid_argument);
  CHECK_THROWS_AS(vc_rmse(a, b, 0.0), std::invalid_argument);
}

TEST_CASE("compare_views reports zero error against its own reference") {
  PllConfig cfg;  // default horizon, long enough for both live views to lock
  const PolyMetamodel meta = fitted_metamodel();
  LinearVcoModel flat = easy_linear();
  flat.kvco_hz_per_v = 0.0;  // tuning-dead view: can never lock

  const auto reports =
      compare_views(cfg, {VcoView(meta), VcoView(easy_linear()), VcoView(flat)});
  REQUIRE(reports.size() == 3);
  CHECK(reports[0].view == "metamodel");
  CHECK(reports[1].view == "linear");
  CHECK(reports[0].vc_rmse_v == 0.0);
  REQUIRE(reports[0].lock_time_err_pct.has_value());
  CHECK(*reports[0].lock_time_err_pct == 0.0);
  CHECK(reports[1].vc_rmse_v > 0.0);
  CHECK(reports[1].lock_time_err_pct.has_value());
  // the dead view never locks, so percentage errors are undefined
  CHECK_FALSE(reports[2].metrics.lock_time_s.has_value());
  CHECK_FALSE(reports[2].lock_time_err_pct.has_value());
  CHECK(reports[2].vc_rmse_v > 0.0);
  for (const auto& r : reports) CHECK(r.wall_clock_s >= 0.0);

  CHECK_THROWS_AS(compare_views(cfg, {VcoView(meta)}), std::invalid_argument);
}

TEST_CASE("bad loop configurations are rejected before running") {
  auto reject = [](auto mutate, const char* what) {
    PllConfig cfg;
    cfg.vco_view = easy_linear();
    mutate(cfg);
    CAPTURE(what);
    CHECK_THROWS_AS(run(cfg), std::invalid_argument);
  };
  reject([](PllConfig& c) { c.f_in_hz = 0.0; }, "f_in");
  reject([](PllConfig& c) { c.n_div = 0; }, "n_div");
  reject([](PllConfig& c) { c.cp_current_a = -1e-6; }, "cp_current");
  reject([](PllConfig& c) { c.lf.c1_f = 0.0; }, "c1");
  reject([](PllConfig& c) { c.analog_dt_s = 0.0; }, "dt");
  reject([](PllConfig& c) { c.t_end_s = -1.0; }, "t_end");
  reject([](PllConfig& c) { c.vc0_v = 2.0; }, "vc0");
  reject([](PllConfig& c) { c.lock_window = 0; }, "lock_window");
  reject([](PllConfig& c) { c.wp_m = 0.0; }, "widths");
  // an oracle view whose supply is lower than the loop's cannot cover vc
  reject(
      [](PllConfig& c) {
        OracleConfig o;
        o.vdd_v = 1.2;
        c.vco_view = o;
      },
      "view vdd");
}

TEST_CASE("trace and edge csv exports are well formed and stable") {
  PllConfig cfg;
  cfg.vco_view = easy_linear();
  cfg.t_end_s = 50e-9;
  const SimResult res = run(cfg);

  const std::string tpath = tmp_file("trace");
  save_trace_csv(res.trace, cfg.power_window_cycles, tpath);
  std::ifstream ts(tpath);
  std::string line;
  REQUIRE(std::getline(ts, line));
  CHECK(line == "t_s,vc_v,freq_hz,power_w");
  std::size_t rows = 0;
  bool first = true;
  while (std::getline(ts, line)) {
    if (first) {
      CHECK(line.substr(0, 7) == "0e+000,");  // t = 0 in the csv float format
      first = false;
    }
    ++rows;
  }
  CHECK(rows == res.trace.vc_v.size());
  ts.close();

  const std::string epath = tmp_file("edges");
  save_edges_csv(res.trace, epath);
  std::ifstream es(epath);
  REQUIRE(std::getline(es, line));
  CHECK(line == "t_s,signal,value");
  rows = 0;
  while (std::getline(es, line)) ++rows;
  CHECK(rows == res.trace.edges.size());
  es.close();

  // byte-stable across repeated export
  const std::string tpath2 = tmp_file("trace2");
  save_trace_csv(res.trace, cfg.power_window_cycles, tpath2);
  std::ifstream f1(tpath, std::ios::binary), f2(tpath2, std::ios::binary);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());

  CHECK_THROWS_AS(save_trace_csv(SimTrace{}, 50, tmp_file("empty")),
                  std::invalid_argument);
  std::filesystem::remove(tpath);
  std::filesystem::remove(tpath2);
  std::filesystem::remove(epath);
}

TEST_CASE("view_name and signal_name match their wire formats") {
  CHECK(view_name(VcoView(easy_linear())) == "linear");
  CHECK(view_name(VcoView(OracleConfig{})) == "oracle");
  CHECK(view_name(VcoView(PolyMetamodel{})) == "metamodel");
  CHECK(signal_name(Signal::up) == "up");
  CHECK(signal_name(Signal::dn) == "dn");
  CHECK(signal_name(Signal::out) == "out");
  CHECK(signal_name(Signal::fb) == "fb");
}
