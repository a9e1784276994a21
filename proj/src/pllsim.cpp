#include "metapll/pllsim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace metapll {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate(const PllConfig& cfg) {
  if (!(cfg.f_in_hz > 0)) throw std::invalid_argument("f_in must be positive");
  if (cfg.n_div < 1) throw std::invalid_argument("n_div must be >= 1");
  if (!(cfg.cp_current_a > 0))
    throw std::invalid_argument("cp_current must be positive");
  if (!(cfg.cp_transition_s > 0))
    throw std::invalid_argument("cp_transition must be positive");
  if (cfg.pfd_reset_delay_s < 0)
    throw std::invalid_argument("pfd_reset_delay must be non-negative");
  if (cfg.lf.r1_ohm < 0) throw std::invalid_argument("lf.r1 must be >= 0");
  if (!(cfg.lf.c1_f > 0) || !(cfg.lf.c2_f > 0))
    throw std::invalid_argument("lf capacitors must be positive");
  if (!(cfg.vdd_v > 0)) throw std::invalid_argument("vdd must be positive");
  if (!(cfg.analog_dt_s > 0))
    throw std::invalid_argument("analog_dt must be positive");
  if (!(cfg.t_end_s > 0)) throw std::invalid_argument("t_end must be positive");
  if (!(cfg.wp_m > 0) || !(cfg.wn_m > 0))
    throw std::invalid_argument("widths must be positive");
  if (cfg.power_window_cycles < 1)
    throw std::invalid_argument("power_window_cycles must be >= 1");
  if (!(cfg.lock_tol > 0)) throw std::invalid_argument("lock_tol must be positive");
  if (cfg.lock_window < 1)
    throw std::invalid_argument("lock_window must be >= 1");
  if (cfg.vc0_v < 0 || cfg.vc0_v > cfg.vdd_v)
    throw std::invalid_argument("vc0 outside [0, vdd]");
  if (const auto* oc = std::get_if<OracleConfig>(&cfg.vco_view);
      oc && oc->vdd_v < cfg.vdd_v)
    throw std::invalid_argument(
        "oracle view vdd is below the loop vdd; vc range would be rejected");
}

}  // namespace

std::string view_name(const VcoView& view) {
  return std::visit(
      overloaded{[](const LinearVcoModel&) { return std::string("linear"); },
                 [](const PolyMetamodel&) { return std::string("metamodel"); },
                 [](const OracleConfig&) { return std::string("oracle"); }},
      view);
}

std::string signal_name(Signal s) {
  switch (s) {
    case Signal::up: return "up";
    case Signal::dn: return "dn";
    case Signal::out: return "out";
    case Signal::fb: return "fb";
  }
  return "?";
}

void apply_pfd_clear(PfdState& st, long long now) {
  if (st.clear_tick >= 0 && now >= st.clear_tick) {
    st.up = false;
    st.dn = false;
    st.clear_tick = -1;
  }
}

void pfd_step(PfdState& st, bool clkin_edge, bool clkfb_edge, long long now,
              long long reset_ticks) {
  if (clkin_edge) st.up = true;
  if (clkfb_edge) st.dn = true;
  if (st.up && st.dn && st.clear_tick < 0)
    st.clear_tick = now + std::max<long long>(1, reset_ticks);
}

double cp_lf_step(CpLfState& st, bool up, bool dn, const PllConfig& cfg) {
  const double dt = cfg.analog_dt_s;
  double target = 0.0;
  if (up && !dn && st.vc_v < cfg.vdd_v)
    target = cfg.cp_current_a;
  else if (dn && !up && st.vc_v > 0.0)
    target = -cfg.cp_current_a;
  const double max_step = cfg.cp_current_a * dt / cfg.cp_transition_s;
  st.i_a += std::clamp(target - st.i_a, -max_step, max_step);

  double vc_new;
  if (cfg.lf.r1_ohm <= 0.0) {
    vc_new = st.vc_v + dt * st.i_a / (cfg.lf.c1_f + cfg.lf.c2_f);
    st.v1_v = vc_new;
  } else {
    const double a = dt / (cfg.lf.r1_ohm * cfg.lf.c1_f);
    const double geq = 1.0 / (cfg.lf.r1_ohm * (1.0 + a));
    vc_new = (cfg.lf.c2_f * st.vc_v / dt + st.i_a + geq * st.v1_v) /
             (cfg.lf.c2_f / dt + geq);
    st.v1_v = (st.v1_v + a * vc_new) / (1.0 + a);
  }
  st.vc_v = std::clamp(vc_new, 0.0, cfg.vdd_v);
  return st.vc_v;
}

VcoResponse vco_step(const VcoView& view, double wp_m, double wn_m,
                     double vc_v) {
  VcoResponse r = std::visit(
      overloaded{[&](const LinearVcoModel& m) {
                   VcoResponse o;
                   o.freq_hz = m.f0_hz + m.kvco_hz_per_v * vc_v;
                   o.power_w = m.power_w;
                   return o;
                 },
                 [&](const PolyMetamodel& m) {
                   return evaluate(m, wp_m, wn_m, vc_v);
                 },
                 [&](const OracleConfig& c) {
                   return oracle_eval(c, wp_m, wn_m, vc_v);
                 }},
      view);
  if (!std::isfinite(r.freq_hz) || r.freq_hz <= 0.0) {
    std::ostringstream os;
    os << "VCO view '" << view_name(view) << "' produced frequency "
       << r.freq_hz << " at wp=" << wp_m << " wn=" << wn_m << " vc=" << vc_v;
    throw SimError(os.str());
  }
  return r;
}

SimResult run(const PllConfig& cfg) {
  validate(cfg);
  const double dt = cfg.analog_dt_s;
  const long long ticks = std::llround(cfg.t_end_s / dt);
  if (ticks < 1) throw std::invalid_argument("t_end shorter than one step");
  const long long reset_ticks =
      std::max<long long>(1, std::llround(cfg.pfd_reset_delay_s / dt));

  SimResult res;
  SimTrace& tr = res.trace;
  tr.dt_s = dt;
  tr.t_end_s = double(ticks) * dt;
  tr.vc_v.reserve(std::size_t(ticks) + 1);
  tr.vc_v.push_back(cfg.vc0_v);

  PfdState pfd;
  CpLfState lf;
  lf.vc_v = cfg.vc0_v;
  lf.v1_v = cfg.vc0_v;

  bool out = false;
  bool fb = false;
  long long vco_risings = 0;

  VcoResponse vr = vco_step(cfg.vco_view, cfg.wp_m, cfg.wn_m, cfg.vc0_v);
  tr.cycles.push_back({0.0, vr.freq_hz, vr.power_w});
  // the toggle schedule accumulates exact half periods and rounds each edge
  // to the grid, so quantization error never builds up into a frequency bias
  double exact_next_s = 0.5 / vr.freq_hz;
  long long vco_next = std::max<long long>(1, std::llround(exact_next_s / dt));

  long long ref_k = 1;
  auto ref_tick = [&](long long k) {
    return std::llround(double(k) / (cfg.f_in_hz * dt));
  };
  long long next_ref = std::max<long long>(1, ref_tick(ref_k));

  for (long long t = 1; t <= ticks; ++t) {
    const double now_s = double(t) * dt;

    const bool was_up = pfd.up, was_dn = pfd.dn;
    apply_pfd_clear(pfd, t);

    bool ref_edge = false;
    if (t == next_ref) {
      ref_edge = true;
      ++ref_k;
      next_ref = std::max(t + 1, ref_tick(ref_k));
    }

    bool fb_edge = false;
    if (t == vco_next) {
      out = !out;
      tr.edges.push_back({now_s, Signal::out, out ? 1 : 0});
      if (out) {
        ++vco_risings;
        if (fb) {  // divider pulse lasts one VCO period
          fb = false;
          tr.edges.push_back({now_s, Signal::fb, 0});
        }
        if (vco_risings % cfg.n_div == 0) {
          fb = true;
          fb_edge = true;
          tr.edges.push_back({now_s, Signal::fb, 1});
        }
      }
      vr = vco_step(cfg.vco_view, cfg.wp_m, cfg.wn_m, lf.vc_v);
      if (out) tr.cycles.push_back({now_s, vr.freq_hz, vr.power_w});
      exact_next_s += 0.5 / vr.freq_hz;
      vco_next = std::max(t + 1, std::llround(exact_next_s / dt));
    }

    pfd_step(pfd, ref_edge, fb_edge, t, reset_ticks);
    if (pfd.up != was_up) tr.edges.push_back({now_s, Signal::up, pfd.up});
    if (pfd.dn != was_dn) tr.edges.push_back({now_s, Signal::dn, pfd.dn});

    tr.vc_v.push_back(cp_lf_step(lf, pfd.up, pfd.dn, cfg));

    if (ref_edge) tr.ref_samples.push_back({now_s, vr.freq_hz, vr.power_w});
  }

  // lock: longest in-tolerance suffix of reference samples, at least
  // lock_window long
  const double target = double(cfg.n_div) * cfg.f_in_hz;
  const double tol = cfg.lock_tol * target;
  std::size_t start = tr.ref_samples.size();
  while (start > 0 &&
         std::abs(tr.ref_samples[start - 1].freq_hz - target) <= tol)
    --start;
  const std::size_t run_len = tr.ref_samples.size() - start;
  if (run_len >= std::size_t(cfg.lock_window)) {
    double fsum = 0.0, psum = 0.0;
    for (std::size_t i = start; i < tr.ref_samples.size(); ++i) {
      fsum += tr.ref_samples[i].freq_hz;
      psum += tr.ref_samples[i].power_w;
    }
    res.metrics.lock_time_s = tr.ref_samples[start].t_s;
    res.metrics.f_locked_hz = fsum / double(run_len);
    res.metrics.p_locked_w = psum / double(run_len);
  }
  return res;
}

double vc_rmse(const SimTrace& a, const SimTrace& b, double grid_dt_s) {
  if (a.vc_v.empty() || b.vc_v.empty())
    throw std::invalid_argument("vc_rmse: empty trace");
  if (!(grid_dt_s > 0)) throw std::invalid_argument("grid step must be positive");
  const double t_max = std::min(a.t_end_s, b.t_end_s);
  if (!(t_max > 0)) throw std::invalid_argument("vc_rmse: traces do not overlap");

  auto hold = [](const SimTrace& tr, double t) {
    const auto idx = std::size_t(
        std::min<double>(std::floor(t / tr.dt_s), double(tr.vc_v.size() - 1)));
    return tr.vc_v[idx];
  };
  const long long n = std::llround(t_max / grid_dt_s);
  double sse = 0.0;
  for (long long k = 0; k <= n; ++k) {
    const double t = double(k) * grid_dt_s;
    const double d = hold(a, t) - hold(b, t);
    sse += d * d;
  }
  return std::sqrt(sse / double(n + 1));
}

std::vector<ViewReport> compare_views(const PllConfig& cfg,
                                      const std::vector<VcoView>& views) {
  if (views.size() < 2)
    throw std::invalid_argument("compare_views needs at least 2 views");

  std::vector<ViewReport> reports;
  SimResult ref;
  for (std::size_t i = 0; i < views.size(); ++i) {
    PllConfig c = cfg;
    c.vco_view = views[i];
    const auto t0 = std::chrono::steady_clock::now();
    SimResult res = run(c);
    const auto t1 = std::chrono::steady_clock::now();

    ViewReport rep;
    rep.view = view_name(views[i]);
    rep.metrics = res.metrics;
    rep.wall_clock_s = std::chrono::duration<double>(t1 - t0).count();
    if (i == 0) {
      ref = std::move(res);
      rep.vc_rmse_v = 0.0;
      rep.lock_time_err_pct = 0.0;
      rep.f_locked_err_pct = 0.0;
      rep.p_locked_err_pct = 0.0;
    } else {
      rep.vc_rmse_v = vc_rmse(res.trace, ref.trace);
      auto pct = [](const std::optional<double>& x,
                    const std::optional<double>& r) -> std::optional<double> {
        if (!x || !r || *r == 0.0) return std::nullopt;
        return std::abs(*x - *r) / std::abs(*r) * 100.0;
      };
      rep.lock_time_err_pct =
          pct(res.metrics.lock_time_s, ref.metrics.lock_time_s);
      rep.f_locked_err_pct =
          pct(res.metrics.f_locked_hz, ref.metrics.f_locked_hz);
      rep.p_locked_err_pct =
          pct(res.metrics.p_locked_w, ref.metrics.p_locked_w);
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

void save_trace_csv(const SimTrace& trace, int power_window_cycles,
                    const std::string& path) {
  if (power_window_cycles < 1)
    throw std::invalid_argument("power_window_cycles must be >= 1");
  if (trace.vc_v.empty() || trace.cycles.empty())
    throw std::invalid_argument("cannot export an empty trace");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);

  // trailing-window moving average of the per-cycle power
  std::vector<double> pavg(trace.cycles.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < trace.cycles.size(); ++i) {
    acc += trace.cycles[i].power_w;
    if (i >= std::size_t(power_window_cycles))
      acc -= trace.cycles[i - power_window_cycles].power_w;
    pavg[i] = acc / double(std::min<std::size_t>(i + 1, power_window_cycles));
  }

  os << "t_s,vc_v,freq_hz,power_w\n";
  std::size_t ci = 0;
  for (std::size_t k = 0; k < trace.vc_v.size(); ++k) {
    const double t = double(k) * trace.dt_s;
    while (ci + 1 < trace.cycles.size() && trace.cycles[ci + 1].t_s <= t) ++ci;
    os << format_sci(t) << ',' << format_sci(trace.vc_v[k]) << ','
       << format_sci(trace.cycles[ci].freq_hz) << ',' << format_sci(pavg[ci])
       << '\n';
  }
}

void save_edges_csv(const SimTrace& trace, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << "t_s,signal,value\n";
  for (const auto& e : trace.edges)
    os << format_sci(e.t_s) << ',' << signal_name(e.signal) << ',' << e.value
       << '\n';
}

}  // namespace metapll
