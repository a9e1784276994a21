// Fixed-step behavioral simulation of the charge-pump PLL: PFD, charge pump,
// passive 2nd-order loop filter, swappable VCO view, divide-by-N feedback.
// Digital edges live on the analog_dt tick grid (10 ps by default).
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "metapll/metamodel.hpp"
#include "metapll/oracle.hpp"

namespace metapll {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using VcoView = std::variant<LinearVcoModel, PolyMetamodel, OracleConfig>;

std::string view_name(const VcoView& view);  // linear | metamodel | oracle

struct LoopFilter {
  // r1 in series with c1, the pair shunted by c2. Defaults target a loop
  // bandwidth near f_in/20 with ~60 degrees of phase margin at the default
  // charge pump, divider and VCO gain.
  double r1_ohm = 19.6e3;
  double c1_f = 1.18e-12;
  double c2_f = 5.9e-14;
};

struct PllConfig {
  double f_in_hz = 550e6;
  int n_div = 4;
  double cp_current_a = 50e-6;
  double cp_transition_s = 2e-12;
  double pfd_reset_delay_s = 10e-12;
  LoopFilter lf;
  double vdd_v = 1.8;
  double analog_dt_s = 10e-12;
  double t_end_s = 500e-9;
  VcoView vco_view = OracleConfig{};
  double wp_m = 20e-6;
  double wn_m = 10e-6;
  int power_window_cycles = 50;  // smoothing window for the power trace
  double lock_tol = 1e-3;        // relative frequency tolerance
  int lock_window = 20;          // reference cycles that must stay in tol
  double vc0_v = 0.0;
};

// --- component-level steps, exposed for direct testing ---

struct PfdState {
  bool up = false;
  bool dn = false;
  long long clear_tick = -1;  // pending simultaneous-high reset, -1 = none
};

// Applies a pending reset; call once per tick before feeding edges.
void apply_pfd_clear(PfdState& st, long long now);

// Rising edges set up (reference) / dn (feedback); when both end up high a
// clear is scheduled reset_ticks later.
void pfd_step(PfdState& st, bool clkin_edge, bool clkfb_edge, long long now,
              long long reset_ticks);

struct CpLfState {
  double i_a = 0.0;   // charge-pump output current after slewing
  double vc_v = 0.0;  // control voltage (c2 node)
  double v1_v = 0.0;  // voltage across c1
};

// One backward-Euler step of the charge pump + loop filter; returns the new
// control voltage, clamped to [0, vdd].
double cp_lf_step(CpLfState& st, bool up, bool dn, const PllConfig& cfg);

// Evaluates the active VCO view. Throws SimError naming the view and inputs
// when the model yields a non-positive or non-finite frequency.
VcoResponse vco_step(const VcoView& view, double wp_m, double wn_m,
                     double vc_v);

// --- traces and metrics ---

enum class Signal : std::uint8_t { up, dn, out, fb };
std::string signal_name(Signal s);

struct EdgeEvent {
  double t_s = 0.0;
  Signal signal = Signal::up;
  int value = 0;
};

struct CycleSample {
  double t_s = 0.0;
  double freq_hz = 0.0;
  double power_w = 0.0;
};

struct SimTrace {
  double dt_s = 0.0;
  double t_end_s = 0.0;
  std::vector<double> vc_v;                // vc_v[k] is vc at t = k*dt
  std::vector<CycleSample> cycles;         // per VCO cycle, first row at t=0
  std::vector<CycleSample> ref_samples;    // model output at reference edges
  std::vector<EdgeEvent> edges;            // up/dn/out/fb transitions
};

struct SimMetrics {
  std::optional<double> lock_time_s;  // empty = never locked
  std::optional<double> f_locked_hz;  // post-lock means, set iff locked
  std::optional<double> p_locked_w;
};

struct SimResult {
  SimTrace trace;
  SimMetrics metrics;
};

// Runs the loop to t_end. Lock is the start of the earliest window of
// lock_window consecutive reference cycles whose model output frequency is
// within lock_tol of n_div*f_in and stays there until t_end.
SimResult run(const PllConfig& cfg);

// RMSE between two control-voltage traces after zero-order-hold resampling
// onto a common uniform grid. Throws std::invalid_argument when the traces
// do not overlap.
double vc_rmse(const SimTrace& a, const SimTrace& b, double grid_dt_s = 1e-10);

struct ViewReport {
  std::string view;
  SimMetrics metrics;
  double vc_rmse_v = 0.0;  // vs the first (reference) view
  std::optional<double> lock_time_err_pct;
  std::optional<double> f_locked_err_pct;
  std::optional<double> p_locked_err_pct;
  double wall_clock_s = 0.0;
};

// Runs every view on an otherwise identical config; the first view is the
// reference for RMSE and percentage errors.
std::vector<ViewReport> compare_views(const PllConfig& cfg,
                                      const std::vector<VcoView>& views);

// Uniform-grid CSV `t_s,vc_v,freq_hz,power_w`; frequency is the per-cycle
// value held between cycles, power additionally smoothed over
// power_window_cycles trailing cycles.
void save_trace_csv(const SimTrace& trace, int power_window_cycles,
                    const std::string& path);

// Digital transition log CSV `t_s,signal,value`.
void save_edges_csv(const SimTrace& trace, const std::string& path);

}  // namespace metapll
