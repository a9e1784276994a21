// Synthetic "virtual layout" ground truth for the VCO. Stands in for an
// extracted parasitic netlist: every evaluation assembles and solves a
// width-dependent RC mesh, which is the deliberate cost that makes the
// metamodel worthwhile.
#pragma once

#include <cstdint>

#include "metapll/metamodel.hpp"

namespace metapll {

struct OracleConfig {
  // transfer curve: freq = center(wp,wn) + swing(wp,wn)*tanh((vc-mid)/knee)
  //                        - gamma * ceff(mesh)
  double f0_base_hz = 2.1471e9;  // calibrated so baseline f(vc=0) ~ 2.170e9
  double vc_mid_v = 0.45;        // sigmoid center
  double vc_knee_v = 0.75;       // saturation knee
  // pins the baseline (20u, 10u) transfer swing to 130 MHz rail to rail
  double swing0_hz = 1.656096041729617e8;
  double swing_width_hz = -2.6e6;           // swing derating per um of wp+wn

  // center-frequency width dependence, per um of drawn width
  double fw_p_hz = 34e6;
  double fw_n_hz = -55e6;
  double fw_pp_hz = -0.35e6;  // wp^2
  double fw_pn_hz = 0.40e6;   // wp*wn cross term

  // short-wavelength layout residual a low-degree polynomial cannot absorb
  double ripple_f_hz = 10.3e6;
  double ripple_p_w = 3.0e-6;

  // parasitic mesh
  int mesh_nodes = 64;
  std::uint64_t mesh_seed = 7;
  double mesh_r_total_ohm = 200.0;
  double mesh_c_total_f = 120e-15;
  double mesh_leak_s = 5e-4;
  double g_scale = 1.0;               // multiplies every conductance
  double gamma_hz_per_f = 3.25e14;    // parasitic load pulls frequency down
  int work_factor = 1;                // mesh solves per evaluation

  double vdd_v = 1.8;
};

struct MeshLoad {
  double ceff_f = 0.0;
  double reff_ohm = 0.0;
};

// Assembles the width-parameterized SPD conductance mesh, solves G v = e0 and
// reduces it to an effective (C, R) load seen from node 0.
//
// The mesh is an N-node RC ladder with shunt leakage, capacitors to ground
// and floor(N/4) random chords. All jitter factors are uniform in
// [0.85, 1.15] drawn from mt19937_64(mesh_seed) in a fixed order that is
// part of this function's contract:
//   1. N-1 ladder factors, 2. N shunt factors, 3. N capacitor factors,
//   4. floor(N/4) chords, each drawing node a, node b (uniform ints in
//      [0, N-1]) then a factor; the chord is dropped when |a-b| < 2 but its
//      draws still happen.
// Element values: ladder g = (N/r_total)*k*wg*g_scale, shunt g =
// (leak/N)*k*wg*g_scale, chord g = (0.1/r_total)*k*g_scale, cap c =
// (c_total/N)*k*wc, with width factors wg = 1 + 0.020 up + 0.012 un and
// wc = 1 + 0.018 up + 0.010 un (up, un in um).
MeshLoad mesh_effective_load(const OracleConfig& cfg, double wp_m, double wn_m);

// Full response: deterministic, smooth, strictly increasing in vc, power
// strictly increasing in each width. Performs work_factor mesh solves.
// Throws std::invalid_argument for non-positive widths or vc outside
// [0, vdd].
VcoResponse oracle_eval(const OracleConfig& cfg, double wp_m, double wn_m,
                        double vc_v);

// Evaluates the oracle at every point of the plan and attaches responses.
void attach_oracle_responses(SamplePlan& plan, const OracleConfig& cfg);

// First-order VCO view: freq = f0 + kvco*vc, power constant.
struct LinearVcoModel {
  double wp_m = 0.0;
  double wn_m = 0.0;
  double f0_hz = 0.0;
  double kvco_hz_per_v = 0.0;
  double power_w = 0.0;
};

// Least-squares line through (x, y); returns {intercept, slope}.
// Throws std::invalid_argument on size mismatch, n < 2 or constant x.
std::pair<double, double> fit_line(const std::vector<double>& x,
                                   const std::vector<double>& y);

// Straight-line fit of the oracle transfer curve at fixed widths, sampled at
// npts uniform control voltages across vc_range; power is the sample mean.
LinearVcoModel fit_linear_model(const OracleConfig& cfg, double wp_m,
                                double wn_m, VarRange vc_range, int npts = 33);

}  // namespace metapll
