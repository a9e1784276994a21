#include "metapll/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace metapll {

namespace {

constexpr double kUm = 1e-6;

// mesh element width sensitivity (widths in um)
double width_g_factor(double up, double un) {
  return 1.0 + 0.020 * up + 0.012 * un;
}
double width_c_factor(double up, double un) {
  return 1.0 + 0.018 * up + 0.010 * un;
}

void validate_mesh_cfg(const OracleConfig& cfg) {
  if (cfg.mesh_nodes < 2)
    throw std::invalid_argument("mesh_nodes must be >= 2");
  if (!(cfg.mesh_r_total_ohm > 0) || !(cfg.mesh_c_total_f > 0) ||
      !(cfg.mesh_leak_s > 0) || !(cfg.g_scale > 0))
    throw std::invalid_argument("mesh element values must be positive");
  if (cfg.work_factor < 1)
    throw std::invalid_argument("work_factor must be >= 1");
}

}  // namespace

MeshLoad mesh_effective_load(const OracleConfig& cfg, double wp_m,
                             double wn_m) {
  validate_mesh_cfg(cfg);
  if (!(wp_m > 0) || !(wn_m > 0))
    throw std::invalid_argument("widths must be positive");

  const int n = cfg.mesh_nodes;
  const double up = wp_m / kUm;
  const double un = wn_m / kUm;
  const double wg = width_g_factor(up, un);
  const double wc = width_c_factor(up, un);

  std::mt19937_64 rng(cfg.mesh_seed);
  std::uniform_real_distribution<double> jitter(0.85, 1.15);
  std::uniform_int_distribution<int> node(0, n - 1);

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  auto stamp = [&](int a, int b, double cond) {
    g(a, a) += cond;
    g(b, b) += cond;
    g(a, b) -= cond;
    g(b, a) -= cond;
  };

  // draw order is contractual; see header
  const double g_ladder = double(n) / cfg.mesh_r_total_ohm * wg * cfg.g_scale;
  for (int i = 0; i + 1 < n; ++i) stamp(i, i + 1, g_ladder * jitter(rng));
  const double g_shunt = cfg.mesh_leak_s / double(n) * wg * cfg.g_scale;
  for (int i = 0; i < n; ++i) g(i, i) += g_shunt * jitter(rng);
  Eigen::VectorXd caps(n);
  const double c_node = cfg.mesh_c_total_f / double(n) * wc;
  for (int i = 0; i < n; ++i) caps[i] = c_node * jitter(rng);
  const double g_chord = 0.1 / cfg.mesh_r_total_ohm * cfg.g_scale;
  for (int k = 0; k < n / 4; ++k) {
    const int a = node(rng);
    const int b = node(rng);
    const double f = jitter(rng);
    if (std::abs(a - b) >= 2) stamp(a, b, g_chord * f);
  }

  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(n);
  e0[0] = 1.0;

  double reff_acc = 0.0;
  Eigen::VectorXd v;
  for (int r = 0; r < cfg.work_factor; ++r) {
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error(
          "mesh conductance matrix is not positive definite (internal bug)");
    v = llt.solve(e0);
    reff_acc += v[0];
  }

  MeshLoad load;
  load.reff_ohm = reff_acc / double(cfg.work_factor);
  load.ceff_f = caps.dot(v) / v[0];
  return load;
}

VcoResponse oracle_eval(const OracleConfig& cfg, double wp_m, double wn_m,
                        double vc_v) {
  if (!(wp_m > 0) || !(wn_m > 0))
    throw std::invalid_argument("widths must be positive, got wp=" +
                                std::to_string(wp_m) +
                                " wn=" + std::to_string(wn_m));
  if (vc_v < 0.0 || vc_v > cfg.vdd_v)
    throw std::invalid_argument("vc outside supply rails: " +
                                std::to_string(vc_v));

  const double up = wp_m / kUm;
  const double un = wn_m / kUm;
  const MeshLoad load = mesh_effective_load(cfg, wp_m, wn_m);

  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double center = cfg.f0_base_hz + cfg.fw_p_hz * up + cfg.fw_n_hz * un +
                        cfg.fw_pp_hz * up * up + cfg.fw_pn_hz * up * un +
                        cfg.ripple_f_hz * 0.5 *
                            (std::sin(two_pi * (up - 20.0) / 2.3) +
                             std::sin(two_pi * (un - 10.0) / 1.9));
  const double swing = cfg.swing0_hz + cfg.swing_width_hz * (up + un);
  const double s = std::tanh((vc_v - cfg.vc_mid_v) / cfg.vc_knee_v);

  VcoResponse out;
  out.freq_hz = center + swing * s - cfg.gamma_hz_per_f * load.ceff_f;

  // microwatt-scale surface, strictly increasing in each width
  const double p_uw = 50.0 + 14.0 * up + 10.0 * un + 0.32 * up * up +
                      0.40 * un * un - 36.0 * vc_v + 30.0 * vc_v * vc_v +
                      0.8 * vc_v * (up + un);
  out.power_w = p_uw * 1e-6 + cfg.ripple_p_w * 0.5 *
                                  (std::sin(two_pi * (up - 20.0) / 2.2) +
                                   std::sin(two_pi * (un - 10.0) / 1.8));
  return out;
}

void attach_oracle_responses(SamplePlan& plan, const OracleConfig& cfg) {
  plan.freq_hz.clear();
  plan.power_w.clear();
  plan.freq_hz.reserve(plan.points.size());
  plan.power_w.reserve(plan.points.size());
  for (const auto& p : plan.points) {
    const VcoResponse r = oracle_eval(cfg, p[0], p[1], p[2]);
    plan.freq_hz.push_back(r.freq_hz);
    plan.power_w.push_back(r.power_w);
  }
}

std::pair<double, double> fit_line(const std::vector<double>& x,
                                   const std::vector<double>& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("fit_line: need at least 2 points");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / double(n), my = sy / double(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: constant abscissa");
  const double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

LinearVcoModel fit_linear_model(const OracleConfig& cfg, double wp_m,
                                double wn_m, VarRange vc_range, int npts) {
  if (!(vc_range.lo < vc_range.hi))
    throw std::invalid_argument("vc_range must satisfy lo < hi");
  if (npts < 2) throw std::invalid_argument("need at least 2 sample points");

  std::vector<double> vc(npts), f(npts), p(npts);
  for (int i = 0; i < npts; ++i) {
    vc[i] = vc_range.lo +
            (vc_range.hi - vc_range.lo) * double(i) / double(npts - 1);
    const VcoResponse r = oracle_eval(cfg, wp_m, wn_m, vc[i]);
    f[i] = r.freq_hz;
    p[i] = r.power_w;
  }
  auto [f0, kvco] = fit_line(vc, f);

  LinearVcoModel m;
  m.wp_m = wp_m;
  m.wn_m = wn_m;
  m.f0_hz = f0;
  m.kvco_hz_per_v = kvco;
  double psum = 0;
  for (double w : p) psum += w;
  m.power_w = psum / double(npts);
  return m;
}

}  // namespace metapll
