// Analytic runtime comparison of the two optimization flows: re-extract the
// layout every iteration vs. extract a sample set once and iterate on the
// fitted metamodel.
#pragma once

namespace metapll {

struct CostParams {
  long long n_i = 0;    // optimizer iterations
  long long n_s = 0;    // metamodel sample count
  double t_ext_s = 0.0; // one parasitic extraction
  double t_sim_s = 0.0; // one transient simulation
  double t_gen_s = 0.0; // one-time metamodel generation
  double t_ini_s = 0.0; // per-iteration initialization
};

// n_i * (t_ext + t_sim): extraction inside the loop.
double t_macromodel(const CostParams& p);

// full:    n_s*t_ext + t_gen + n_i*(t_ini + t_sim)
// reduced: n_s*t_ext + n_i*t_sim   (t_gen, t_ini dropped as negligible)
double t_metamodel_flow(const CostParams& p, bool full);

// t_macromodel - t_metamodel_flow(reduced); algebraically (n_i - n_s)*t_ext,
// computed as the literal difference of the two flows so the identity also
// holds bit-for-bit in floating point.
double t_difference(const CostParams& p);

// (baseline - improved) / baseline, as a fraction. baseline must be > 0.
double reduction_pct(double baseline_s, double improved_s);

}  // namespace metapll
