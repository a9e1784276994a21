#include "metapll/costmodel.hpp"

#include <stdexcept>

namespace metapll {

namespace {

void validate(const CostParams& p) {
  if (p.n_i < 0 || p.n_s < 0)
    throw std::invalid_argument("iteration and sample counts must be >= 0");
  if (p.t_ext_s < 0 || p.t_sim_s < 0 || p.t_gen_s < 0 || p.t_ini_s < 0)
    throw std::invalid_argument("per-step times must be >= 0");
}

}  // namespace

double t_macromodel(const CostParams& p) {
  validate(p);
  return double(p.n_i) * p.t_ext_s + double(p.n_i) * p.t_sim_s;
}

double t_metamodel_flow(const CostParams& p, bool full) {
  validate(p);
  if (full)
    return double(p.n_s) * p.t_ext_s + p.t_gen_s +
           double(p.n_i) * (p.t_ini_s + p.t_sim_s);
  return double(p.n_s) * p.t_ext_s + double(p.n_i) * p.t_sim_s;
}

double t_difference(const CostParams& p) {
  return t_macromodel(p) - t_metamodel_flow(p, false);
}

double reduction_pct(double baseline_s, double improved_s) {
  if (!(baseline_s > 0))
    throw std::invalid_argument("baseline must be positive");
  return (baseline_s - improved_s) / baseline_s;
}

}  // namespace metapll
