#include "metapll/configio.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace metapll {

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot open: " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json(const json& j, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << j.dump(2) << '\n';
}

// assigns every present key through the field table, rejects anything else
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ParseError(where_ + ": expected a JSON object");
  }

  template <typename T>
  void field(const char* key, T& dst) {
    known_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      dst = it->get<T>();
    } catch (const json::exception& e) {
      throw ParseError(where_ + ": key '" + key + "': " + e.what());
    }
  }

  const json* subobject(const char* key) {
    known_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!known_.count(it.key()))
        throw ParseError(where_ + ": unknown key '" + it.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> known_;
};

void read_pll(const json& j, const std::string& where, PllConfig& cfg) {
  Reader r(j, where);
  r.field("f_in_hz", cfg.f_in_hz);
  r.field("n_div", cfg.n_div);
  r.field("cp_current_a", cfg.cp_current_a);
  r.field("cp_transition_s", cfg.cp_transition_s);
  r.field("pfd_reset_delay_s", cfg.pfd_reset_delay_s);
  r.field("lf_r1_ohm", cfg.lf.r1_ohm);
  r.field("lf_c1_f", cfg.lf.c1_f);
  r.field("lf_c2_f", cfg.lf.c2_f);
  r.field("vdd_v", cfg.vdd_v);
  r.field("analog_dt_s", cfg.analog_dt_s);
  r.field("t_end_s", cfg.t_end_s);
  r.field("wp_m", cfg.wp_m);
  r.field("wn_m", cfg.wn_m);
  r.field("power_window_cycles", cfg.power_window_cycles);
  r.field("lock_tol", cfg.lock_tol);
  r.field("lock_window", cfg.lock_window);
  r.field("vc0_v", cfg.vc0_v);
  r.finish();
}

json pll_to_json(const PllConfig& cfg) {
  json j;
  j["f_in_hz"] = cfg.f_in_hz;
  j["n_div"] = cfg.n_div;
  j["cp_current_a"] = cfg.cp_current_a;
  j["cp_transition_s"] = cfg.cp_transition_s;
  j["pfd_reset_delay_s"] = cfg.pfd_reset_delay_s;
  j["lf_r1_ohm"] = cfg.lf.r1_ohm;
  j["lf_c1_f"] = cfg.lf.c1_f;
  j["lf_c2_f"] = cfg.lf.c2_f;
  j["vdd_v"] = cfg.vdd_v;
  j["analog_dt_s"] = cfg.analog_dt_s;
  j["t_end_s"] = cfg.t_end_s;
  j["wp_m"] = cfg.wp_m;
  j["wn_m"] = cfg.wn_m;
  j["power_window_cycles"] = cfg.power_window_cycles;
  j["lock_tol"] = cfg.lock_tol;
  j["lock_window"] = cfg.lock_window;
  j["vc0_v"] = cfg.vc0_v;
  return j;
}

void read_oracle(const json& j, const std::string& where, OracleConfig& cfg) {
  Reader r(j, where);
  r.field("f0_base_hz", cfg.f0_base_hz);
  r.field("vc_mid_v", cfg.vc_mid_v);
  r.field("vc_knee_v", cfg.vc_knee_v);
  r.field("swing0_hz", cfg.swing0_hz);
  r.field("swing_width_hz", cfg.swing_width_hz);
  r.field("fw_p_hz", cfg.fw_p_hz);
  r.field("fw_n_hz", cfg.fw_n_hz);
  r.field("fw_pp_hz", cfg.fw_pp_hz);
  r.field("fw_pn_hz", cfg.fw_pn_hz);
  r.field("ripple_f_hz", cfg.ripple_f_hz);
  r.field("ripple_p_w", cfg.ripple_p_w);
  r.field("mesh_nodes", cfg.mesh_nodes);
  r.field("mesh_seed", cfg.mesh_seed);
  r.field("mesh_r_total_ohm", cfg.mesh_r_total_ohm);
  r.field("mesh_c_total_f", cfg.mesh_c_total_f);
  r.field("mesh_leak_s", cfg.mesh_leak_s);
  r.field("g_scale", cfg.g_scale);
  r.field("gamma_hz_per_f", cfg.gamma_hz_per_f);
  r.field("work_factor", cfg.work_factor);
  r.field("vdd_v", cfg.vdd_v);
  r.finish();
}

json oracle_to_json(const OracleConfig& cfg) {
  json j;
  j["f0_base_hz"] = cfg.f0_base_hz;
  j["vc_mid_v"] = cfg.vc_mid_v;
  j["vc_knee_v"] = cfg.vc_knee_v;
  j["swing0_hz"] = cfg.swing0_hz;
  j["swing_width_hz"] = cfg.swing_width_hz;
  j["fw_p_hz"] = cfg.fw_p_hz;
  j["fw_n_hz"] = cfg.fw_n_hz;
  j["fw_pp_hz"] = cfg.fw_pp_hz;
  j["fw_pn_hz"] = cfg.fw_pn_hz;
  j["ripple_f_hz"] = cfg.ripple_f_hz;
  j["ripple_p_w"] = cfg.ripple_p_w;
  j["mesh_nodes"] = cfg.mesh_nodes;
  j["mesh_seed"] = cfg.mesh_seed;
  j["mesh_r_total_ohm"] = cfg.mesh_r_total_ohm;
  j["mesh_c_total_f"] = cfg.mesh_c_total_f;
  j["mesh_leak_s"] = cfg.mesh_leak_s;
  j["g_scale"] = cfg.g_scale;
  j["gamma_hz_per_f"] = cfg.gamma_hz_per_f;
  j["work_factor"] = cfg.work_factor;
  j["vdd_v"] = cfg.vdd_v;
  return j;
}

}  // namespace

PllConfig load_pll_config(const std::string& path) {
  PllConfig cfg;
  read_pll(load_json(path), path, cfg);
  return cfg;
}

void save_pll_config(const PllConfig& cfg, const std::string& path) {
  write_json(pll_to_json(cfg), path);
}

OracleConfig load_oracle_config(const std::string& path) {
  OracleConfig cfg;
  read_oracle(load_json(path), path, cfg);
  return cfg;
}

void save_oracle_config(const OracleConfig& cfg, const std::string& path) {
  write_json(oracle_to_json(cfg), path);
}

OptProblem load_opt_problem(const std::string& path) {
  const json j = load_json(path);
  OptProblem prob;
  Reader r(j, path);
  r.field("wp_lo_m", prob.bounds[0].lo);
  r.field("wp_hi_m", prob.bounds[0].hi);
  r.field("wn_lo_m", prob.bounds[1].lo);
  r.field("wn_hi_m", prob.bounds[1].hi);
  r.field("lock_time_limit_s", prob.lock_time_limit_s);
  r.field("f_min_req_hz", prob.f_min_req_hz);
  r.field("f_max_req_hz", prob.f_max_req_hz);
  if (const json* s = r.subobject("scenario"))
    read_pll(*s, path + ":scenario", prob.scenario);
  r.finish();
  return prob;
}

void save_opt_problem(const OptProblem& prob, const std::string& path) {
  json j;
  j["wp_lo_m"] = prob.bounds[0].lo;
  j["wp_hi_m"] = prob.bounds[0].hi;
  j["wn_lo_m"] = prob.bounds[1].lo;
  j["wn_hi_m"] = prob.bounds[1].hi;
  j["lock_time_limit_s"] = prob.lock_time_limit_s;
  j["f_min_req_hz"] = prob.f_min_req_hz;
  j["f_max_req_hz"] = prob.f_max_req_hz;
  j["scenario"] = pll_to_json(prob.scenario);
  write_json(j, path);
}

DeConfig load_de_config(const std::string& path) {
  const json j = load_json(path);
  DeConfig cfg;
  Reader r(j, path);
  r.field("f", cfg.f);
  r.field("cr", cfg.cr);
  r.field("k", cfg.k);
  r.field("max_generations", cfg.max_generations);
  r.field("seed", cfg.seed);
  r.field("strategy", cfg.strategy);
  r.field("stall_window", cfg.stall_window);
  r.finish();
  return cfg;
}

void save_de_config(const DeConfig& cfg, const std::string& path) {
  json j;
  j["f"] = cfg.f;
  j["cr"] = cfg.cr;
  j["k"] = cfg.k;
  j["max_generations"] = cfg.max_generations;
  j["seed"] = cfg.seed;
  j["strategy"] = cfg.strategy;
  j["stall_window"] = cfg.stall_window;
  write_json(j, path);
}

}  // namespace metapll
