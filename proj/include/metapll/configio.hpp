// JSON load/save for the run configs. Unknown keys are rejected so config
// typos fail loudly; missing keys keep their defaults.
#pragma once

#include <string>

#include "metapll/optimize.hpp"
#include "metapll/oracle.hpp"
#include "metapll/pllsim.hpp"

namespace metapll {

// PllConfig without the VCO view (the view is chosen on the command line).
PllConfig load_pll_config(const std::string& path);
void save_pll_config(const PllConfig& cfg, const std::string& path);

OracleConfig load_oracle_config(const std::string& path);
void save_oracle_config(const OracleConfig& cfg, const std::string& path);

// Bounds and constraint limits; the scenario inside the problem is loaded
// separately (or defaulted) and the view attached by the caller.
OptProblem load_opt_problem(const std::string& path);
void save_opt_problem(const OptProblem& prob, const std::string& path);

DeConfig load_de_config(const std::string& path);
void save_de_config(const DeConfig& cfg, const std::string& path);

}  // namespace metapll
