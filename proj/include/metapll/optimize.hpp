// Differential evolution (DE/rand/1/bin) with feasibility-first selection,
// plus the constrained PLL power-minimization problem built on top of it.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "metapll/metamodel.hpp"
#include "metapll/pllsim.hpp"

namespace metapll {

struct DeConfig {
  double f = 0.8;   // difference scale factor
  double cr = 0.9;  // crossover rate
  int k = 20;       // population size
  int max_generations = 100;
  std::uint64_t seed = 1;
  std::string strategy = "DE/rand/1/bin";
  int stall_window = 20;  // stop after this many generations without
                          // improvement; 0 runs to max_generations
};

// violation == 0 means feasible; infeasible candidates compete on violation
struct DeEval {
  double objective = 0.0;
  double violation = 0.0;
};

struct DeHistoryRow {
  int generation = 0;
  double best_objective = 0.0;
  std::vector<double> best_x;
  bool feasible = false;
};

struct DeResult {
  std::vector<double> best_x;
  DeEval best;
  bool feasible = false;
  int generations_run = 0;
  std::vector<DeHistoryRow> history;  // one row per generation, row 0 = init
};

// v = x_r1 + f*(x_r2 - x_r3) with r1, r2, r3 distinct and != i, clipped to
// bounds. Draw order: r1, r2, r3 by rejection from uniform ints over the
// population.
std::vector<double> de_mutate(const std::vector<std::vector<double>>& pop,
                              int i, double f,
                              const std::vector<VarRange>& bounds,
                              std::mt19937_64& rng);

// Binomial crossover; the forced index (drawn first) always takes the mutant
// component, so the trial never equals the target when v differs everywhere.
std::vector<double> de_crossover(const std::vector<double>& x,
                                 const std::vector<double>& v, double cr,
                                 std::mt19937_64& rng);

// Feasibility-first greedy rule: a feasible trial replaces a feasible
// incumbent on objective <=; a feasible trial always replaces an infeasible
// incumbent; two infeasibles compete on violation; an infeasible trial never
// replaces a feasible incumbent.
bool de_select_trial(const DeEval& incumbent, const DeEval& trial);

using DeObjective = std::function<DeEval(const std::vector<double>&)>;

// Synchronous DE over a box. LHS population init; per-candidate RNG streams
// derived from (seed, generation, index) so evaluation order cannot change
// results. Deterministic for a fixed config.
DeResult de_minimize(const std::vector<VarRange>& bounds, const DeObjective& fn,
                     const DeConfig& cfg);

// --- constrained PLL sizing problem ---

inline PllConfig default_opt_scenario() {
  PllConfig cfg;
  cfg.t_end_s = 800e-9;  // room to observe slow locks near the limit
  return cfg;
}

struct OptProblem {
  std::array<VarRange, 2> bounds{{{5e-6, 25e-6}, {5e-6, 25e-6}}};
  double lock_time_limit_s = 600e-9;
  double f_min_req_hz = 2180e6;  // tuning range must reach down to this
  double f_max_req_hz = 2300e6;  // and up to this
  PllConfig scenario = default_opt_scenario();  // vco_view set by the caller
};

struct Candidate {
  double wp_m = 0.0;
  double wn_m = 0.0;
  double power_w = 0.0;  // objective: locked power (trace power if unlocked)
  std::optional<double> lock_time_s;
  double f_tuning_min_hz = 0.0;  // view frequency at the vc rails
  double f_tuning_max_hz = 0.0;
  bool feasible = false;
  double violation = 0.0;
};

// Runs the scenario at the given widths and scores constraints: lock time
// against lock_time_limit, tuning-range endpoints against the requirements.
Candidate evaluate_design(const OptProblem& prob, double wp_m, double wn_m);

struct OptResult {
  Candidate best;
  bool feasible = false;  // false: nothing feasible ever found
  int generations_run = 0;
  std::vector<DeHistoryRow> history;
};

OptResult de_run(const OptProblem& prob, const DeConfig& cfg);

// Exhaustive nx-by-ny scan over the bounds; returns the best candidate under
// the same feasibility-first ordering DE uses.
Candidate grid_search(const OptProblem& prob, int nx, int ny);

// History CSV: `generation,best_power_w,best_wp_m,best_wn_m,feasible`.
void save_history_csv(const std::vector<DeHistoryRow>& rows,
                      const std::string& path);

}  // namespace metapll
