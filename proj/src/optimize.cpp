#include "metapll/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace metapll {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a,
                          std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(master) + a) + b);
}

void validate(const DeConfig& cfg, const std::vector<VarRange>& bounds) {
  if (!(cfg.f > 0.0) || cfg.f > 2.0)
    throw std::invalid_argument("DE scale factor must be in (0, 2]");
  if (cfg.cr < 0.0 || cfg.cr > 1.0)
    throw std::invalid_argument("DE crossover rate must be in [0, 1]");
  if (cfg.k < 4)
    throw std::invalid_argument("DE population must be >= 4 (mutation draws 3 distinct others)");
  if (cfg.max_generations < 1)
    throw std::invalid_argument("max_generations must be >= 1");
  if (cfg.stall_window < 0)
    throw std::invalid_argument("stall_window must be >= 0");
  if (bounds.empty()) throw std::invalid_argument("bounds must be non-empty");
  for (const auto& b : bounds)
    if (!(b.lo < b.hi))
      throw std::invalid_argument("bounds must satisfy lo < hi");
}

// feasibility-first total order used for the population best
bool better(const DeEval& a, const DeEval& b) {
  const bool af = a.violation == 0.0, bf = b.violation == 0.0;
  if (af != bf) return af;
  if (af) return a.objective < b.objective;
  return a.violation < b.violation;
}

}  // namespace

std::vector<double> de_mutate(const std::vector<std::vector<double>>& pop,
                              int i, double f,
                              const std::vector<VarRange>& bounds,
                              std::mt19937_64& rng) {
  const int k = int(pop.size());
  if (k < 4) throw std::invalid_argument("mutation needs population >= 4");
  std::uniform_int_distribution<int> pick(0, k - 1);
  int r1 = i, r2 = i, r3 = i;
  while (r1 == i) r1 = pick(rng);
  while (r2 == i || r2 == r1) r2 = pick(rng);
  while (r3 == i || r3 == r1 || r3 == r2) r3 = pick(rng);

  std::vector<double> v(pop[std::size_t(r1)].size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    v[j] = pop[std::size_t(r1)][j] +
           f * (pop[std::size_t(r2)][j] - pop[std::size_t(r3)][j]);
    v[j] = std::clamp(v[j], bounds[j].lo, bounds[j].hi);
  }
  return v;
}

std::vector<double> de_crossover(const std::vector<double>& x,
                                 const std::vector<double>& v, double cr,
                                 std::mt19937_64& rng) {
  if (x.size() != v.size() || x.empty())
    throw std::invalid_argument("crossover arguments must match and be non-empty");
  std::uniform_int_distribution<std::size_t> forced(0, x.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t jrand = forced(rng);
  std::vector<double> u(x.size());
  for (std::size_t j = 0; j < x.size(); ++j)
    u[j] = (unit(rng) <= cr || j == jrand) ? v[j] : x[j];
  return u;
}

bool de_select_trial(const DeEval& incumbent, const DeEval& trial) {
  const bool t_feas = trial.violation == 0.0;
  const bool i_feas = incumbent.violation == 0.0;
  if (t_feas && i_feas) return trial.objective <= incumbent.objective;
  if (t_feas) return true;
  if (i_feas) return false;
  return trial.violation < incumbent.violation;
}

DeResult de_minimize(const std::vector<VarRange>& bounds, const DeObjective& fn,
                     const DeConfig& cfg) {
  validate(cfg, bounds);

  std::mt19937_64 init_rng(stream_seed(cfg.seed, 0, 0));
  std::vector<std::vector<double>> pop = lhs_matrix(cfg.k, bounds, init_rng);
  std::vector<DeEval> evals(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) evals[i] = fn(pop[i]);

  DeResult out;
  std::size_t best_i = 0;
  for (std::size_t i = 1; i < evals.size(); ++i)
    if (better(evals[i], evals[best_i])) best_i = i;
  out.best = evals[best_i];
  out.best_x = pop[best_i];

  auto record = [&](int gen) {
    out.history.push_back(
        {gen, out.best.objective, out.best_x, out.best.violation == 0.0});
  };
  record(0);

  int last_improvement = 0;
  std::vector<std::vector<double>> trials(pop.size());
  std::vector<DeEval> trial_evals(pop.size());

  int g = 1;
  for (; g <= cfg.max_generations; ++g) {
    for (std::size_t i = 0; i < pop.size(); ++i) {
      std::mt19937_64 rng(stream_seed(cfg.seed, std::uint64_t(g), i + 1));
      const auto v = de_mutate(pop, int(i), cfg.f, bounds, rng);
      trials[i] = de_crossover(pop[i], v, cfg.cr, rng);
      trial_evals[i] = fn(trials[i]);
    }
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (de_select_trial(evals[i], trial_evals[i])) {
        pop[i] = trials[i];
        evals[i] = trial_evals[i];
        if (better(evals[i], out.best)) {
          out.best = evals[i];
          out.best_x = pop[i];
          last_improvement = g;
        }
      }
    }
    record(g);
    if (cfg.stall_window > 0 && g - last_improvement >= cfg.stall_window) {
      ++g;
      break;
    }
  }
  out.generations_run = g - 1;
  out.feasible = out.best.violation == 0.0;
  return out;
}

Candidate evaluate_design(const OptProblem& prob, double wp_m, double wn_m) {
  PllConfig cfg = prob.scenario;
  cfg.wp_m = wp_m;
  cfg.wn_m = wn_m;
  const SimResult res = run(cfg);

  const VcoResponse lo = vco_step(cfg.vco_view, wp_m, wn_m, 0.0);
  const VcoResponse hi = vco_step(cfg.vco_view, wp_m, wn_m, cfg.vdd_v);

  Candidate c;
  c.wp_m = wp_m;
  c.wn_m = wn_m;
  c.f_tuning_min_hz = std::min(lo.freq_hz, hi.freq_hz);
  c.f_tuning_max_hz = std::max(lo.freq_hz, hi.freq_hz);
  c.lock_time_s = res.metrics.lock_time_s;
  c.power_w = res.metrics.p_locked_w ? *res.metrics.p_locked_w
                                     : res.trace.cycles.back().power_w;

  double viol = 0.0;
  if (!c.lock_time_s)
    viol += 10.0;  // never locked dominates any finite overshoot
  else
    viol += std::max(0.0, (*c.lock_time_s - prob.lock_time_limit_s) /
                              prob.lock_time_limit_s);
  viol += std::max(0.0, (c.f_tuning_min_hz - prob.f_min_req_hz) /
                            prob.f_min_req_hz);
  viol += std::max(0.0, (prob.f_max_req_hz - c.f_tuning_max_hz) /
                            prob.f_max_req_hz);
  c.violation = viol;
  c.feasible = viol == 0.0;
  return c;
}

namespace {

void validate(const OptProblem& prob) {
  for (const auto& b : prob.bounds)
    if (!(b.lo < b.hi))
      throw std::invalid_argument("problem bounds must satisfy lo < hi");
  if (!(prob.f_min_req_hz < prob.f_max_req_hz))
    throw std::invalid_argument("f_min_req must be below f_max_req");
  if (!(prob.lock_time_limit_s > 0))
    throw std::invalid_argument("lock_time_limit must be positive");
}

}  // namespace

OptResult de_run(const OptProblem& prob, const DeConfig& cfg) {
  validate(prob);
  const std::vector<VarRange> bounds(prob.bounds.begin(), prob.bounds.end());
  const DeResult r = de_minimize(
      bounds,
      [&](const std::vector<double>& x) {
        const Candidate c = evaluate_design(prob, x[0], x[1]);
        return DeEval{c.power_w, c.violation};
      },
      cfg);

  OptResult out;
  out.best = evaluate_design(prob, r.best_x[0], r.best_x[1]);
  out.feasible = r.feasible;
  out.generations_run = r.generations_run;
  out.history = r.history;
  return out;
}

Candidate grid_search(const OptProblem& prob, int nx, int ny) {
  validate(prob);
  if (nx < 2 || ny < 2)
    throw std::invalid_argument("grid must be at least 2x2");
  Candidate best;
  bool first = true;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const double wp = prob.bounds[0].lo + (prob.bounds[0].hi - prob.bounds[0].lo) *
                                                double(i) / double(nx - 1);
      const double wn = prob.bounds[1].lo + (prob.bounds[1].hi - prob.bounds[1].lo) *
                                                double(j) / double(ny - 1);
      Candidate c = evaluate_design(prob, wp, wn);
      const DeEval ce{c.power_w, c.violation};
      const DeEval be{best.power_w, best.violation};
      if (first || de_select_trial(be, ce)) {
        best = c;
        first = false;
      }
    }
  }
  return best;
}

void save_history_csv(const std::vector<DeHistoryRow>& rows,
                      const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  os << "generation,best_power_w,best_wp_m,best_wn_m,feasible\n";
  for (const auto& r : rows) {
    if (r.best_x.size() != 2)
      throw std::invalid_argument("history rows must carry (wp, wn)");
    os << r.generation << ',' << format_sci(r.best_objective) << ','
       << format_sci(r.best_x[0]) << ',' << format_sci(r.best_x[1]) << ','
       << (r.feasible ? 1 : 0) << '\n';
  }
}

}  // namespace metapll
