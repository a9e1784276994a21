// Polynomial response-surface models for the VCO frequency/power pair.
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace metapll {

struct BasisTerm {
  int p1 = 0;  // wp exponent
  int p2 = 0;  // wn exponent
  int p3 = 0;  // vc exponent
  friend bool operator==(const BasisTerm&, const BasisTerm&) = default;
};

struct VarRange {
  double lo = 0.0;
  double hi = 0.0;
};

// freq(x) = sum_i beta_f[i] * wp^p1 * wn^p2 * vc^p3, same basis for power.
// Coefficients are in raw SI units (meters, volts -> Hz, W).
struct PolyMetamodel {
  std::vector<BasisTerm> terms;
  std::vector<double> beta_f;
  std::vector<double> beta_p;
  VarRange wp_range, wn_range, vc_range;  // box the fit was conditioned on
  int sample_count = 0;

  bool in_range(double wp_m, double wn_m, double vc_v) const;
};

struct VcoResponse {
  double freq_hz = 0.0;
  double power_w = 0.0;
  bool extrapolated = false;  // input left the fitted box
};

enum class SampleMethod { lhs, grid };

struct SamplePlan {
  std::vector<std::array<double, 3>> points;  // wp_m, wn_m, vc_v
  std::vector<double> freq_hz;                // empty until responses attached
  std::vector<double> power_w;
  std::array<VarRange, 3> ranges{};
  std::uint64_t seed = 0;
  SampleMethod method = SampleMethod::lhs;

  bool has_responses() const {
    return freq_hz.size() == points.size() && power_w.size() == points.size() &&
           !points.empty();
  }
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// All exponent tuples with total degree <= degree. Ordering matches the
// published coefficient tables: ascending in the last variable's exponent
// first, the first variable's exponent varying fastest. Equivalent to nested
// loops with x1 innermost.
std::vector<std::vector<int>> exponent_tuples(int degree, int nvars);

// 3-variable (wp, wn, vc) wrapper; nvars <= 3, missing exponents zero.
std::vector<BasisTerm> enumerate_basis(int degree, int nvars = 3);

// C(degree + nvars, nvars)
std::size_t basis_size(int degree, int nvars);

// One point per axis stratum per dimension; generic core used by the sampler
// and the optimizer's population init.
std::vector<std::vector<double>> lhs_matrix(int n,
                                            const std::vector<VarRange>& ranges,
                                            std::mt19937_64& rng);

SamplePlan lhs_sample(int n, const std::array<VarRange, 3>& ranges,
                      std::uint64_t seed);

// Full-factorial plan; count 1 places the point mid-range.
SamplePlan grid_sample(const std::array<int, 3>& counts,
                       const std::array<VarRange, 3>& ranges);

struct FitStats {
  double rmse = 0.0;
  double r2 = 0.0;
};

struct FitResult {
  PolyMetamodel model;
  FitStats freq;
  FitStats power;
};

// Ordinary least squares on a [-1,1]-scaled copy of the inputs (QR), folded
// back to raw-space coefficients. Throws FitError when underdetermined or
// rank-deficient.
FitResult fit(const SamplePlan& plan, int degree);

VcoResponse evaluate(const PolyMetamodel& m, double wp_m, double wn_m,
                     double vc_v);

// Shortest-round-trip scientific notation with a sign and 3-digit exponent
// (2.113e+009); the one float format every CSV artifact uses.
std::string format_sci(double v);

// Headerless CSV, one term per row: p1,p2,p3,beta_f,beta_p. Coefficients are
// shortest-round-trip scientific notation with a 3-digit exponent.
void save_csv(const PolyMetamodel& m, std::ostream& os);
void save_csv(const PolyMetamodel& m, const std::string& path);
PolyMetamodel load_csv(std::istream& is);
PolyMetamodel load_csv(const std::string& path);

// Verilog-AMS module mirroring the flow's generated VCO: coefficients are read
// from csv_filename at elaboration, the output toggles every half period.
std::string emit_vams(const PolyMetamodel& m, const std::string& module_name,
                      const std::string& csv_filename);

// Sample-plan CSV: header wp_m,wn_m,vc_v[,freq_hz,power_w].
void save_samples_csv(const SamplePlan& plan, const std::string& path);
SamplePlan load_samples_csv(const std::string& path);

}  // namespace metapll
