#include "metapll/metamodel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace metapll {

namespace {

double integer_pow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}


void append_tuples(int nvars, int budget, std::vector<int>& cur,
                   std::vector<std::vector<int>>& out) {
  if (nvars == 1) {
    for (int p = 0; p <= budget; ++p) {
      cur.front() = p;
      out.push_back(cur);
    }
    return;
  }
  for (int p = 0; p <= budget; ++p) {
    cur[nvars - 1] = p;
    append_tuples(nvars - 1, budget - p, cur, out);
  }
}

}  // namespace

// shortest round-trip scientific, exponent padded to 3 digits: 2.113e+009
std::string format_sci(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v,
                           std::chars_format::scientific);
  std::string s(buf, res.ptr);
  auto e = s.find('e');
  if (e == std::string::npos) return s;  // nan/inf
  int exp = std::atoi(s.c_str() + e + 1);
  char out[80];
  std::snprintf(out, sizeof out, "%.*se%+04d", int(e), s.c_str(), exp);
  return out;
}


std::vector<std::vector<int>> exponent_tuples(int degree, int nvars) {
  if (degree < 0) throw std::invalid_argument("degree must be >= 0");
  if (nvars < 1) throw std::invalid_argument("nvars must be >= 1");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(nvars, 0);
  append_tuples(nvars, degree, cur, out);
  return out;
}

std::vector<BasisTerm> enumerate_basis(int degree, int nvars) {
  if (nvars < 1 || nvars > 3)
    throw std::invalid_argument("enumerate_basis supports 1..3 variables");
  std::vector<BasisTerm> out;
  for (const auto& t : exponent_tuples(degree, nvars)) {
    BasisTerm b;
    b.p1 = t[0];
    if (nvars > 1) b.p2 = t[1];
    if (nvars > 2) b.p3 = t[2];
    out.push_back(b);
  }
  return out;
}

std::size_t basis_size(int degree, int nvars) {
  // C(degree + nvars, nvars)
  std::size_t r = 1;
  for (int i = 1; i <= nvars; ++i)
    r = r * std::size_t(degree + i) / std::size_t(i);
  return r;
}

std::vector<std::vector<double>> lhs_matrix(int n,
                                            const std::vector<VarRange>& ranges,
                                            std::mt19937_64& rng) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  for (const auto& r : ranges)
    if (!(r.lo < r.hi))
      throw std::invalid_argument("sample range must satisfy lo < hi");

  std::vector<std::vector<double>> pts(n, std::vector<double>(ranges.size()));
  std::vector<int> strata(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t d = 0; d < ranges.size(); ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    for (int i = 0; i < n; ++i) {
      double u01 = (double(strata[i]) + unit(rng)) / double(n);
      pts[i][d] = ranges[d].lo + (ranges[d].hi - ranges[d].lo) * u01;
    }
  }
  return pts;
}

SamplePlan lhs_sample(int n, const std::array<VarRange, 3>& ranges,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<VarRange> rv(ranges.begin(), ranges.end());
  auto pts = lhs_matrix(n, rv, rng);
  SamplePlan plan;
  plan.ranges = ranges;
  plan.seed = seed;
  plan.method = SampleMethod::lhs;
  plan.points.reserve(pts.size());
  for (const auto& p : pts) plan.points.push_back({p[0], p[1], p[2]});
  return plan;
}

SamplePlan grid_sample(const std::array<int, 3>& counts,
                       const std::array<VarRange, 3>& ranges) {
  for (int c : counts)
    if (c < 1) throw std::invalid_argument("grid counts must be >= 1");
  for (const auto& r : ranges)
    if (!(r.lo < r.hi))
      throw std::invalid_argument("sample range must satisfy lo < hi");

  auto coord = [&](int d, int i) {
    if (counts[d] == 1) return 0.5 * (ranges[d].lo + ranges[d].hi);
    return ranges[d].lo +
           (ranges[d].hi - ranges[d].lo) * double(i) / double(counts[d] - 1);
  };
  SamplePlan plan;
  plan.ranges = ranges;
  plan.method = SampleMethod::grid;
  plan.points.reserve(std::size_t(counts[0]) * counts[1] * counts[2]);
  for (int i = 0; i < counts[0]; ++i)
    for (int j = 0; j < counts[1]; ++j)
      for (int k = 0; k < counts[2]; ++k)
        plan.points.push_back({coord(0, i), coord(1, j), coord(2, k)});
  return plan;
}

bool PolyMetamodel::in_range(double wp_m, double wn_m, double vc_v) const {
  return wp_m >= wp_range.lo && wp_m <= wp_range.hi && wn_m >= wn_range.lo &&
         wn_m <= wn_range.hi && vc_v >= vc_range.lo && vc_v <= vc_range.hi;
}

VcoResponse evaluate(const PolyMetamodel& m, double wp_m, double wn_m,
                     double vc_v) {
  if (m.terms.empty()) throw std::invalid_argument("empty metamodel");
  VcoResponse r;
  for (std::size_t i = 0; i < m.terms.size(); ++i) {
    const double mono = integer_pow(wp_m, m.terms[i].p1) *
                        integer_pow(wn_m, m.terms[i].p2) *
                        integer_pow(vc_v, m.terms[i].p3);
    r.freq_hz += m.beta_f[i] * mono;
    r.power_w += m.beta_p[i] * mono;
  }
  r.extrapolated = !m.in_range(wp_m, wn_m, vc_v);
  return r;
}

namespace {

struct Scale {
  double a, b;  // z = a*x + b maps [lo,hi] -> [-1,1]
};

Scale make_scale(const VarRange& r) {
  return {2.0 / (r.hi - r.lo), -(r.hi + r.lo) / (r.hi - r.lo)};
}

// Fold a scaled-space coefficient vector back to raw-space monomials:
// z^p = (a x + b)^p expands binomially over x^m, m <= p.
std::vector<double> fold_back(const std::vector<BasisTerm>& terms,
                              const Eigen::VectorXd& scaled,
                              const std::array<Scale, 3>& s) {
  std::map<std::array<int, 3>, std::size_t> index;
  for (std::size_t i = 0; i < terms.size(); ++i)
    index[{terms[i].p1, terms[i].p2, terms[i].p3}] = i;

  std::vector<double> raw(terms.size(), 0.0);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const BasisTerm& t = terms[i];
    for (int m1 = 0; m1 <= t.p1; ++m1) {
      const double f1 = binomial(t.p1, m1) * integer_pow(s[0].a, m1) *
                        integer_pow(s[0].b, t.p1 - m1);
      for (int m2 = 0; m2 <= t.p2; ++m2) {
        const double f2 = binomial(t.p2, m2) * integer_pow(s[1].a, m2) *
                          integer_pow(s[1].b, t.p2 - m2);
        for (int m3 = 0; m3 <= t.p3; ++m3) {
          const double f3 = binomial(t.p3, m3) * integer_pow(s[2].a, m3) *
                            integer_pow(s[2].b, t.p3 - m3);
          raw[index.at({m1, m2, m3})] += scaled[i] * f1 * f2 * f3;
        }
      }
    }
  }
  return raw;
}

FitStats stats_of(const Eigen::VectorXd& y, const Eigen::VectorXd& pred) {
  FitStats st;
  const double sse = (y - pred).squaredNorm();
  st.rmse = std::sqrt(sse / double(y.size()));
  const double mean = y.mean();
  const double sst = (y.array() - mean).matrix().squaredNorm();
  st.r2 = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
  return st;
}

}  // namespace

FitResult fit(const SamplePlan& plan, int degree) {
  if (!plan.has_responses())
    throw FitError("sample plan has no responses to fit");
  const auto terms = enumerate_basis(degree, 3);
  const std::size_t n = plan.points.size();
  const std::size_t k = terms.size();
  if (n < k)
    throw FitError("underdetermined fit: " + std::to_string(n) +
                   " samples < " + std::to_string(k) + " basis terms");

  // condition on the plan's box; fall back to the data's bounding box
  std::array<VarRange, 3> box = plan.ranges;
  for (int d = 0; d < 3; ++d) {
    if (!(box[d].lo < box[d].hi)) {
      double lo = plan.points[0][d], hi = plan.points[0][d];
      for (const auto& p : plan.points) {
        lo = std::min(lo, p[d]);
        hi = std::max(hi, p[d]);
      }
      box[d] = {lo, hi};
    }
    if (!(box[d].lo < box[d].hi))
      throw FitError("degenerate sample range in variable " +
                     std::to_string(d + 1));
  }
  const std::array<Scale, 3> s = {make_scale(box[0]), make_scale(box[1]),
                                  make_scale(box[2])};

  Eigen::MatrixXd A(n, k);
  for (std::size_t r = 0; r < n; ++r) {
    const double z1 = s[0].a * plan.points[r][0] + s[0].b;
    const double z2 = s[1].a * plan.points[r][1] + s[1].b;
    const double z3 = s[2].a * plan.points[r][2] + s[2].b;
    for (std::size_t c = 0; c < k; ++c)
      A(r, c) = integer_pow(z1, terms[c].p1) * integer_pow(z2, terms[c].p2) *
                integer_pow(z3, terms[c].p3);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (std::size_t(qr.rank()) < k)
    throw FitError("rank-deficient design matrix: rank " +
                   std::to_string(qr.rank()) + " < " + std::to_string(k) +
                   " terms; samples do not span the basis");

  Eigen::VectorXd yf = Eigen::Map<const Eigen::VectorXd>(plan.freq_hz.data(), n);
  Eigen::VectorXd yp =
      Eigen::Map<const Eigen::VectorXd>(plan.power_w.data(), n);
  Eigen::VectorXd cf = qr.solve(yf);
  Eigen::VectorXd cp = qr.solve(yp);

  FitResult out;
  out.model.terms = terms;
  out.model.beta_f = fold_back(terms, cf, s);
  out.model.beta_p = fold_back(terms, cp, s);
  out.model.wp_range = box[0];
  out.model.wn_range = box[1];
  out.model.vc_range = box[2];
  out.model.sample_count = int(n);
  out.freq = stats_of(yf, A * cf);
  out.power = stats_of(yp, A * cp);
  return out;
}

void save_csv(const PolyMetamodel& m, std::ostream& os) {
  if (m.terms.empty()) throw std::invalid_argument("empty metamodel");
  for (std::size_t i = 0; i < m.terms.size(); ++i)
    os << m.terms[i].p1 << ',' << m.terms[i].p2 << ',' << m.terms[i].p3 << ','
       << format_sci(m.beta_f[i]) << ',' << format_sci(m.beta_p[i]) << '\n';
}

void save_csv(const PolyMetamodel& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  save_csv(m, os);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

int parse_exponent(const std::string& f, int lineno) {
  char* end = nullptr;
  long v = std::strtol(f.c_str(), &end, 10);
  if (end == f.c_str() || *end != '\0')
    throw ParseError("line " + std::to_string(lineno) +
                     ": bad exponent field '" + f + "'");
  if (v < 0)
    throw ParseError("line " + std::to_string(lineno) +
                     ": negative exponent " + std::to_string(v));
  return int(v);
}

double parse_coeff(const std::string& f, int lineno) {
  char* end = nullptr;
  double v = std::strtod(f.c_str(), &end);
  if (end == f.c_str() || *end != '\0')
    throw ParseError("line " + std::to_string(lineno) +
                     ": bad coefficient field '" + f + "'");
  return v;
}

}  // namespace

PolyMetamodel load_csv(std::istream& is) {
  PolyMetamodel m;
  std::map<std::array<int, 3>, int> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != 5)
      throw ParseError("line " + std::to_string(lineno) + ": expected 5 fields, got " +
                       std::to_string(fields.size()));
    BasisTerm t;
    t.p1 = parse_exponent(fields[0], lineno);
    t.p2 = parse_exponent(fields[1], lineno);
    t.p3 = parse_exponent(fields[2], lineno);
    auto [it, fresh] = seen.emplace(std::array<int, 3>{t.p1, t.p2, t.p3}, lineno);
    if (!fresh)
      throw ParseError("line " + std::to_string(lineno) +
                       ": duplicate exponent tuple (" + std::to_string(t.p1) +
                       "," + std::to_string(t.p2) + "," + std::to_string(t.p3) +
                       "), first seen on line " + std::to_string(it->second));
    m.terms.push_back(t);
    m.beta_f.push_back(parse_coeff(fields[3], lineno));
    m.beta_p.push_back(parse_coeff(fields[4], lineno));
  }
  if (m.terms.empty()) throw ParseError("no terms in metamodel csv");
  return m;
}

PolyMetamodel load_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return load_csv(is);
}

std::string emit_vams(const PolyMetamodel& m, const std::string& module_name,
                      const std::string& csv_filename) {
  if (m.terms.empty())
    throw std::invalid_argument("cannot emit Verilog-AMS for an empty model");
  std::ostringstream os;
  os << "`timescale 10ps / 1ps\n";
  os << "`include \"constants.vams\"\n";
  os << "`include \"disciplines.vams\"\n";
  os << "\n";
  os << "// " << module_name
     << ": polynomial VCO behavioral model; term table loaded at elaboration\n";
  os << "module " << module_name << "(out, in);\n";
  os << "  output out;\n";
  os << "  input in;\n";
  os << "  electrical in;\n";
  os << "  reg out;\n";
  os << "\n";
  os << "  parameter integer K = " << m.terms.size() << ";\n";
  os << "  parameter real wp = 20e-6;\n";
  os << "  parameter real wn = 10e-6;\n";
  os << "\n";
  os << "  real bf[1:K];     // width-folded frequency coefficients\n";
  os << "  real bp[1:K];     // width-folded power coefficients\n";
  os << "  integer pv[1:K];  // vc exponent per term\n";
  os << "  integer metaf, readfile, i, p1, p2, p3;\n";
  os << "  real betaf, betap, vc, freq, power;\n";
  os << "\n";
  os << "  initial begin\n";
  os << "    out = 0;\n";
  os << "    i = 1;\n";
  os << "    metaf = $fopen(\"" << csv_filename << "\", \"r\");\n";
  os << "    while (!$feof(metaf) && i <= K) begin\n";
  os << "      readfile = $fscanf(metaf, \"%d,%d,%d,%e,%e\", p1, p2, p3, "
        "betaf, betap);\n";
  os << "      bf[i] = pow(wp, p1) * pow(wn, p2) * betaf;\n";
  os << "      bp[i] = pow(wp, p1) * pow(wn, p2) * betap;\n";
  os << "      pv[i] = p3;\n";
  os << "      i = i + 1;\n";
  os << "    end\n";
  os << "    $fclose(metaf);\n";
  os << "  end\n";
  os << "\n";
  os << "  always begin\n";
  os << "    vc = V(in);\n";
  os << "    freq = 0.0;\n";
  os << "    power = 0.0;\n";
  os << "    for (i = 1; i <= K; i = i + 1) begin\n";
  os << "      freq = freq + bf[i] * pow(vc, pv[i]);\n";
  os << "      power = power + bp[i] * pow(vc, pv[i]);\n";
  os << "    end\n";
  os << "    #(0.5 / freq / 10p) out = ~out;\n";
  os << "  end\n";
  os << "endmodule\n";
  return os.str();
}

void save_samples_csv(const SamplePlan& plan, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  const bool with_resp = plan.has_responses();
  os << (with_resp ? "wp_m,wn_m,vc_v,freq_hz,power_w\n" : "wp_m,wn_m,vc_v\n");
  for (std::size_t i = 0; i < plan.points.size(); ++i) {
    os << format_sci(plan.points[i][0]) << ',' << format_sci(plan.points[i][1]) << ','
       << format_sci(plan.points[i][2]);
    if (with_resp) os << ',' << format_sci(plan.freq_hz[i]) << ',' << format_sci(plan.power_w[i]);
    os << '\n';
  }
}

SamplePlan load_samples_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty sample csv");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool with_resp;
  if (line == "wp_m,wn_m,vc_v,freq_hz,power_w")
    with_resp = true;
  else if (line == "wp_m,wn_m,vc_v")
    with_resp = false;
  else
    throw ParseError("line 1: unrecognized sample csv header '" + line + "'");

  SamplePlan plan;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    const std::size_t want = with_resp ? 5 : 3;
    if (fields.size() != want)
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(want) + " fields, got " +
                       std::to_string(fields.size()));
    std::array<double, 5> v{};
    for (std::size_t j = 0; j < want; ++j) v[j] = parse_coeff(fields[j], lineno);
    plan.points.push_back({v[0], v[1], v[2]});
    if (with_resp) {
      plan.freq_hz.push_back(v[3]);
      plan.power_w.push_back(v[4]);
    }
  }
  if (plan.points.empty()) throw ParseError("no samples in csv");
  for (int d = 0; d < 3; ++d) {
    double lo = plan.points[0][d], hi = plan.points[0][d];
    for (const auto& p : plan.points) {
      lo = std::min(lo, p[d]);
      hi = std::max(hi, p[d]);
    }
    plan.ranges[d] = {lo, hi};
  }
  return plan;
}

}  // namespace metapll
