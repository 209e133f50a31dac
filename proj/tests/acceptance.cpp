// Acceptance suite: runs each shipped acceptance config in-process and
// re-verifies the criterion from the raw tables with oracles kept here.
// Usage: acceptance [--criterion N]

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "radwalk/harness.hpp"
#include "radwalk/replicate.hpp"

using namespace radwalk;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kSeMultiple = 4.0;
constexpr double kKsMax = 0.02;
constexpr double kPMin = 1e-3;
constexpr double kSupportSlack = 1e-8;
constexpr double kContractionKsMax = 0.006;
constexpr double kSlopeMax = -0.35;
constexpr double kRatioLo = 1.0, kRatioHi = 4.0;
constexpr double kWeakLawMaxFraction = 0.01;

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "!") + what;
  }
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

struct Run {
  RunRecord rec;
  double seconds = 0.0;
};

Run run_config(const std::string& name) {
  const ExperimentConfig cfg = load_config(fs::path(RADWALK_CONFIG_DIR) / (name + ".json"));
  Run r;
  r.rec = run_experiment(cfg, {default_workers()});
  r.seconds = r.rec.wall_seconds;
  return r;
}

const Table& table(const RunRecord& rec, const std::string& name) {
  for (const auto& t : rec.tables)
    if (t.name == name) return t;
  throw std::runtime_error("missing table " + name);
}

std::size_t column(const Table& t, const std::string& name) {
  const auto it = std::find(t.columns.begin(), t.columns.end(), name);
  if (it == t.columns.end()) throw std::runtime_error("missing column " + name + " in " + t.name);
  return static_cast<std::size_t>(it - t.columns.begin());
}

const Check* find_check(const RunRecord& rec, const std::string& name) {
  for (const auto& c : rec.checks)
    if (c.name == name) return &c;
  return nullptr;
}

void budget(Outcome& o, const Run& r, double seconds) {
  o.require(r.seconds <= seconds, "runtime " + fmt(r.seconds) + " s <= " + fmt(seconds) + " s");
}

// sup |F_n - N(0, var)| from scratch
double ks_to_normal(std::vector<double> xs, double var) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  const double sd = std::sqrt(var);
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = 0.5 * std::erfc(-xs[i] / (sd * std::numbers::sqrt2));
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

std::vector<double> column_values(const Table& t, const std::string& name) {
  const std::size_t c = column(t, name);
  std::vector<double> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) out.push_back(row[c]);
  return out;
}

// Hermitian 2x2 real symmetric matrices as (s11, s22, s12); vec = (s11, s22, sqrt2 s12).
using Sym2 = std::array<double, 3>;

std::array<double, 3> vec2(const Sym2& m) { return {m[0], m[1], std::numbers::sqrt2 * m[2]}; }

// Covariance limit of vec(phi^2) at sigma^2: C[(ij),(kl)] = s_ik s_jl + s_il s_jk,
// then mapped through the orthonormal vec basis.
std::array<std::array<double, 3>, 3> index_formula(const double s[2][2]) {
  const int ij[3][2] = {{0, 0}, {1, 1}, {0, 1}};
  const double w[3] = {1.0, 1.0, std::numbers::sqrt2};
  std::array<std::array<double, 3>, 3> out{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const int i = ij[a][0], j = ij[a][1], k = ij[b][0], l = ij[b][1];
      out[a][b] = w[a] * w[b] * (s[i][k] * s[j][l] + s[i][l] * s[j][k]);
    }
  return out;
}

Outcome c01() {
  const Run r = run_config("c01_moment_identity");
  const Table& t = table(r.rec, "moment_identity");
  Outcome o;
  o.require(t.rows.size() == 3, "three (n, p) rows");
  for (const auto& row : t.rows) {
    const double n = row[column(t, "n")], p = row[column(t, "p")];
    const double rhs = n * 2.25 + 12.5 * n * (n - 1) / p;
    const double emp = row[column(t, "empirical")], se = row[column(t, "std_error")];
    o.require(std::abs(emp - rhs) <= kSeMultiple * se,
              "n=" + fmt(n) + " p=" + fmt(p) + " " + fmt(emp) + " vs " + fmt(rhs) + " (se " + fmt(se) + ")");
  }
  budget(o, r, 120.0);
  return o;
}

Outcome c02() {
  Outcome o;
  // n m2: two-point (1, 2) has E s^2 = 2.5; the q = 2 mixture has E tr s^2 = (5 + 3.75) / 2
  const std::pair<const char*, double> cases[] = {{"c02_m2_additivity_q1", 8 * 2.5},
                                                  {"c02_m2_additivity_q2", 8 * 4.375}};
  for (const auto& [name, target] : cases) {
    const Run r = run_config(name);
    const Table& t = table(r.rec, "summary");
    o.require(t.rows.size() == 3, std::string(name) + " three mu rows");
    for (const auto& row : t.rows) {
      if (row[column(t, "step")] != 8) continue;
      const double emp = row[column(t, "mean_trace")], se = row[column(t, "se_trace")];
      o.require(std::abs(emp - target) <= kSeMultiple * se,
                "mu=" + fmt(row[column(t, "mu")]) + " " + fmt(emp) + " vs " + fmt(target));
    }
    budget(o, r, 60.0);
  }
  return o;
}

Outcome c03() {
  Outcome o;
  for (const char* name : {"c03_group_equivalence_q1", "c03_group_equivalence_q2"}) {
    const Run r = run_config(name);
    const Table& t = table(r.rec, "comparison");
    o.require(t.rows.size() == 1, std::string(name) + " one comparison");
    for (const auto& row : t.rows) {
      const double pv = row[column(t, "p_value")];
      o.require(pv >= kPMin, "p=" + fmt(row[column(t, "p")]) + " KS p-value " + fmt(pv));
    }
    budget(o, r, 60.0);
  }
  return o;
}

Outcome c04() {
  const Run r = run_config("c04_support_bound");
  const Table& t = table(r.rec, "cases");
  Outcome o;
  double draws = 0, violations = 0, worst = -INFINITY;
  for (const auto& row : t.rows) {
    draws += row[column(t, "draws")];
    violations += row[column(t, "violations")];
    worst = std::max(worst, row[column(t, "max_excess")]);
  }
  o.require(draws >= 1e6, "draws " + fmt(draws));
  o.require(violations == 0 && worst <= kSupportSlack, "violations " + fmt(violations) + " max excess " + fmt(worst));
  return o;
}

// j_{mu-1}(x) = Gamma(mu) (2/x)^{mu-1} J_{mu-1}(x)
double bessel_character(double mu, double x) {
  const double nu = mu - 1.0;
  return std::tgamma(mu) * std::pow(2.0 / x, nu) * std::cyl_bessel_j(nu, x);
}

Outcome c05() {
  const Run r = run_config("c05_character");
  const Table& t = table(r.rec, "axioms");
  Outcome o;
  const double ref = bessel_character(4.0, 0.7 * 1.0) * bessel_character(4.0, 0.7 * 2.0);
  o.require(t.rows.size() == 1, "one row");
  for (const auto& row : t.rows) {
    const double v = row[column(t, "value")], se = row[column(t, "std_error")];
    o.require(std::abs(v - ref) <= kSeMultiple * se, "mean " + fmt(v) + " vs " + fmt(ref) + " (se " + fmt(se) + ")");
  }
  budget(o, r, 10.0);
  return o;
}

Outcome c06() {
  const Run r = run_config("c06_clt2");
  Outcome o;
  // m4 - sigma^4 for the two-point law (1, 2): 8.5 - 6.25
  const std::vector<double> xs = column_values(table(r.rec, "statistic"), "c0");
  o.require(xs.size() == 20000, "20000 replicates");
  const double ks = ks_to_normal(xs, 2.25);
  o.require(ks <= kKsMax, "KS to N(0, 2.25) " + fmt(ks));
  budget(o, r, 300.0);
  return o;
}

Outcome c07() {
  Outcome o;
  {
    const Run r = run_config("c07_bessel_clt");
    const Table& t = table(r.rec, "covariance");
    // image covariance of vec(s^2) for the six equally weighted atoms
    const Sym2 atoms[6] = {{3, 2, 0}, {1, 2, 0}, {2, 3, 0}, {2, 1, 0}, {2, 2, 1}, {2, 2, -1}};
    std::array<double, 3> mean{};
    for (const auto& a : atoms)
      for (int k = 0; k < 3; ++k) mean[k] += vec2(a)[k] / 6.0;
    double cov[3][3] = {};
    for (const auto& a : atoms) {
      const auto v = vec2(a);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) cov[i][j] += (v[i] - mean[i]) * (v[j] - mean[j]) / 6.0;
    }
    double max_z = 0.0;
    for (const auto& row : t.rows) {
      const int a = static_cast<int>(row[column(t, "a")]), b = static_cast<int>(row[column(t, "b")]);
      const double z = std::abs(row[column(t, "empirical")] - cov[a][b]) / row[column(t, "std_error")];
      max_z = std::max(max_z, z);
    }
    o.require(t.rows.size() == 6, "six covariance entries");
    o.require(max_z <= kSeMultiple, "max |z| " + fmt(max_z));
    for (const char* name : {"mardia skew p_value", "mardia kurtosis p_value"}) {
      const Check* c = find_check(r.rec, name);
      o.require(c && c->value >= kPMin, std::string(name) + " " + (c ? fmt(c->value) : "missing"));
    }
    budget(o, r, 600.0);
  }
  {
    const Run r = run_config("c07_weak_law");
    const std::vector<double> dev = column_values(table(r.rec, "deviation"), "norm");
    const double eps = r.rec.config.thresholds.weak_law_eps;
    const double frac = std::count_if(dev.begin(), dev.end(), [&](double x) { return x > eps; }) /
                        static_cast<double>(dev.size());
    o.require(frac <= kWeakLawMaxFraction, "weak law fraction above " + fmt(eps) + ": " + fmt(frac));
  }
  return o;
}

Outcome c08() {
  const Run r = run_config("c08_clt1");
  Outcome o;
  const std::vector<double> xs = column_values(table(r.rec, "statistic"), "c0");
  o.require(xs.size() == 20000, "20000 replicates");
  const double ks = ks_to_normal(xs, 1.0);
  o.require(ks <= kKsMax, "KS to N(0, 1) " + fmt(ks));
  budget(o, r, 300.0);
  return o;
}

Outcome c09() {
  const Run r = run_config("c09_clt3");
  const Table& t = table(r.rec, "covariance");
  const double id[2][2] = {{1, 0}, {0, 1}};
  const auto lim = index_formula(id);
  Outcome o;
  double max_z = 0.0;
  for (const auto& row : t.rows) {
    const int a = static_cast<int>(row[column(t, "a")]), b = static_cast<int>(row[column(t, "b")]);
    const double z = std::abs(row[column(t, "empirical")] - lim[a][b]) / row[column(t, "std_error")];
    max_z = std::max(max_z, z);
  }
  o.require(t.rows.size() == 6, "six covariance entries");
  o.require(max_z <= kSeMultiple, "max |z| " + fmt(max_z));
  return o;
}

Outcome c10() {
  const Run r = run_config("c10_berry_esseen");
  const Table& t = table(r.rec, "scan");
  Outcome o;
  std::vector<double> lx, ly;
  const double reps = static_cast<double>(r.rec.config.replicates);
  for (const auto& row : t.rows) {
    const double ks = row[column(t, "ks")];
    if (ks <= 3.0 / std::sqrt(reps)) continue;
    lx.push_back(std::log(row[column(t, "n")]));
    ly.push_back(std::log(ks));
  }
  o.require(lx.size() >= 2, fmt(double(lx.size())) + " points above the noise floor");
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i] / n, my += ly[i] / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxy / sxx;
    o.require(slope <= kSlopeMax, "slope " + fmt(slope));
  }
  budget(o, r, 600.0);
  return o;
}

Outcome c11() {
  const Run r = run_config("c11_root_lipschitz");
  const Table& t = table(r.rec, "axioms");
  Outcome o;
  std::map<double, double> gap;
  for (const auto& row : t.rows) gap[row[column(t, "mu")]] = row[column(t, "value")];
  o.require(gap.count(200) && gap.count(800), "gaps at mu 200 and 800");
  if (gap.count(200) && gap.count(800) && gap[800] > 0) {
    const double ratio = gap[200] / gap[800];
    o.require(ratio >= kRatioLo && ratio <= kRatioHi, "ratio " + fmt(ratio));
  }
  return o;
}

Outcome c12() {
  const Run r = run_config("c12_sampler");
  const Table& t = table(r.rec, "kappa");
  Outcome o;
  for (const auto& row : t.rows) {
    const double mu = row[column(t, "mu")];
    const double ks = row[column(t, "contraction_ks")];
    o.require(ks <= kContractionKsMax, "mu=" + fmt(mu) + " contraction KS " + fmt(ks));
    // q = d = 1: kappa = int_{-1}^{1} (1 - v^2)^{mu - 3/2} dv = B(1/2, mu - 1/2)
    const double exact = std::beta(0.5, mu - 0.5);
    const double est = row[column(t, "estimate")], se = row[column(t, "std_error")];
    o.require(std::abs(est - exact) <= kSeMultiple * se,
              "mu=" + fmt(mu) + " kappa " + fmt(est) + " vs " + fmt(exact));
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome c13() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "radwalk_acceptance_c13";
  const char* configs[] = {"c03_group_equivalence_q2", "c05_character", "c11_root_lipschitz", "c12_sampler"};
  for (const char* name : configs) {
    std::vector<fs::path> dirs;
    for (int workers : {1, 16}) {
      const fs::path dir = root / (std::string(name) + "_w" + std::to_string(workers));
      fs::remove_all(dir);
      const std::string cmd = std::string("\"") + RADWALK_CLI + "\" run --quiet --config \"" + RADWALK_CONFIG_DIR +
                              "/" + name + ".json\" --workers " + std::to_string(workers) + " --out \"" +
                              dir.string() + "\"";
      const int rc = std::system(cmd.c_str());
      o.require(rc == 0, std::string(name) + " exit status at " + std::to_string(workers) + " workers");
      dirs.push_back(dir);
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dirs[0])) files.push_back(e.path().filename());
    std::sort(files.begin(), files.end());
    bool same = !files.empty();
    for (const auto& f : files) {
      std::string a = slurp(dirs[0] / f), b = slurp(dirs[1] / f);
      if (f.extension() == ".csv") {
        a = a.substr(a.find('\n') + 1);
        b = b.substr(b.find('\n') + 1);
      }
      same = same && fs::exists(dirs[1] / f) && a == b;
    }
    o.require(same, std::string(name) + " " + std::to_string(files.size()) + " files identical");
  }
  fs::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {c01, c02, c03, c04, c05, c06, c07,
                                                          c08, c09, c10, c11, c12, c13};
  int only = 0;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--criterion") only = std::atoi(argv[i + 1]);
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::cerr << "no criterion " << only << "\n";
    return 2;
  }

  bool all = true;
  for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) {
    if (only && k != only) continue;
    char label[16];
    std::snprintf(label, sizeof label, "c%02d", k);
    Outcome o;
    try {
      o = criteria[k - 1]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << label << " " << o.detail << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
