#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "radwalk/bessel_hypergroup.hpp"
#include "radwalk/errors.hpp"
#include "radwalk/harness.hpp"
#include "radwalk/limit_lab.hpp"

namespace radwalk {

using nlohmann::json;

namespace {

const std::vector<std::pair<Experiment, std::string>>& experiment_table() {
  static const std::vector<std::pair<Experiment, std::string>> table = {
      {Experiment::WalkGroup, "walk-group"},
      {Experiment::WalkBessel, "walk-bessel"},
      {Experiment::Convolve, "convolve"},
      {Experiment::Kappa, "kappa"},
      {Experiment::CltCheck, "clt-check"},
      {Experiment::BerryEsseenScan, "berry-esseen-scan"},
      {Experiment::Axioms, "axioms"},
      {Experiment::MomentIdentity, "moment-identity"},
  };
  return table;
}

std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

[[noreturn]] void fail(const std::string& field, const std::string& message) { throw ConfigError(field, message); }

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) fail(join_path(where, key), "unknown key");
  }
}

double get_double(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(field, "expected a finite number");
  return v;
}

std::int64_t get_int(const json& j, const std::string& field) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::floor(v) == v && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
  }
  fail(field, "expected an integer");
}

std::uint64_t get_u64(const json& j, const std::string& field) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const std::int64_t v = get_int(j, field);
  if (v < 0) fail(field, "expected a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

bool get_bool(const json& j, const std::string& field) {
  if (!j.is_boolean()) fail(field, "expected true or false");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) fail(field, "expected a string");
  return j.get<std::string>();
}

Field parse_field(const json& j, const std::string& field) {
  const std::string s = get_string(j, field);
  if (s == "real") return Field::Real;
  if (s == "complex") return Field::Complex;
  fail(field, "expected \"real\" or \"complex\", got \"" + s + "\"");
}

WalkMethod parse_method(const json& j, const std::string& field) {
  const std::string s = get_string(j, field);
  if (s == "auto") return WalkMethod::Auto;
  if (s == "explicit") return WalkMethod::Explicit;
  if (s == "reduced") return WalkMethod::Reduced;
  fail(field, "expected auto, explicit or reduced");
}

std::string method_name(WalkMethod m) {
  switch (m) {
    case WalkMethod::Auto:
      return "auto";
    case WalkMethod::Explicit:
      return "explicit";
    case WalkMethod::Reduced:
      return "reduced";
  }
  return "auto";
}

// A number, a list of numbers, or absent.
template <class T, class Get>
std::vector<T> get_list(const json& j, const std::string& field, Get get) {
  std::vector<T> out;
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get(j[i], field + "[" + std::to_string(i) + "]"));
  } else {
    out.push_back(get(j, field));
  }
  return out;
}

std::vector<std::vector<double>> get_rows(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected a matrix (array of rows)");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string rf = field + "[" + std::to_string(i) + "]";
    if (!j[i].is_array()) fail(rf, "expected a row array");
    std::vector<double> row;
    for (std::size_t k = 0; k < j[i].size(); ++k) row.push_back(get_double(j[i][k], rf + "[" + std::to_string(k) + "]"));
    rows.push_back(std::move(row));
  }
  return rows;
}

void check_square(const std::vector<std::vector<double>>& rows, int q, const std::string& field) {
  if (static_cast<int>(rows.size()) != q) fail(field, "expected " + std::to_string(q) + " rows");
  for (const auto& r : rows)
    if (static_cast<int>(r.size()) != q) fail(field, "expected rows of length " + std::to_string(q));
}

// number -> value * I_q; rows; or {"re": rows, "im": rows}.
MatrixSpec parse_matrix(const json& j, int q, Field field, const std::string& where) {
  MatrixSpec m;
  if (j.is_number()) {
    const double v = get_double(j, where);
    m.re.assign(q, std::vector<double>(q, 0.0));
    for (int i = 0; i < q; ++i) m.re[i][i] = v;
  } else if (j.is_object()) {
    reject_unknown(j, {"re", "im"}, where);
    if (!j.contains("re")) fail(join_path(where, "re"), "missing");
    m.re = get_rows(j.at("re"), join_path(where, "re"));
    if (j.contains("im")) {
      if (field != Field::Complex) fail(join_path(where, "im"), "imaginary parts need field = complex");
      m.im = get_rows(j.at("im"), join_path(where, "im"));
      check_square(m.im, q, join_path(where, "im"));
    }
  } else {
    m.re = get_rows(j, where);
  }
  check_square(m.re, q, where);
  return m;
}

json matrix_json(const MatrixSpec& m) {
  if (m.im.empty()) return m.re;
  return json{{"re", m.re}, {"im", m.im}};
}

HermitianMatrix matrix_from_spec(const MatrixSpec& spec, int q, Field field) {
  Matrix m(q, q);
  for (int i = 0; i < q; ++i)
    for (int k = 0; k < q; ++k) m(i, k) = Scalar(spec.re[i][k], spec.im.empty() ? 0.0 : spec.im[i][k]);
  return HermitianMatrix(m, field);
}

PsdMatrix atom_from_spec(const MatrixSpec& spec, bool squared, int q, Field field) {
  const HermitianMatrix h = matrix_from_spec(spec, q, field);
  return squared ? psd_sqrt_of(h) : PsdMatrix(h);
}

LawSpec parse_law(const json& j, int q, Field field) {
  const std::string where = "law";
  if (!j.is_object()) fail(where, "expected an object");
  if (!j.contains("type")) fail("law.type", "missing");
  LawSpec law;
  law.type = get_string(j.at("type"), "law.type");
  auto num = [&](const char* key, double dflt) {
    return j.contains(key) ? get_double(j.at(key), join_path(where, key)) : dflt;
  };
  if (law.type == "point_mass") {
    reject_unknown(j, {"type", "atom", "atoms_squared"}, where);
    if (!j.contains("atom")) fail("law.atom", "missing");
    law.atoms.push_back(parse_matrix(j.at("atom"), q, field, "law.atom"));
    if (j.contains("atoms_squared")) law.atoms_squared = get_bool(j.at("atoms_squared"), "law.atoms_squared");
  } else if (law.type == "mixture") {
    reject_unknown(j, {"type", "atoms", "weights", "atoms_squared"}, where);
    if (!j.contains("atoms") || !j.at("atoms").is_array() || j.at("atoms").empty())
      fail("law.atoms", "expected a nonempty array");
    for (std::size_t i = 0; i < j.at("atoms").size(); ++i)
      law.atoms.push_back(parse_matrix(j.at("atoms")[i], q, field, "law.atoms[" + std::to_string(i) + "]"));
    if (j.contains("weights")) {
      law.weights = get_list<double>(j.at("weights"), "law.weights", get_double);
    } else {
      law.weights.assign(law.atoms.size(), 1.0 / static_cast<double>(law.atoms.size()));
    }
    if (j.contains("atoms_squared")) law.atoms_squared = get_bool(j.at("atoms_squared"), "law.atoms_squared");
  } else if (law.type == "two_point") {
    reject_unknown(j, {"type", "a", "b", "p_a"}, where);
    law.a = num("a", 0.0);
    law.b = num("b", 0.0);
    law.p_a = num("p_a", 0.5);
  } else if (law.type == "log_normal") {
    reject_unknown(j, {"type", "log_mean", "log_sd"}, where);
    law.log_mean = num("log_mean", 0.0);
    law.log_sd = num("log_sd", 1.0);
  } else if (law.type == "uniform") {
    reject_unknown(j, {"type", "lo", "hi"}, where);
    law.lo = num("lo", 0.0);
    law.hi = num("hi", 1.0);
  } else if (law.type == "wishart_root") {
    reject_unknown(j, {"type", "scale", "dof"}, where);
    law.scale = num("scale", 1.0);
    law.dof = j.contains("dof") ? static_cast<int>(get_int(j.at("dof"), "law.dof")) : q;
  } else {
    fail("law.type", "unknown law type \"" + law.type + "\"");
  }
  return law;
}

json law_json(const LawSpec& law) {
  json j{{"type", law.type}};
  if (law.type == "point_mass") {
    j["atom"] = matrix_json(law.atoms.at(0));
    j["atoms_squared"] = law.atoms_squared;
  } else if (law.type == "mixture") {
    json atoms = json::array();
    for (const auto& a : law.atoms) atoms.push_back(matrix_json(a));
    j["atoms"] = atoms;
    j["weights"] = law.weights;
    j["atoms_squared"] = law.atoms_squared;
  } else if (law.type == "two_point") {
    j["a"] = law.a;
    j["b"] = law.b;
    j["p_a"] = law.p_a;
  } else if (law.type == "log_normal") {
    j["log_mean"] = law.log_mean;
    j["log_sd"] = law.log_sd;
  } else if (law.type == "uniform") {
    j["lo"] = law.lo;
    j["hi"] = law.hi;
  } else if (law.type == "wishart_root") {
    j["scale"] = law.scale;
    j["dof"] = law.dof;
  }
  return j;
}

Thresholds parse_thresholds(const json& j) {
  Thresholds t;
  if (!j.is_object()) fail("thresholds", "expected an object");
  const std::vector<std::pair<const char*, double*>> fields = {
      {"se_multiple", &t.se_multiple},
      {"ks_max", &t.ks_max},
      {"ks_p_min", &t.ks_p_min},
      {"mardia_level", &t.mardia_level},
      {"support_slack", &t.support_slack},
      {"contraction_ks_max", &t.contraction_ks_max},
      {"slope_max", &t.slope_max},
      {"ratio_lo", &t.ratio_lo},
      {"ratio_hi", &t.ratio_hi},
      {"weak_law_eps", &t.weak_law_eps},
      {"weak_law_max_fraction", &t.weak_law_max_fraction},
  };
  std::set<std::string> allowed;
  for (const auto& [key, ptr] : fields) {
    allowed.insert(key);
    if (j.contains(key)) *ptr = get_double(j.at(key), std::string("thresholds.") + key);
  }
  reject_unknown(j, allowed, "thresholds");
  return t;
}

json thresholds_json(const Thresholds& t) {
  return json{{"se_multiple", t.se_multiple},
              {"ks_max", t.ks_max},
              {"ks_p_min", t.ks_p_min},
              {"mardia_level", t.mardia_level},
              {"support_slack", t.support_slack},
              {"contraction_ks_max", t.contraction_ks_max},
              {"slope_max", t.slope_max},
              {"ratio_lo", t.ratio_lo},
              {"ratio_hi", t.ratio_hi},
              {"weak_law_eps", t.weak_law_eps},
              {"weak_law_max_fraction", t.weak_law_max_fraction}};
}

OutputSpec parse_output(const json& j) {
  if (!j.is_object()) fail("output", "expected an object");
  reject_unknown(j, {"dir", "prefix", "format", "plot"}, "output");
  OutputSpec o;
  if (j.contains("dir")) o.dir = get_string(j.at("dir"), "output.dir");
  if (j.contains("prefix")) o.prefix = get_string(j.at("prefix"), "output.prefix");
  if (j.contains("format")) {
    try {
      o.format = parse_output_format(get_string(j.at("format"), "output.format"));
    } catch (const DomainError& e) {
      fail("output.format", e.what());
    }
  }
  if (j.contains("plot")) o.plot = get_bool(j.at("plot"), "output.plot");
  return o;
}

std::string field_name(Field f) { return f == Field::Real ? "real" : "complex"; }

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& [k, name] : experiment_table())
    if (k == e) return name;
  return "?";
}

Experiment parse_experiment(const std::string& text) {
  for (const auto& [k, name] : experiment_table())
    if (name == text) return k;
  throw ConfigError("experiment", "unknown experiment \"" + text + "\"");
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [k, name] : experiment_table()) {
      (void)k;
      out.push_back(name);
    }
    return out;
  }();
  return names;
}

std::string to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::Csv:
      return "csv";
    case OutputFormat::Json:
      return "json";
    case OutputFormat::Both:
      return "both";
  }
  return "both";
}

OutputFormat parse_output_format(const std::string& text) {
  if (text == "csv") return OutputFormat::Csv;
  if (text == "json") return OutputFormat::Json;
  if (text == "both") return OutputFormat::Both;
  throw DomainError("format must be csv, json or both");
}

RadialLaw build_law(const LawSpec& spec, int q, Field field) {
  if (spec.type == "point_mass") {
    if (spec.atoms.size() != 1) throw ConfigError("law.atom", "point mass needs exactly one atom");
    return RadialLaw::point_mass(atom_from_spec(spec.atoms[0], spec.atoms_squared, q, field));
  }
  if (spec.type == "mixture") {
    std::vector<PsdMatrix> atoms;
    for (const auto& a : spec.atoms) atoms.push_back(atom_from_spec(a, spec.atoms_squared, q, field));
    return RadialLaw::mixture(std::move(atoms), spec.weights);
  }
  if (spec.type == "wishart_root") {
    if (!(spec.scale > 0.0)) throw ConfigError("law.scale", "must be positive");
    return RadialLaw::wishart_root(PsdMatrix(HermitianMatrix::identity(q, field) * spec.scale), spec.dof);
  }
  if (q != 1 || field != Field::Real) throw ConfigError("law.type", spec.type + " is a q = 1 real law");
  if (spec.type == "two_point") return RadialLaw::two_point(spec.a, spec.b, spec.p_a);
  if (spec.type == "log_normal") return RadialLaw::log_normal(spec.log_mean, spec.log_sd);
  if (spec.type == "uniform") return RadialLaw::uniform(spec.lo, spec.hi);
  throw ConfigError("law.type", "unknown law type \"" + spec.type + "\"");
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) fail("", "config must be a JSON object");
  reject_unknown(j,
                 {"schema_version", "experiment", "name", "q", "field", "law", "p", "mu", "n_steps", "checkpoints",
                  "replicates", "seed", "method", "per_replicate", "statistic", "engine", "compare_group", "pairs",
                  "cases", "axioms", "r1", "r2", "s", "cap", "thresholds", "output"},
                 "");
  ExperimentConfig c;
  if (j.contains("schema_version")) {
    c.schema_version = static_cast<int>(get_int(j.at("schema_version"), "schema_version"));
    if (c.schema_version != kSchemaVersion)
      fail("schema_version", "unsupported version " + std::to_string(c.schema_version));
  }
  if (!j.contains("experiment")) fail("experiment", "missing");
  c.experiment = parse_experiment(get_string(j.at("experiment"), "experiment"));
  if (j.contains("name")) c.name = get_string(j.at("name"), "name");
  if (j.contains("q")) c.q = static_cast<int>(get_int(j.at("q"), "q"));
  if (c.q < 1 || c.q > 16) fail("q", "expected 1 <= q <= 16");
  if (j.contains("field")) c.field = parse_field(j.at("field"), "field");
  if (j.contains("law")) c.law = parse_law(j.at("law"), c.q, c.field);
  else c.law.atoms.push_back(parse_matrix(json(0.0), c.q, c.field, "law.atom"));
  auto to_int = [](const json& v, const std::string& f) { return static_cast<int>(get_int(v, f)); };
  if (j.contains("p")) c.p_grid = get_list<int>(j.at("p"), "p", to_int);
  if (j.contains("mu")) c.mu_grid = get_list<double>(j.at("mu"), "mu", get_double);
  if (j.contains("n_steps")) c.n_steps = to_int(j.at("n_steps"), "n_steps");
  if (j.contains("checkpoints")) c.checkpoints = get_list<int>(j.at("checkpoints"), "checkpoints", to_int);
  if (j.contains("replicates")) c.replicates = get_u64(j.at("replicates"), "replicates");
  if (j.contains("seed")) c.seed = get_u64(j.at("seed"), "seed");
  if (j.contains("method")) c.method = parse_method(j.at("method"), "method");
  if (j.contains("per_replicate")) c.per_replicate = get_bool(j.at("per_replicate"), "per_replicate");
  if (j.contains("statistic")) c.statistic = get_string(j.at("statistic"), "statistic");
  if (j.contains("engine")) c.engine = get_string(j.at("engine"), "engine");
  if (j.contains("compare_group")) c.compare_group = get_bool(j.at("compare_group"), "compare_group");
  if (j.contains("pairs")) {
    const json& pj = j.at("pairs");
    if (!pj.is_array()) fail("pairs", "expected an array of [n, p] pairs");
    for (std::size_t i = 0; i < pj.size(); ++i) {
      const std::string f = "pairs[" + std::to_string(i) + "]";
      if (!pj[i].is_array() || pj[i].size() != 2) fail(f, "expected [n, p]");
      c.pairs.emplace_back(to_int(pj[i][0], f + "[0]"), to_int(pj[i][1], f + "[1]"));
    }
  }
  if (j.contains("cases")) {
    const json& cj = j.at("cases");
    if (!cj.is_array()) fail("cases", "expected an array");
    for (std::size_t i = 0; i < cj.size(); ++i) {
      const std::string f = "cases[" + std::to_string(i) + "]";
      if (!cj[i].is_object()) fail(f, "expected an object");
      reject_unknown(cj[i], {"q", "field", "mu"}, f);
      ConvolveCase cc;
      if (cj[i].contains("q")) cc.q = to_int(cj[i].at("q"), f + ".q");
      if (cj[i].contains("field")) cc.field = parse_field(cj[i].at("field"), f + ".field");
      if (!cj[i].contains("mu")) fail(f + ".mu", "missing");
      cc.mu = get_double(cj[i].at("mu"), f + ".mu");
      c.cases.push_back(cc);
    }
  }
  if (j.contains("axioms"))
    c.axioms = get_list<std::string>(j.at("axioms"), "axioms", get_string);
  if (j.contains("r1")) c.r1 = get_double(j.at("r1"), "r1");
  if (j.contains("r2")) c.r2 = get_double(j.at("r2"), "r2");
  if (j.contains("s")) c.s = get_double(j.at("s"), "s");
  if (j.contains("cap")) c.cap = get_double(j.at("cap"), "cap");
  if (j.contains("thresholds")) c.thresholds = parse_thresholds(j.at("thresholds"));
  if (j.contains("output")) c.output = parse_output(j.at("output"));
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open config");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": invalid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["experiment"] = to_string(c.experiment);
  j["name"] = c.name;
  j["q"] = c.q;
  j["field"] = field_name(c.field);
  j["law"] = law_json(c.law);
  j["p"] = c.p_grid;
  j["mu"] = c.mu_grid;
  j["n_steps"] = c.n_steps;
  j["checkpoints"] = c.checkpoints;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["method"] = method_name(c.method);
  j["per_replicate"] = c.per_replicate;
  j["statistic"] = c.statistic;
  j["engine"] = c.engine;
  j["compare_group"] = c.compare_group;
  json pairs = json::array();
  for (const auto& [n, p] : c.pairs) pairs.push_back({n, p});
  j["pairs"] = pairs;
  json cases = json::array();
  for (const auto& cc : c.cases) cases.push_back({{"q", cc.q}, {"field", field_name(cc.field)}, {"mu", cc.mu}});
  j["cases"] = cases;
  j["axioms"] = c.axioms;
  j["r1"] = c.r1;
  j["r2"] = c.r2;
  j["s"] = c.s;
  j["cap"] = c.cap;
  j["thresholds"] = thresholds_json(c.thresholds);
  j["output"] = {{"dir", c.output.dir},
                 {"prefix", c.output.prefix},
                 {"format", to_string(c.output.format)},
                 {"plot", c.output.plot}};
  return j;
}

void validate(const ExperimentConfig& c) {
  if (c.replicates < 1) fail("replicates", "must be >= 1");
  if (c.n_steps < 0) fail("n_steps", "must be >= 0");
  try {
    (void)normalized_checkpoints(c.checkpoints, c.n_steps);
  } catch (const DomainError& e) {
    fail("checkpoints", e.what());
  }
  try {
    (void)build_law(c.law, c.q, c.field);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail("law", e.what());
  }
  for (std::size_t i = 0; i < c.p_grid.size(); ++i)
    if (c.p_grid[i] < c.q) fail("p[" + std::to_string(i) + "]", "must be >= q");
  for (std::size_t i = 0; i < c.mu_grid.size(); ++i) {
    try {
      BesselParam(c.mu_grid[i], c.q, c.field);
    } catch (const DomainError& e) {
      fail("mu[" + std::to_string(i) + "]", e.what());
    }
  }
  auto need_p = [&] {
    if (c.p_grid.empty()) fail("p", "at least one value is required");
  };
  auto need_mu = [&] {
    if (c.mu_grid.empty()) fail("mu", "at least one value is required");
  };
  switch (c.experiment) {
    case Experiment::WalkGroup:
      need_p();
      break;
    case Experiment::WalkBessel:
      need_mu();
      if (c.compare_group) {
        for (std::size_t i = 0; i < c.mu_grid.size(); ++i) {
          const double p = 2.0 * c.mu_grid[i] / real_dimension(c.field);
          if (std::floor(p) != p || p < c.q)
            fail("mu[" + std::to_string(i) + "]", "compare_group needs 2 mu / d to be an integer p >= q");
        }
      }
      break;
    case Experiment::Convolve:
      if (c.cases.empty()) need_mu();
      for (std::size_t i = 0; i < c.cases.size(); ++i) {
        const std::string f = "cases[" + std::to_string(i) + "]";
        if (c.cases[i].q < 1 || c.cases[i].q > 16) fail(f + ".q", "expected 1 <= q <= 16");
        try {
          BesselParam(c.cases[i].mu, c.cases[i].q, c.cases[i].field);
        } catch (const DomainError& e) {
          fail(f + ".mu", e.what());
        }
      }
      break;
    case Experiment::Kappa:
      need_mu();
      if (c.replicates < 2) fail("replicates", "kappa needs at least two samples");
      break;
    case Experiment::CltCheck: {
      if (c.engine != "group" && c.engine != "bessel") fail("engine", "expected group or bessel");
      if (c.statistic == "weak-law") {
        if (c.engine != "bessel") fail("engine", "weak-law runs on the bessel engine");
      } else {
        CltKind kind;
        try {
          kind = parse_clt_kind(c.statistic);
        } catch (const DomainError& e) {
          fail("statistic", e.what());
        }
        if ((kind == CltKind::Clt1 || kind == CltKind::Clt2) && c.q != 1)
          fail("statistic", c.statistic + " is defined for q = 1");
        if (kind == CltKind::Clt3 && c.field != Field::Real) fail("statistic", "CLT3 limit is real-field only");
        if (kind == CltKind::Clt1 || kind == CltKind::Clt3) {
          need_p();
          if (c.engine != "group") fail("engine", c.statistic + " uses the group engine (p enters the scaling)");
        }
        if (c.engine == "group") need_p();
        if (c.engine == "bessel") need_mu();
      }
      if (c.n_steps < 1) fail("n_steps", "must be >= 1");
      if (c.replicates < 2) fail("replicates", "need at least two replicates");
      break;
    }
    case Experiment::BerryEsseenScan:
      need_p();
      if (c.q != 1) fail("q", "berry-esseen-scan is q = 1 only");
      if (c.checkpoints.size() < 4) fail("checkpoints", "the n grid needs at least four points");
      if (c.checkpoints.front() < 1) fail("checkpoints", "grid values must be >= 1");
      break;
    case Experiment::Axioms: {
      if (c.axioms.empty()) fail("axioms", "list at least one axiom");
      for (std::size_t i = 0; i < c.axioms.size(); ++i) {
        const std::string& a = c.axioms[i];
        if (a != "character" && a != "root_lipschitz_gap" && a != "mu_degeneration")
          fail("axioms[" + std::to_string(i) + "]", "expected character, root_lipschitz_gap or mu_degeneration");
        if (a == "character" && c.q != 1) fail("q", "the character axiom is q = 1 only");
      }
      need_mu();
      if (c.replicates < 2) fail("replicates", "need at least two replicates");
      if (c.r1 < 0.0 || c.r2 < 0.0 || c.s < 0.0) fail("r1", "r1, r2 and s must be >= 0");
      break;
    }
    case Experiment::MomentIdentity:
      if (c.q != 1) fail("q", "moment-identity is q = 1 only");
      if (c.pairs.empty()) fail("pairs", "at least one (n, p) pair is required");
      for (std::size_t i = 0; i < c.pairs.size(); ++i)
        if (c.pairs[i].first < 1 || c.pairs[i].second < 1)
          fail("pairs[" + std::to_string(i) + "]", "n and p must be >= 1");
      if (c.replicates < 2) fail("replicates", "need at least two replicates");
      break;
  }
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

}  // namespace radwalk
