#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "radwalk/bessel_hypergroup.hpp"
#include "radwalk/errors.hpp"
#include "radwalk/harness.hpp"
#include "radwalk/limit_lab.hpp"
#include "radwalk/replicate.hpp"

namespace radwalk {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

class Context {
 public:
  Context(const ExperimentConfig& cfg, const RunOptions& opts, RunRecord& rec) : cfg(cfg), opts(opts), rec(rec) {}

  const ExperimentConfig& cfg;
  const RunOptions& opts;
  RunRecord& rec;

  int workers() const { return std::max(1, opts.workers); }

  StreamFamily family(const std::string& label, std::uint64_t streams) {
    const StreamFamily fam(cfg.seed, fnv1a(label));
    rec.streams.push_back({label, fam.family(), fam.key(), streams});
    return fam;
  }

  void warn(const std::string& message) { rec.warnings.push_back(message); }

  void check_le(const std::string& name, double value, double threshold) {
    rec.checks.push_back({name, value, threshold, "<=", 0.0, value <= threshold});
  }
  void check_ge(const std::string& name, double value, double threshold) {
    rec.checks.push_back({name, value, threshold, ">=", 0.0, value >= threshold});
  }
  void check_in(const std::string& name, double value, double lo, double hi) {
    rec.checks.push_back({name, value, lo, "in", hi, value >= lo && value <= hi});
  }
  /// |estimate - target| <= k SE, recorded as a z-score.
  double check_within(const std::string& name, double estimate, double target, double se) {
    const double z = z_score(estimate, target, se);
    check_le(name, z, cfg.thresholds.se_multiple);
    return z;
  }

  static double z_score(double estimate, double target, double se) {
    const double diff = std::abs(estimate - target);
    if (diff <= 1e-12 * std::max(1.0, std::abs(target))) return 0.0;
    return se > 0.0 ? diff / se : std::numeric_limits<double>::infinity();
  }
};

std::vector<std::string> coord_columns(std::size_t dim) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < dim; ++c) out.push_back("c" + std::to_string(c));
  return out;
}

double trace_of(const HermitianMatrix& h) {
  double t = 0.0;
  for (int i = 0; i < h.q(); ++i) t += h(i, i).real();
  return t;
}

// Combined standard error when the target n m2 itself carries Monte Carlo error.
double m2_target_se(const MomentData& md, int n) {
  return md.exactness == Exactness::MonteCarlo ? n * md.std_error : 0.0;
}

// ---------------------------------------------------------------------------
// Trajectory experiments (walk-group, walk-bessel)

struct TrajectoryBuffer {
  std::size_t reps = 0;
  std::vector<int> steps;
  std::size_t dim = 0;
  std::vector<double> traces;  // reps x steps
  std::vector<double> coords;  // reps x steps x dim, only when kept

  void store(std::size_t i, const WalkTrajectory& t, bool keep_coords) {
    const std::size_t k = steps.size();
    for (std::size_t c = 0; c < k; ++c) {
      traces[i * k + c] = trace_of(t.values[c]);
      if (keep_coords) vectorize_into(t.values[c], std::span<double>(coords.data() + (i * k + c) * dim, dim));
    }
  }
};

TrajectoryBuffer make_buffer(const ExperimentConfig& cfg, std::size_t reps) {
  TrajectoryBuffer b;
  b.reps = reps;
  b.steps = normalized_checkpoints(cfg.checkpoints, cfg.n_steps);
  b.dim = herm_dim(cfg.q, cfg.field);
  b.traces.assign(reps * b.steps.size(), 0.0);
  if (cfg.per_replicate) b.coords.assign(reps * b.steps.size() * b.dim, 0.0);
  return b;
}

// Appends summary rows and m2 additivity checks for one grid value.
json summarize_trajectories(Context& ctx, const TrajectoryBuffer& buf, const std::string& label, double grid_value,
                            const MomentData& md, bool check_m2, Table& summary, Table* per_rep) {
  json rows = json::array();
  const std::size_t k = buf.steps.size();
  for (std::size_t c = 0; c < k; ++c) {
    RunningMoments rm;
    for (std::size_t i = 0; i < buf.reps; ++i) rm.push(buf.traces[i * k + c]);
    const int step = buf.steps[c];
    const double target = step * md.m2;
    const double se = std::hypot(rm.std_error(), m2_target_se(md, step));
    summary.rows.push_back({grid_value, static_cast<double>(step), rm.mean, rm.std_error(), target});
    rows.push_back({{"step", step}, {"mean_trace", rm.mean}, {"se_trace", rm.std_error()}, {"target", target}});
    if (check_m2 && step > 0 && buf.reps > 1)
      ctx.check_within("m2_additivity " + label + " n=" + std::to_string(step), rm.mean, target, se);
  }
  if (per_rep) {
    for (std::size_t i = 0; i < buf.reps; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> row{static_cast<double>(i), grid_value, static_cast<double>(buf.steps[c])};
        for (std::size_t a = 0; a < buf.dim; ++a) row.push_back(buf.coords[(i * k + c) * buf.dim + a]);
        per_rep->rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void run_walk_group(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const RadialLaw law = build_law(cfg.law, cfg.q, cfg.field);
  const MomentData md = moments(law);
  const std::size_t dim = herm_dim(cfg.q, cfg.field);
  Table summary{"summary", {"p", "step", "mean_trace", "se_trace", "target"}, {}};
  Table per_rep{"trajectories", {"replicate", "p", "step"}, {}};
  for (const auto& col : coord_columns(dim)) per_rep.columns.push_back(col);
  json results = json::array();
  for (int p : cfg.p_grid) {
    const std::string label = "walk-group/p=" + std::to_string(p);
    const StreamFamily fam = ctx.family(label, cfg.replicates);
    TrajectoryBuffer buf = make_buffer(cfg, cfg.replicates);
    GroupWalkConfig gc{p, cfg.q, cfg.field, cfg.n_steps, law, cfg.checkpoints, cfg.method};
    for_each_replicate(cfg.replicates, ctx.workers(), [&](std::size_t i) {
      RandomStream rng = fam.stream(i);
      buf.store(i, run_group_walk(gc, rng), cfg.per_replicate);
    });
    json rows = summarize_trajectories(ctx, buf, "p=" + std::to_string(p), p, md, true, summary,
                                       cfg.per_replicate ? &per_rep : nullptr);
    results.push_back({{"p", p}, {"method", resolve_method(cfg.method, p, cfg.q) == WalkMethod::Explicit ? "explicit" : "reduced"}, {"checkpoints", rows}});
  }
  ctx.rec.tables.push_back(std::move(summary));
  if (cfg.per_replicate) ctx.rec.tables.push_back(std::move(per_rep));
  ctx.rec.results["m2"] = md.m2;
  ctx.rec.results["grid"] = results;
}

void run_walk_bessel(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const RadialLaw law = build_law(cfg.law, cfg.q, cfg.field);
  const MomentData md = moments(law);
  const std::size_t dim = herm_dim(cfg.q, cfg.field);
  Table summary{"summary", {"mu", "step", "mean_trace", "se_trace", "target"}, {}};
  Table per_rep{"trajectories", {"replicate", "mu", "step"}, {}};
  for (const auto& col : coord_columns(dim)) per_rep.columns.push_back(col);
  Table comparison{"comparison", {"mu", "p", "ks", "p_value"}, {}};
  json results = json::array();
  for (double mu : cfg.mu_grid) {
    const BesselParam param(mu, cfg.q, cfg.field);
    const std::string tag = "mu=" + num(mu);
    if (!param.lemma_regime())
      ctx.warn(tag + ": mu < 2 rho = " + num(2.0 * param.rho()) +
               "; m2 additivity is only established for mu >= 2 rho, check skipped");
    const StreamFamily fam = ctx.family("walk-bessel/" + tag, cfg.replicates);
    TrajectoryBuffer buf = make_buffer(cfg, cfg.replicates);
    const BesselWalkConfig bc{param, law, cfg.n_steps, cfg.checkpoints};
    for_each_replicate(cfg.replicates, ctx.workers(), [&](std::size_t i) {
      RandomStream rng = fam.stream(i);
      buf.store(i, run_bessel_walk(bc, rng), cfg.per_replicate);
    });
    json entry{{"mu", mu}, {"rho", param.rho()}, {"lemma_regime", param.lemma_regime()}};
    entry["checkpoints"] = summarize_trajectories(ctx, buf, tag, mu, md, param.lemma_regime(), summary,
                                                  cfg.per_replicate ? &per_rep : nullptr);

    if (cfg.compare_group) {
      const int p = static_cast<int>(std::lround(2.0 * mu / param.d()));
      const StreamFamily gfam = ctx.family("walk-bessel/compare/" + tag, cfg.replicates);
      const GroupWalkConfig gc{p, cfg.q, cfg.field, cfg.n_steps, law, {}, WalkMethod::Explicit};
      std::vector<double> group(cfg.replicates);
      for_each_replicate(cfg.replicates, ctx.workers(), [&](std::size_t i) {
        RandomStream rng = gfam.stream(i);
        group[i] = trace_of(run_group_walk(gc, rng).values.back());
      });
      const std::size_t k = buf.steps.size();
      std::vector<double> bessel(cfg.replicates);
      for (std::size_t i = 0; i < cfg.replicates; ++i) bessel[i] = buf.traces[i * k + (k - 1)];
      if (buf.steps.back() != cfg.n_steps) ctx.warn("compare_group uses the last checkpoint");
      const TwoSampleKs ks = ks_two_sample(bessel, group);
      comparison.rows.push_back({mu, static_cast<double>(p), ks.statistic, ks.p_value});
      entry["group_comparison"] = {{"p", p}, {"ks", ks.statistic}, {"p_value", ks.p_value}};
      ctx.check_ge("group_equivalence " + tag + " p=" + std::to_string(p) + " ks_p_value", ks.p_value,
                   cfg.thresholds.ks_p_min);
    }
    results.push_back(entry);
  }
  ctx.rec.tables.push_back(std::move(summary));
  if (cfg.per_replicate) ctx.rec.tables.push_back(std::move(per_rep));
  if (cfg.compare_group) ctx.rec.tables.push_back(std::move(comparison));
  ctx.rec.results["m2"] = md.m2;
  ctx.rec.results["grid"] = results;
}

// ---------------------------------------------------------------------------
// convolve

void run_convolve(Context& ctx) {
  const auto& cfg = ctx.cfg;
  struct Case {
    BesselParam param;
    RadialLaw law;
  };
  std::vector<Case> cases;
  if (cfg.cases.empty()) {
    const RadialLaw law = build_law(cfg.law, cfg.q, cfg.field);
    for (double mu : cfg.mu_grid) cases.push_back({BesselParam(mu, cfg.q, cfg.field), law});
  } else {
    for (const auto& c : cfg.cases)
      cases.push_back({BesselParam(c.mu, c.q, c.field),
                       RadialLaw::wishart_root(PsdMatrix::identity(c.q, c.field), c.q + 1)});
  }
  Table table{"cases",
              {"q", "d", "mu", "draws", "violations", "max_excess", "m1_gap", "m1_gap_se", "m2_gap", "m2_gap_se",
               "ks", "ks_p_value"},
              {}};
  json results = json::array();
  const double slack = cfg.thresholds.support_slack;
  std::uint64_t total_violations = 0, total_draws = 0;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const auto& [param, law] = cases[ci];
    const std::string tag = "q=" + std::to_string(param.q()) + " d=" + std::to_string(param.d()) + " mu=" + num(param.mu());
    const StreamFamily fam = ctx.family("convolve/" + std::to_string(ci) + "/" + tag, cfg.replicates);
    const std::size_t n = cfg.replicates;
    // s is drawn from the law scaled by 2, so (r, s) is not exchangeable.
    std::vector<double> excess(2 * n), m1_gap(n), m2_gap(n), tr_rs(n), tr_sr(n);
    for_each_replicate(n, ctx.workers(), [&](std::size_t i) {
      RandomStream rng = fam.stream(i);
      const PsdMatrix r = sample_law(law, rng);
      const PsdMatrix s(sample_law(law, rng).base() * 2.0);
      const PsdMatrix t = convolve_points(r, s, param, rng);
      const PsdMatrix u = convolve_points(s, r, param, rng);
      const double bound = frob_norm(r) + frob_norm(s);
      excess[2 * i] = frob_norm(t) - bound;
      excess[2 * i + 1] = frob_norm(u) - bound;
      m1_gap[i] = frob_norm(t) - bound;
      tr_rs[i] = trace_of(t.squared());
      tr_sr[i] = trace_of(u.squared());
      m2_gap[i] = tr_rs[i] - trace_of(r.squared()) - trace_of(s.squared());
    });
    std::uint64_t violations = 0;
    double max_excess = -std::numeric_limits<double>::infinity();
    for (double e : excess) {
      if (e > slack) ++violations;
      max_excess = std::max(max_excess, e);
    }
    RunningMoments m1, m2;
    for (std::size_t i = 0; i < n; ++i) {
      m1.push(m1_gap[i]);
      m2.push(m2_gap[i]);
    }
    const TwoSampleKs ks = ks_two_sample(tr_rs, tr_sr);
    total_violations += violations;
    total_draws += 2 * n;
    table.rows.push_back({static_cast<double>(param.q()), static_cast<double>(param.d()), param.mu(),
                          static_cast<double>(2 * n), static_cast<double>(violations), max_excess, m1.mean,
                          m1.std_error(), m2.mean, m2.std_error(), ks.statistic, ks.p_value});
    results.push_back({{"q", param.q()},
                       {"d", param.d()},
                       {"mu", param.mu()},
                       {"law", law.name()},
                       {"draws", 2 * n},
                       {"violations", violations},
                       {"max_excess", max_excess},
                       {"m1_gap", m1.mean},
                       {"m1_gap_se", m1.std_error()},
                       {"m2_gap", m2.mean},
                       {"m2_gap_se", m2.std_error()},
                       {"commutativity_ks", ks.statistic},
                       {"commutativity_p_value", ks.p_value}});
    // One-sided: E|t| - E|r| - E|s| <= k SE.
    const double m1_z = m1.std_error() > 0.0 ? m1.mean / m1.std_error() : (m1.mean > 0.0 ? kNaN : 0.0);
    ctx.check_le("m1_subadditivity " + tag, std::isnan(m1_z) ? std::numeric_limits<double>::infinity() : m1_z,
                 cfg.thresholds.se_multiple);
    ctx.check_ge("commutativity " + tag + " ks_p_value", ks.p_value, cfg.thresholds.ks_p_min);
    if (param.lemma_regime()) ctx.check_within("m2_additivity " + tag, m2.mean, 0.0, m2.std_error());
    else ctx.warn(tag + ": mu < 2 rho, one-step m2 additivity not checked");
  }
  ctx.check_le("support_bound violations", static_cast<double>(total_violations), 0.0);
  ctx.rec.tables.push_back(std::move(table));
  ctx.rec.results["cases"] = results;
  ctx.rec.results["total_draws"] = total_draws;
  ctx.rec.results["total_violations"] = total_violations;
}

// ---------------------------------------------------------------------------
// kappa

std::string method_name(ContractionMethod m) {
  switch (m) {
    case ContractionMethod::GaussianEnvelope:
      return "gaussian-envelope";
    case ContractionMethod::UniformBall:
      return "uniform-ball";
    case ContractionMethod::MatrixBeta:
      return "matrix-beta";
  }
  return "?";
}

void run_kappa(Context& ctx) {
  const auto& cfg = ctx.cfg;
  Table table{"kappa", {"mu", "q", "d", "exponent", "estimate", "std_error", "quadrature", "contraction_ks"}, {}};
  Table plot{"plot", {"x", "y", "y_err"}, {}};
  json results = json::array();
  for (double mu : cfg.mu_grid) {
    const BesselParam param(mu, cfg.q, cfg.field);
    const std::string tag = "mu=" + num(mu);
    const StreamFamily fam = ctx.family("kappa/" + tag, 1);
    RandomStream rng = fam.stream(0);
    const KappaEstimate est = kappa_mu(param, cfg.replicates, rng);
    if (param.exponent() < 0.0)
      ctx.warn(tag + ": mu - rho < 0, the importance weights are unbounded");
    json entry{{"mu", mu},
               {"exponent", param.exponent()},
               {"estimate", est.estimate},
               {"std_error", est.std_error},
               {"proposal", method_name(est.proposal)},
               {"sampler", method_name(contraction_method(param))}};
    double ks = kNaN;
    if (est.quadrature) {
      entry["quadrature"] = *est.quadrature;
      ctx.check_within("kappa_vs_quadrature " + tag, est.estimate, *est.quadrature, est.std_error);
    }
    if (cfg.q == 1) {
      const StreamFamily cfam = ctx.family("kappa/contraction/" + tag, cfg.replicates);
      std::vector<double> sq(cfg.replicates);
      for_each_replicate(cfg.replicates, ctx.workers(), [&](std::size_t i) {
        RandomStream r = cfam.stream(i);
        sq[i] = std::norm(sample_contraction(param, r).matrix()(0, 0));
      });
      std::sort(sq.begin(), sq.end());
      ks = ks_distance(sq, [&](double x) { return contraction_square_cdf_1d(param, x); });
      entry["contraction_ks"] = ks;
      ctx.check_le("contraction_ks " + tag, ks, cfg.thresholds.contraction_ks_max);
    }
    table.rows.push_back({mu, static_cast<double>(cfg.q), static_cast<double>(param.d()), param.exponent(),
                          est.estimate, est.std_error, est.quadrature.value_or(kNaN), ks});
    plot.rows.push_back({mu, est.estimate, est.std_error});
    results.push_back(entry);
  }
  ctx.rec.tables.push_back(std::move(table));
  ctx.rec.plot = std::move(plot);
  ctx.rec.results["grid"] = results;
}

// ---------------------------------------------------------------------------
// clt-check

void regime_warnings(Context& ctx, CltKind kind, bool bessel, int n, double p_or_mu) {
  const double nn = n;
  if (kind == CltKind::Clt2 || kind == CltKind::Clt4) {
    if (nn * nn / p_or_mu > 0.1)
      ctx.warn(std::string(bessel ? "n^2/mu" : "n^2/p") + " = " + num(nn * nn / p_or_mu) +
               " > 0.1; the Gaussian limit needs this ratio to vanish");
  } else if (kind == CltKind::Clt1) {
    if (nn / std::pow(p_or_mu, 3) < 10.0)
      ctx.warn("n/p^3 = " + num(nn / std::pow(p_or_mu, 3)) + " is small; the N(0,1) limit needs n/p^3 -> infinity");
  } else if (kind == CltKind::Clt3) {
    if (nn / std::pow(p_or_mu, 4) < 10.0)
      ctx.warn("n/p^4 = " + num(nn / std::pow(p_or_mu, 4)) +
               " is small; the N(0,T^2) limit is established for n/p^4 -> infinity");
  }
}

void run_weak_law(Context& ctx, const RadialLaw& law, const MomentData& md) {
  const auto& cfg = ctx.cfg;
  const double mu = cfg.mu_grid.front();
  const BesselParam param(mu, cfg.q, cfg.field);
  const int n = cfg.n_steps;
  if (mu < std::pow(static_cast<double>(n), 3))
    ctx.warn("mu = " + num(mu) + " < n^3; the weak law is stated for mu_n = n^3");
  const StreamFamily fam = ctx.family("clt-check/weak-law/mu=" + num(mu), cfg.replicates);
  const BesselWalkConfig bc{param, law, n, {}};
  std::vector<double> dev(cfg.replicates);
  const HermitianMatrix center = md.sigma2.base() * static_cast<double>(n);
  for_each_replicate(cfg.replicates, ctx.workers(), [&](std::size_t i) {
    RandomStream rng = fam.stream(i);
    const HermitianMatrix s2 = run_bessel_walk(bc, rng).values.back();
    dev[i] = frob_norm((s2 - center) * (1.0 / n));
  });
  std::size_t above = 0;
  Table table{"deviation", {"replicate", "norm"}, {}};
  for (std::size_t i = 0; i < dev.size(); ++i) {
    if (dev[i] > cfg.thresholds.weak_law_eps) ++above;
    table.rows.push_back({static_cast<double>(i), dev[i]});
  }
  const double fraction = static_cast<double>(above) / static_cast<double>(dev.size());
  ctx.check_le("weak_law fraction above eps", fraction, cfg.thresholds.weak_law_max_fraction);
  ctx.rec.tables.push_back(std::move(table));
  ctx.rec.results["mu"] = mu;
  ctx.rec.results["n"] = n;
  ctx.rec.results["fraction_above"] = fraction;
}

void run_clt_check(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const RadialLaw law = build_law(cfg.law, cfg.q, cfg.field);
  const MomentData md = moments(law);
  if (cfg.statistic == "weak-law") return run_weak_law(ctx, law, md);

  const CltKind kind = parse_clt_kind(cfg.statistic);
  const bool bessel = cfg.engine == "bessel";
  const int n = cfg.n_steps;
  const double p_or_mu = bessel ? cfg.mu_grid.front() : static_cast<double>(cfg.p_grid.front());
  regime_warnings(ctx, kind, bessel, n, p_or_mu);
  const std::size_t reps = cfg.replicates;
  const std::string label = "clt-check/" + cfg.engine + "/" + to_string(kind) + "/" + num(p_or_mu);
  const StreamFamily fam = ctx.family(label, reps);

  CltStatistic stat;
  std::vector<double> scalar_raw;
  if (!bessel && cfg.q == 1) {
    scalar_raw.assign(reps, 0.0);
    const int p = cfg.p_grid.front();
    const int cps[1] = {n};
    for_each_replicate(reps, ctx.workers(), [&](std::size_t i) {
      RandomStream rng = fam.stream(i);
      run_scalar_group_walk(law, p, cfg.field, cps, cfg.method, rng, std::span<double>(&scalar_raw[i], 1));
    });
    stat = normalize_clt(kind, scalar_raw, n, p_or_mu, md);
  } else {
    std::vector<HermitianMatrix> raw(reps, HermitianMatrix::zero(cfg.q, cfg.field));
    if (bessel) {
      const BesselParam param(p_or_mu, cfg.q, cfg.field);
      if (!param.lemma_regime()) ctx.warn("mu < 2 rho; the comparison estimates behind the Bessel CLT need mu >= 2 rho");
      const BesselWalkConfig bc{param, law, n, {}};
      for_each_replicate(reps, ctx.workers(), [&](std::size_t i) {
        RandomStream rng = fam.stream(i);
        raw[i] = run_bessel_walk(bc, rng).values.back();
      });
    } else {
      const GroupWalkConfig gc{cfg.p_grid.front(), cfg.q, cfg.field, n, law, {}, cfg.method};
      for_each_replicate(reps, ctx.workers(), [&](std::size_t i) {
        RandomStream rng = fam.stream(i);
        raw[i] = run_group_walk(gc, rng).values.back();
      });
    }
    for (const auto& r : raw) scalar_raw.push_back(trace_of(r));
    stat = normalize_clt(kind, raw, n, p_or_mu, md);
  }

  // Limit covariance on HermVector coordinates.
  RealMatrix limit;
  switch (kind) {
    case CltKind::Clt1:
      limit = RealMatrix(1, 1, 1.0);
      break;
    case CltKind::Clt2:
    case CltKind::Clt4:
      limit = md.sigma2_image_cov;
      break;
    case CltKind::Clt3:
      limit = t_squared_limit(md.sigma2);
      break;
  }

  const std::size_t dim = stat.dim();
  EmpiricalSummary summary = summarize(stat);
  json res;
  res["kind"] = to_string(kind);
  res["engine"] = cfg.engine;
  res["n"] = n;
  res[bessel ? "mu" : "p"] = p_or_mu;
  res["sigma2"] = vectorize_herm(md.sigma2.base()).values;
  res["mean"] = summary.mean.values;

  Table stats{"statistic", {"replicate"}, {}};
  for (const auto& col : coord_columns(dim)) stats.columns.push_back(col);
  for (std::size_t i = 0; i < stat.count(); ++i) {
    std::vector<double> row{static_cast<double>(i)};
    for (double v : stat.sample(i)) row.push_back(v);
    stats.rows.push_back(std::move(row));
  }

  if (dim == 1) {
    const double var = limit(0, 0);
    std::vector<double> sorted = stat.values;
    std::sort(sorted.begin(), sorted.end());
    const double ks = ks_distance(sorted, [var](double x) { return normal_cdf(x, var); });
    summary.ks_distance = ks;
    res["limit_variance"] = var;
    res["empirical_variance"] = summary.covariance(0, 0);
    res["ks_distance"] = ks;
    ctx.check_le(to_string(kind) + " ks_distance", ks, cfg.thresholds.ks_max);
    if (kind == CltKind::Clt1) {
      // Diagnostic: distance of d p |S|^2 / (n sigma^2) to chi^2_{d p}, the fixed-p limit.
      const double dp = real_dimension(cfg.field) * p_or_mu;
      std::vector<double> chi(scalar_raw.size());
      for (std::size_t i = 0; i < chi.size(); ++i) chi[i] = dp * scalar_raw[i] / (n * md.m2);
      std::sort(chi.begin(), chi.end());
      const double d = ks_distance(chi, [dp](double x) { return chi2_cdf(dp, x); });
      summary.sup_chi2_distance = d;
      res["chi2_ks_distance"] = d;
      // Distance between the standardized chi^2_{dp} law and N(0,1).
      double sup = 0.0;
      for (int k = -8000; k <= 8000; ++k) {
        const double x = k * 1e-3;
        const double y = dp + x * std::sqrt(2.0 * dp);
        sup = std::max(sup, std::abs(chi2_cdf(dp, std::max(0.0, y)) - normal_cdf(x)));
      }
      res["standardized_chi2_vs_normal"] = sup;
    }
  } else {
    const CovarianceEstimate est = empirical_cov(stat.values, dim);
    double max_z = 0.0;
    json entries = json::array();
    Table cov{"covariance", {"a", "b", "empirical", "std_error", "limit", "z"}, {}};
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = a; b < dim; ++b) {
        const double z = Context::z_score(est.covariance(a, b), limit(a, b), est.std_error(a, b));
        max_z = std::max(max_z, z);
        cov.rows.push_back({static_cast<double>(a), static_cast<double>(b), est.covariance(a, b),
                            est.std_error(a, b), limit(a, b), z});
        entries.push_back({{"a", a},
                           {"b", b},
                           {"empirical", est.covariance(a, b)},
                           {"std_error", est.std_error(a, b)},
                           {"limit", limit(a, b)}});
      }
    }
    res["covariance"] = entries;
    ctx.check_le(to_string(kind) + " covariance max |z|", max_z, cfg.thresholds.se_multiple);
    ctx.rec.tables.push_back(std::move(cov));
    if (stat.count() > 10 * dim * dim) {
      try {
        const MardiaResult m = mardia_tests(stat.values, dim);
        res["mardia"] = {{"skew", m.skew},
                         {"kurt", m.kurt},
                         {"skew_statistic", m.skew_statistic},
                         {"kurt_z", m.kurt_z},
                         {"skew_p_value", m.skew_p_value},
                         {"kurt_p_value", m.kurt_p_value}};
        ctx.check_ge("mardia skew p_value", m.skew_p_value, cfg.thresholds.mardia_level);
        ctx.check_ge("mardia kurtosis p_value", m.kurt_p_value, cfg.thresholds.mardia_level);
      } catch (const DegenerateData& e) {
        ctx.warn(std::string("Mardia tests skipped: ") + e.what());
      }
    } else {
      ctx.warn("too few replicates for Mardia tests (need more than 10 dim^2)");
    }
  }
  ctx.rec.tables.push_back(std::move(stats));
  ctx.rec.results = res;
}

// ---------------------------------------------------------------------------
// berry-esseen-scan

void run_berry_esseen(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const RadialLaw law = build_law(cfg.law, cfg.q, cfg.field);
  const int p = cfg.p_grid.front();
  const StreamFamily fam = ctx.family("berry-esseen-scan/p=" + std::to_string(p), cfg.replicates);
  const RateFit fit = berry_esseen_scan(law, p, cfg.checkpoints, cfg.replicates, fam, ctx.workers(), cfg.method);
  Table table{"scan", {"n", "ks", "flagged", "noise_floor"}, {}};
  Table plot{"plot", {"x", "y", "y_err"}, {}};
  json points = json::array();
  const double sd = 1.0 / std::sqrt(static_cast<double>(cfg.replicates));
  for (const auto& pt : fit.points) {
    table.rows.push_back({pt.x, pt.distance, pt.flagged ? 1.0 : 0.0, fit.noise_floor});
    if (pt.distance > 0.0) plot.rows.push_back({std::log(pt.x), std::log(pt.distance), sd / pt.distance});
    points.push_back({{"n", pt.x}, {"ks", pt.distance}, {"flagged", pt.flagged}});
  }
  ctx.rec.results["p"] = p;
  ctx.rec.results["points"] = points;
  ctx.rec.results["noise_floor"] = fit.noise_floor;
  if (fit.slope) {
    ctx.rec.results["slope"] = *fit.slope;
    ctx.rec.results["slope_std_error"] = fit.slope_std_error;
    ctx.rec.results["intercept"] = fit.intercept;
  } else {
    ctx.rec.results["slope"] = nullptr;
    ctx.warn("fewer than two points above the noise floor; slope undefined");
  }
  ctx.check_le("berry_esseen slope", fit.slope.value_or(kNaN), cfg.thresholds.slope_max);
  ctx.rec.tables.push_back(std::move(table));
  ctx.rec.plot = std::move(plot);
}

// ---------------------------------------------------------------------------
// axioms

void run_axioms(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const double mu = cfg.mu_grid.front();
  const BesselParam param(mu, cfg.q, cfg.field);
  Table table{"axioms", {"axiom", "mu", "value", "std_error", "reference"}, {}};
  json res = json::object();
  const HermitianMatrix identity = HermitianMatrix::identity(cfg.q, cfg.field);

  for (std::size_t ai = 0; ai < cfg.axioms.size(); ++ai) {
    const std::string& axiom = cfg.axioms[ai];
    if (axiom == "character") {
      const StreamFamily fam = ctx.family("axioms/character", cfg.replicates);
      const PsdMatrix r1 = PsdMatrix::scalar(cfg.r1, cfg.field);
      const PsdMatrix r2 = PsdMatrix::scalar(cfg.r2, cfg.field);
      std::vector<double> values(cfg.replicates);
      for_each_replicate(cfg.replicates, ctx.workers(), [&](std::size_t i) {
        RandomStream rng = fam.stream(i);
        const PsdMatrix t = convolve_points(r1, r2, param, rng);
        values[i] = bessel_character_1d(mu, t(0, 0).real(), cfg.s);
      });
      RunningMoments rm;
      for (double v : values) rm.push(v);
      const double target = bessel_character_1d(mu, cfg.r1, cfg.s) * bessel_character_1d(mu, cfg.r2, cfg.s);
      ctx.check_within("character multiplicativity", rm.mean, target, rm.std_error());
      table.rows.push_back({static_cast<double>(ai), mu, rm.mean, rm.std_error(), target});
      res["character"] = {{"mean", rm.mean}, {"std_error", rm.std_error()}, {"product", target}};
    } else if (axiom == "root_lipschitz_gap" || axiom == "mu_degeneration") {
      const bool walk = axiom == "root_lipschitz_gap";
      const RadialLaw law = build_law(cfg.law, cfg.q, cfg.field);
      double cap = cfg.cap;
      if (cap <= 0.0)
        cap = walk ? cfg.n_steps * moments(law).m2 : cfg.q * (cfg.r1 * cfg.r1 + cfg.r2 * cfg.r2);
      const ClippedQuadratic f{identity, cap};
      GapEstimate gaps[2];
      const double mus[2] = {mu, 4.0 * mu};
      for (int k = 0; k < 2; ++k) {
        const BesselParam pk(mus[k], cfg.q, cfg.field);
        if (!pk.lemma_regime()) ctx.warn(axiom + ": mu = " + num(mus[k]) + " < 2 rho");
        const StreamFamily fam = ctx.family("axioms/" + axiom + "/mu=" + num(mus[k]), cfg.replicates);
        if (walk) {
          gaps[k] = root_lipschitz_gap(law, pk, cfg.n_steps, f, cfg.replicates, fam, ctx.workers());
        } else {
          const PsdMatrix r(identity * cfg.r1), s(identity * cfg.r2);
          gaps[k] = point_convolution_gap(r, s, pk, f, cfg.replicates, fam, ctx.workers());
        }
        table.rows.push_back({static_cast<double>(ai), mus[k], gaps[k].gap, gaps[k].std_error, kNaN});
      }
      const double ratio = gaps[1].gap > 0.0 ? gaps[0].gap / gaps[1].gap : std::numeric_limits<double>::infinity();
      // Delta-method standard error of the ratio.
      const double ratio_se =
          gaps[0].gap > 0.0 && gaps[1].gap > 0.0
              ? ratio * std::hypot(gaps[0].std_error / gaps[0].gap, gaps[1].std_error / gaps[1].gap)
              : kNaN;
      ctx.check_in(axiom + " ratio mu/4mu", ratio, cfg.thresholds.ratio_lo, cfg.thresholds.ratio_hi);
      json entry{{"cap", cap}, {"lipschitz", f.lipschitz()}, {"ratio", ratio}, {"ratio_std_error", ratio_se}};
      json gj = json::array();
      for (int k = 0; k < 2; ++k)
        gj.push_back({{"mu", mus[k]},
                      {"gap", gaps[k].gap},
                      {"std_error", gaps[k].std_error},
                      {"hypergroup_mean", gaps[k].hypergroup_mean},
                      {"semigroup_mean", gaps[k].semigroup_mean}});
      entry["gaps"] = gj;
      res[axiom] = entry;
    }
  }
  ctx.rec.tables.push_back(std::move(table));
  ctx.rec.results = res;
}

// ---------------------------------------------------------------------------
// moment-identity

void run_moment_identity(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const RadialLaw law = build_law(cfg.law, cfg.q, cfg.field);
  const MomentData md = moments(law);
  Table table{"moment_identity", {"n", "p", "empirical", "std_error", "rhs", "z"}, {}};
  json results = json::array();
  for (const auto& [n, p] : cfg.pairs) {
    const std::string tag = "n=" + std::to_string(n) + " p=" + std::to_string(p);
    const StreamFamily fam = ctx.family("moment-identity/" + tag, cfg.replicates);
    std::vector<double> raw(cfg.replicates);
    const int cps[1] = {n};
    for_each_replicate(cfg.replicates, ctx.workers(), [&](std::size_t i) {
      RandomStream rng = fam.stream(i);
      run_scalar_group_walk(law, p, cfg.field, cps, cfg.method, rng, std::span<double>(&raw[i], 1));
    });
    RunningMoments rm;
    const double center = n * md.m2;
    for (double x : raw) rm.push((x - center) * (x - center));
    const double rhs = moment_identity_rhs(n, p, md);
    const double z = ctx.check_within("moment_identity " + tag, rm.mean, rhs, rm.std_error());
    table.rows.push_back({static_cast<double>(n), static_cast<double>(p), rm.mean, rm.std_error(), rhs, z});
    results.push_back({{"n", n}, {"p", p}, {"empirical", rm.mean}, {"std_error", rm.std_error()}, {"rhs", rhs}});
  }
  ctx.rec.tables.push_back(std::move(table));
  ctx.rec.results["m2"] = md.m2;
  ctx.rec.results["m4"] = md.m4;
  ctx.rec.results["pairs"] = results;
}

}  // namespace

bool RunRecord::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

RunRecord run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = cfg;
  rec.hash = config_hash(cfg);
  Context ctx(cfg, opts, rec);
  switch (cfg.experiment) {
    case Experiment::WalkGroup:
      run_walk_group(ctx);
      break;
    case Experiment::WalkBessel:
      run_walk_bessel(ctx);
      break;
    case Experiment::Convolve:
      run_convolve(ctx);
      break;
    case Experiment::Kappa:
      run_kappa(ctx);
      break;
    case Experiment::CltCheck:
      run_clt_check(ctx);
      break;
    case Experiment::BerryEsseenScan:
      run_berry_esseen(ctx);
      break;
    case Experiment::Axioms:
      run_axioms(ctx);
      break;
    case Experiment::MomentIdentity:
      run_moment_identity(ctx);
      break;
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace radwalk
