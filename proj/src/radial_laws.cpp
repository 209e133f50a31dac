#include "radwalk/radial_laws.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "radwalk/errors.hpp"
#include "radwalk/random_matrix.hpp"

namespace radwalk {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw DomainError("radial law: " + message);
}

// Fixed stream for Monte Carlo moment tables so they are reproducible.
constexpr std::uint64_t kMomentStreamKey = 0x6d6f6d656e747321ull;

struct ScalarMoments {
  double m[5];  // m[k] = E s^k, k = 0..4
};

ScalarMoments scalar_moments(const RadialLaw::Variant& v) {
  ScalarMoments out{};
  for (int k = 0; k <= 4; ++k) {
    double mk = 0.0;
    if (const auto* t = std::get_if<ScalarTwoPoint>(&v)) {
      mk = t->p_a * std::pow(t->a, k) + (1.0 - t->p_a) * std::pow(t->b, k);
    } else if (const auto* l = std::get_if<ScalarLogNormal>(&v)) {
      mk = std::exp(k * l->log_mean + 0.5 * k * k * l->log_sd * l->log_sd);
    } else if (const auto* u = std::get_if<ScalarUniform>(&v)) {
      mk = (std::pow(u->hi, k + 1) - std::pow(u->lo, k + 1)) / ((k + 1) * (u->hi - u->lo));
    }
    out.m[k] = mk;
  }
  return out;
}

MomentData atomic_moments(const std::vector<PsdMatrix>& atoms, const std::vector<double>& weights) {
  const int q = atoms.front().q();
  const Field field = atoms.front().field();
  const std::size_t dim = herm_dim(q, field);

  MomentData md;
  HermitianMatrix sigma2 = HermitianMatrix::zero(q, field);
  std::vector<HermVector> squares;
  std::vector<double> mean(dim, 0.0);
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    const double w = weights[a];
    const double norm = frob_norm(atoms[a]);
    md.m1 += w * norm;
    md.m2 += w * norm * norm;
    md.m3 += w * norm * norm * norm;
    md.m4 += w * norm * norm * norm * norm;
    const HermitianMatrix sq = atoms[a].squared();
    sigma2 += w * sq;
    squares.push_back(vectorize_herm(sq));
    for (std::size_t i = 0; i < dim; ++i) mean[i] += w * squares.back().values[i];
  }
  md.sigma2 = clamp_psd(sigma2);
  md.sigma2_image_cov = RealMatrix(dim, dim);
  for (std::size_t a = 0; a < atoms.size(); ++a)
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j)
        md.sigma2_image_cov(i, j) += weights[a] * (squares[a].values[i] - mean[i]) * (squares[a].values[j] - mean[j]);
  md.exactness = Exactness::Analytic;
  return md;
}

MomentData wishart_moments(const RadialLaw& law, std::size_t n_samples) {
  const int q = law.q();
  const Field field = law.field();
  const std::size_t dim = herm_dim(q, field);
  RandomStream rng(kMomentStreamKey, 0);

  // Welford accumulators for |s|^k and for vec(s^2).
  std::array<double, 4> mean_k{}, m2_k{};
  std::vector<double> mean(dim, 0.0), delta(dim), coords(dim);
  RealMatrix comoment(dim, dim);
  for (std::size_t n = 1; n <= n_samples; ++n) {
    const HermitianMatrix w = sample_law_squared(law, rng);
    const double tr = std::max(trace(w), 0.0);
    const double norm = std::sqrt(tr);
    double power = 1.0;
    for (int k = 0; k < 4; ++k) {
      power *= norm;
      const double d = power - mean_k[k];
      mean_k[k] += d / static_cast<double>(n);
      m2_k[k] += d * (power - mean_k[k]);
    }
    vectorize_into(w, coords);
    for (std::size_t i = 0; i < dim; ++i) {
      delta[i] = coords[i] - mean[i];
      mean[i] += delta[i] / static_cast<double>(n);
    }
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) comoment(i, j) += delta[i] * (coords[j] - mean[j]);
  }

  MomentData md;
  md.m1 = mean_k[0];
  md.m2 = mean_k[1];
  md.m3 = mean_k[2];
  md.m4 = mean_k[3];
  const double nd = static_cast<double>(n_samples);
  for (int k = 0; k < 4; ++k) md.moment_std_errors[k] = std::sqrt(m2_k[k] / (nd - 1.0) / nd);
  md.sigma2 = clamp_psd(devectorize_herm(mean, q, field));
  md.sigma2_image_cov = RealMatrix(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      md.sigma2_image_cov(i, j) = 0.5 * (comoment(i, j) + comoment(j, i)) / (nd - 1.0);
  md.exactness = Exactness::MonteCarlo;
  md.n_samples = n_samples;
  md.std_error = md.moment_std_errors[1];
  return md;
}

}  // namespace

RadialLaw::RadialLaw(Variant v, int q, Field field) : variant_(std::move(v)), q_(q), field_(field) {}

RadialLaw RadialLaw::point_mass(PsdMatrix atom) {
  const int q = atom.q();
  const Field f = atom.field();
  return RadialLaw(PointMass{std::move(atom)}, q, f);
}

RadialLaw RadialLaw::mixture(std::vector<PsdMatrix> atoms, std::vector<double> weights) {
  require(!atoms.empty(), "mixture needs at least one atom");
  require(atoms.size() == weights.size(), "mixture atoms and weights differ in length");
  const int q = atoms.front().q();
  const Field f = atoms.front().field();
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    require(atoms[i].q() == q && atoms[i].field() == f, "mixture atoms must share q and field");
    require(weights[i] >= 0.0 && std::isfinite(weights[i]), "mixture weights must be nonnegative");
    total += weights[i];
  }
  require(std::abs(total - 1.0) <= 1e-12, "mixture weights must sum to 1 (got " + std::to_string(total) + ")");
  std::vector<double> cumulative(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
  cumulative.back() = 1.0;
  RadialLaw law(FiniteMixture{std::move(atoms), std::move(weights)}, q, f);
  law.cumulative_ = std::move(cumulative);
  return law;
}

RadialLaw RadialLaw::two_point(double a, double b, double p_a) {
  require(a >= 0.0 && b >= 0.0, "two-point atoms must be nonnegative");
  require(p_a >= 0.0 && p_a <= 1.0, "two-point probability must lie in [0, 1]");
  return RadialLaw(ScalarTwoPoint{a, b, p_a}, 1, Field::Real);
}

RadialLaw RadialLaw::log_normal(double log_mean, double log_sd) {
  require(std::isfinite(log_mean) && log_sd >= 0.0 && std::isfinite(log_sd), "log-normal needs finite mean, sd >= 0");
  return RadialLaw(ScalarLogNormal{log_mean, log_sd}, 1, Field::Real);
}

RadialLaw RadialLaw::uniform(double lo, double hi) {
  require(lo >= 0.0 && hi > lo && std::isfinite(hi), "uniform law needs 0 <= lo < hi");
  return RadialLaw(ScalarUniform{lo, hi}, 1, Field::Real);
}

RadialLaw RadialLaw::wishart_root(PsdMatrix scale, int dof) {
  const int q = scale.q();
  require(dof >= q, "Wishart root needs dof >= q");
  const Field f = scale.field();
  Matrix root = psd_sqrt(scale).matrix();
  RadialLaw law(WishartRoot{std::move(scale), dof}, q, f);
  law.scale_root_ = std::move(root);
  return law;
}

std::string RadialLaw::name() const {
  std::ostringstream os;
  os.precision(6);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointMass>) os << "point_mass(q=" << q_ << ")";
        else if constexpr (std::is_same_v<T, FiniteMixture>) os << "mixture(" << v.atoms.size() << " atoms, q=" << q_ << ")";
        else if constexpr (std::is_same_v<T, ScalarTwoPoint>) os << "two_point(" << v.a << "," << v.b << "," << v.p_a << ")";
        else if constexpr (std::is_same_v<T, ScalarLogNormal>) os << "log_normal(" << v.log_mean << "," << v.log_sd << ")";
        else if constexpr (std::is_same_v<T, ScalarUniform>) os << "uniform(" << v.lo << "," << v.hi << ")";
        else os << "wishart_root(dof=" << v.dof << ", q=" << q_ << ")";
      },
      variant_);
  return os.str();
}

double sample_scalar(const RadialLaw& law, RandomStream& rng) {
  const auto& v = law.variant_;
  if (const auto* t = std::get_if<ScalarTwoPoint>(&v)) return rng.uniform() < t->p_a ? t->a : t->b;
  if (const auto* l = std::get_if<ScalarLogNormal>(&v)) return std::exp(l->log_mean + l->log_sd * rng.normal());
  if (const auto* u = std::get_if<ScalarUniform>(&v)) return u->lo + (u->hi - u->lo) * rng.uniform();
  if (law.q() != 1) throw ShapeMismatch("sample_scalar requires q = 1, law has q = " + std::to_string(law.q()));
  if (const auto* p = std::get_if<PointMass>(&v)) return p->atom(0, 0).real();
  if (const auto* m = std::get_if<FiniteMixture>(&v)) {
    const double u = rng.uniform();
    const auto it = std::upper_bound(law.cumulative_.begin(), law.cumulative_.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - law.cumulative_.begin()), m->atoms.size() - 1);
    return m->atoms[idx](0, 0).real();
  }
  const auto& w = std::get<WishartRoot>(v);
  double s = 0.0;
  for (int k = 0; k < w.dof; ++k) s += std::norm(gaussian_entry(law.field(), rng));
  return std::sqrt(w.scale(0, 0).real() * s);
}

HermitianMatrix sample_law_squared(const RadialLaw& law, RandomStream& rng) {
  if (const auto* w = std::get_if<WishartRoot>(&law.variant_)) {
    const Matrix g = gaussian_matrix(w->dof, law.q(), law.field(), rng) * law.scale_root_;
    return HermitianMatrix(adjoint_times(g, g), law.field());
  }
  return sample_law(law, rng).squared();
}

PsdMatrix sample_law(const RadialLaw& law, RandomStream& rng) {
  const auto& v = law.variant_;
  if (const auto* p = std::get_if<PointMass>(&v)) return p->atom;
  if (const auto* m = std::get_if<FiniteMixture>(&v)) {
    const double u = rng.uniform();
    const auto it = std::upper_bound(law.cumulative_.begin(), law.cumulative_.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - law.cumulative_.begin()), m->atoms.size() - 1);
    return m->atoms[idx];
  }
  if (std::holds_alternative<WishartRoot>(v)) return psd_sqrt_of(sample_law_squared(law, rng));
  return PsdMatrix::scalar(sample_scalar(law, rng), law.field());
}

double MomentData::sigma4() const {
  const double s = sigma2(0, 0).real();
  return s * s;
}

MomentData moments(const RadialLaw& law, std::size_t mc_samples) {
  const auto& v = law.variant();
  if (const auto* p = std::get_if<PointMass>(&v)) return atomic_moments({p->atom}, {1.0});
  if (const auto* m = std::get_if<FiniteMixture>(&v)) return atomic_moments(m->atoms, m->weights);
  if (std::holds_alternative<WishartRoot>(v)) {
    if (mc_samples < 2) throw DomainError("moments: Monte Carlo needs at least 2 samples");
    return wishart_moments(law, mc_samples);
  }
  const ScalarMoments sm = scalar_moments(v);
  MomentData md;
  md.m1 = sm.m[1];
  md.m2 = sm.m[2];
  md.m3 = sm.m[3];
  md.m4 = sm.m[4];
  md.sigma2 = PsdMatrix::scalar(sm.m[2]);
  md.sigma2_image_cov = RealMatrix(1, 1, std::max(0.0, sm.m[4] - sm.m[2] * sm.m[2]));
  md.exactness = Exactness::Analytic;
  return md;
}

}  // namespace radwalk
