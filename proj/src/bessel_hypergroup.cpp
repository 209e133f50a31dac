#include "radwalk/bessel_hypergroup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "radwalk/errors.hpp"
#include "radwalk/random_matrix.hpp"
#include "radwalk/replicate.hpp"

namespace radwalk {

namespace {

// Eigenvalues of v^* v.
std::vector<double> gram_spectrum(const Matrix& v, Field field) {
  if (v.rows() == 1) return {std::norm(v(0, 0))};
  return eig_herm(HermitianMatrix(adjoint_times(v, v), field)).values;
}

bool inside_ball(const std::vector<double>& spectrum) {
  return std::all_of(spectrum.begin(), spectrum.end(), [](double x) { return x < 1.0; });
}

// log det(I - v^* v) given the spectrum of v^* v.
double log_det_complement(const std::vector<double>& spectrum) {
  double acc = 0.0;
  for (double x : spectrum) acc += std::log1p(-x);
  return acc;
}

double sum_of(const std::vector<double>& xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc;
}

// Matrix whose d q^2 real coordinates are i.i.d. N(0, sd^2).
Matrix coordinate_gaussian(int q, Field field, double sd, RandomStream& rng) {
  Matrix v(q, q);
  for (auto& z : v.data()) {
    const double re = rng.normal() * sd;
    z = field == Field::Real ? Scalar(re) : Scalar(re, rng.normal() * sd);
  }
  return v;
}

// Uniform point of the Frobenius ball of radius sqrt(q) in R^{d q^2}.
Matrix uniform_ball_point(int q, Field field, RandomStream& rng) {
  Matrix v = coordinate_gaussian(q, field, 1.0, rng);
  const double dim = real_dimension(field) * q * q;
  const double radius = std::sqrt(static_cast<double>(q)) * std::pow(rng.uniform_open(), 1.0 / dim);
  v *= radius / frob_norm(v);
  return v;
}

double log_ball_volume(int q, Field field) {
  const double dim = real_dimension(field) * q * q;
  return 0.5 * dim * (std::log(std::numbers::pi) + std::log(static_cast<double>(q))) - std::lgamma(0.5 * dim + 1.0);
}

// L L^* with Bartlett factor L for a possibly non-integer number of degrees of
// freedom (dof > q - 1).
HermitianMatrix bartlett_gram(double dof, int q, Field field, RandomStream& rng) {
  const double d = real_dimension(field);
  Matrix l(q, q);
  for (int i = 0; i < q; ++i) {
    l(i, i) = std::sqrt(rng.gamma(0.5 * d * (dof - i), 2.0 / d));
    for (int j = 0; j < i; ++j) l(i, j) = gaussian_entry(field, rng);
  }
  return HermitianMatrix(l * l.adjoint(), field);
}

double inv_sqrt_clamped(double x) { return x > 0.0 ? 1.0 / std::sqrt(x) : 0.0; }

[[noreturn]] void stall(const BesselParam& param, const char* method) {
  throw SamplerStall(std::string("contraction sampler (") + method + ") made " + std::to_string(kStallWindow) +
                         " proposals without acceptance",
                     param.mu(), param.q());
}

ContractionMatrix sample_gaussian_envelope(const BesselParam& param, RandomStream& rng) {
  const double a = param.exponent();
  if (!(a > 0.0)) throw DomainError("Gaussian envelope needs mu - rho > 0");
  const double sd = 1.0 / std::sqrt(2.0 * a);
  for (std::size_t tries = 0; tries < kStallWindow; ++tries) {
    Matrix v = coordinate_gaussian(param.q(), param.field(), sd, rng);
    const auto spectrum = gram_spectrum(v, param.field());
    if (!inside_ball(spectrum)) continue;
    // det(I - v^* v)^a e^{a |v|^2} <= 1 since log(1 - x) <= -x.
    const double log_accept = a * (log_det_complement(spectrum) + sum_of(spectrum));
    if (log_accept > 1e-12) throw NumericalFailure("Gaussian envelope: acceptance ratio above one");
    if (std::log(rng.uniform_open()) < log_accept) return ContractionMatrix::unchecked(std::move(v));
  }
  stall(param, "gaussian-envelope");
}

ContractionMatrix sample_uniform_ball(const BesselParam& param, RandomStream& rng) {
  const double a = param.exponent();
  if (a < 0.0) throw DomainError("uniform-ball sampler needs mu - rho >= 0");
  for (std::size_t tries = 0; tries < kStallWindow; ++tries) {
    Matrix v = uniform_ball_point(param.q(), param.field(), rng);
    const auto spectrum = gram_spectrum(v, param.field());
    if (!inside_ball(spectrum)) continue;
    if (a == 0.0 || std::log(rng.uniform_open()) < a * log_det_complement(spectrum))
      return ContractionMatrix::unchecked(std::move(v));
  }
  stall(param, "uniform-ball");
}

// W = (A + B)^{-1/2} A (A + B)^{-1/2} with A, B independent Wishart of q and
// 2 mu / d - q degrees of freedom has density proportional to
// det(W)^{d/2 - 1} det(I - W)^{mu - rho}, which is the law of v v^* when v has
// density det(I - v v^*)^{mu - rho}. Then v = W^{1/2} U with U Haar.
ContractionMatrix sample_matrix_beta(const BesselParam& param, RandomStream& rng) {
  const int q = param.q();
  const Field field = param.field();
  const double n2 = 2.0 * param.mu() / param.d() - q;
  for (std::size_t tries = 0; tries < kStallWindow; ++tries) {
    const HermitianMatrix a = gaussian_gram(q, q, field, rng);
    const HermitianMatrix b = bartlett_gram(n2, q, field, rng);
    const Matrix t = spectral_apply(eig_herm(a + b), field, inv_sqrt_clamped).matrix();
    const HermitianMatrix w(t * a.matrix() * t, field);
    Matrix v = psd_sqrt_of(w).matrix() * sample_stiefel_frame(q, q, field, rng);
    if (inside_ball(gram_spectrum(v, field))) return ContractionMatrix::unchecked(std::move(v));
  }
  stall(param, "matrix-beta");
}

}  // namespace

double BesselParam::rho_of(int q, Field field) { return real_dimension(field) * (q - 0.5) + 1.0; }

BesselParam::BesselParam(double mu, int q, Field field) : mu_(mu), q_(q), field_(field), rho_(0.0) {
  if (q < 1) throw DomainError("Bessel hypergroup needs q >= 1");
  rho_ = rho_of(q, field);
  if (!std::isfinite(mu) || !(mu > rho_ - 1.0))
    throw DomainError("Bessel hypergroup needs mu > rho - 1 = " + std::to_string(rho_ - 1.0) +
                      ", got mu = " + std::to_string(mu));
}

ContractionMatrix::ContractionMatrix(Matrix v) : v_(std::move(v)) {
  if (v_.rows() != v_.cols() || v_.rows() < 1) throw ShapeMismatch("contraction must be a non-empty square matrix");
  if (!v_.all_finite() || !inside_ball(gram_spectrum(v_, Field::Complex)))
    throw DomainError("contraction: I - v^* v is not positive definite");
}

ContractionMatrix ContractionMatrix::unchecked(Matrix v) { return ContractionMatrix(Unchecked{}, std::move(v)); }

ContractionMethod contraction_method(const BesselParam& param) {
  const double a = param.exponent();
  if (a >= 0.5) return ContractionMethod::GaussianEnvelope;
  if (a >= 0.0) return ContractionMethod::UniformBall;
  return ContractionMethod::MatrixBeta;
}

ContractionMatrix sample_contraction(const BesselParam& param, RandomStream& rng) {
  return sample_contraction_with(param, contraction_method(param), rng);
}

ContractionMatrix sample_contraction_with(const BesselParam& param, ContractionMethod method, RandomStream& rng) {
  switch (method) {
    case ContractionMethod::GaussianEnvelope:
      return sample_gaussian_envelope(param, rng);
    case ContractionMethod::UniformBall:
      return sample_uniform_ball(param, rng);
    case ContractionMethod::MatrixBeta:
      return sample_matrix_beta(param, rng);
  }
  throw DomainError("unknown contraction method");
}

PsdMatrix convolve_with(const PsdMatrix& r, const PsdMatrix& s, const ContractionMatrix& v) {
  if (r.q() != s.q() || v.matrix().rows() != r.q()) throw ShapeMismatch("convolve: dimension mismatch");
  if (r.field() != s.field()) throw ShapeMismatch("convolve: field mismatch");
  // delta_0 is the identity of the hypergroup.
  if (frob_norm(r) == 0.0) return s;
  if (frob_norm(s) == 0.0) return r;
  const Matrix svr = s.matrix() * v.matrix() * r.matrix();
  Matrix m = r.squared().matrix() + s.squared().matrix();
  m += svr;
  m += svr.adjoint();
  return psd_sqrt_of(HermitianMatrix(m, r.field()));
}

PsdMatrix convolve_points(const PsdMatrix& r, const PsdMatrix& s, const BesselParam& param, RandomStream& rng) {
  if (r.q() != param.q() || r.field() != param.field()) throw ShapeMismatch("convolve: parameter mismatch");
  return convolve_with(r, s, sample_contraction(param, rng));
}

PsdMatrix semigroup_convolve(const PsdMatrix& r, const PsdMatrix& s) {
  if (r.q() != s.q() || r.field() != s.field()) throw ShapeMismatch("semigroup convolve: dimension mismatch");
  if (frob_norm(r) == 0.0) return s;
  if (frob_norm(s) == 0.0) return r;
  return psd_sqrt_of(r.squared() + s.squared());
}

KappaEstimate kappa_mu(const BesselParam& param, std::size_t n_samples, RandomStream& rng) {
  if (n_samples < 2) throw DomainError("kappa_mu needs at least two samples");
  const double a = param.exponent();
  const int q = param.q();
  const Field field = param.field();
  const double dim = param.d() * q * q;

  KappaEstimate out;
  out.proposal = a >= 0.5 ? ContractionMethod::GaussianEnvelope : ContractionMethod::UniformBall;
  double log_scale = 0.0;
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    double w = 0.0;
    if (out.proposal == ContractionMethod::GaussianEnvelope) {
      // Proposal density (a/pi)^{dim/2} e^{-a |v|^2}.
      const Matrix v = coordinate_gaussian(q, field, 1.0 / std::sqrt(2.0 * a), rng);
      const auto spectrum = gram_spectrum(v, field);
      if (inside_ball(spectrum)) w = std::exp(a * (log_det_complement(spectrum) + sum_of(spectrum)));
    } else {
      const Matrix v = uniform_ball_point(q, field, rng);
      const auto spectrum = gram_spectrum(v, field);
      if (inside_ball(spectrum)) w = a == 0.0 ? 1.0 : std::exp(a * log_det_complement(spectrum));
    }
    const double delta = w - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (w - mean);
  }
  log_scale = out.proposal == ContractionMethod::GaussianEnvelope ? 0.5 * dim * std::log(std::numbers::pi / a)
                                                                   : log_ball_volume(q, field);
  const double scale = std::exp(log_scale);
  const double n = static_cast<double>(n_samples);
  out.estimate = scale * mean;
  out.std_error = scale * std::sqrt(m2 / (n - 1.0) / n);
  if (q == 1) out.quadrature = kappa_quadrature_1d(param);
  return out;
}

double kappa_quadrature_1d(const BesselParam& param) {
  if (param.q() != 1) throw DomainError("kappa quadrature is only available for q = 1");
  const double d = param.d();
  const double a = param.exponent();
  // |S^{d-1}| int_0^1 r^{d-1} (1 - r^2)^a dr
  const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double integral = integrator.integrate(
      [&](double r, double complement) {
        // complement = 1 - r near the right endpoint, which keeps (1 - r^2)^a accurate for a < 0.
        const double one_minus_r = r > 0.5 ? complement : 1.0 - r;
        return std::pow(r, d - 1.0) * std::pow(one_minus_r * (1.0 + r), a);
      },
      0.0, 1.0);
  return sphere * integral;
}

double contraction_square_cdf_1d(const BesselParam& param, double x) {
  if (param.q() != 1) throw DomainError("contraction CDF is only available for q = 1");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(0.5 * param.d(), param.exponent() + 1.0, x);
}

WalkTrajectory run_bessel_walk(const BesselWalkConfig& cfg, RandomStream& rng) {
  const BesselParam& param = cfg.param;
  if (cfg.law.q() != param.q() || cfg.law.field() != param.field())
    throw ShapeMismatch("Bessel walk: law dimension/field does not match the parameter");
  const std::vector<int> cps = normalized_checkpoints(cfg.checkpoints, cfg.n_steps);
  WalkTrajectory traj;
  PsdMatrix state = PsdMatrix::zero(param.q(), param.field());
  std::size_t next = 0;
  for (int step = 0; next < cps.size(); ++step) {
    if (step > 0) {
      const PsdMatrix s = sample_law(cfg.law, rng);
      state = convolve_points(state, s, param, rng);
    }
    if (cps[next] == step) {
      HermitianMatrix sq = state.squared();
      if (!sq.matrix().all_finite())
        throw NumericalFailure("Bessel walk: non-finite state at step " + std::to_string(step));
      traj.steps.push_back(step);
      traj.values.push_back(std::move(sq));
      ++next;
    }
  }
  return traj;
}

namespace {

template <class Real>
Real hypergeometric_0f1(double mu, double x, double stop, double* max_term) {
  Real term = 1, sum = 1;
  Real peak = 1;
  const Real rx = x;
  for (int k = 0; k < 100000; ++k) {
    term *= rx / ((Real(mu) + k) * Real(k + 1));
    sum += term;
    using std::abs;
    const Real mag = abs(term);
    if (mag > peak) peak = mag;
    // Terms decrease monotonically once (k + 1)(mu + k) > |x|.
    if ((k + 1.0) * (mu + k) > std::abs(x) && mag < Real(stop)) break;
  }
  if (max_term) *max_term = static_cast<double>(peak);
  return sum;
}

}  // namespace

double bessel_character_1d(double mu, double r, double s) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("Bessel character needs mu > 0");
  if (!(r >= 0.0) || !(s >= 0.0) || !std::isfinite(r) || !std::isfinite(s))
    throw DomainError("Bessel character needs finite r, s >= 0");
  const double z = r * s;
  if (z > kCharacterMaxArgument)
    throw RangeError("Bessel character: argument r s = " + std::to_string(z) + " exceeds " +
                     std::to_string(kCharacterMaxArgument));
  const double x = -0.25 * z * z;
  double peak = 0.0;
  const double fast = hypergeometric_0f1<double>(mu, x, 1e-20, &peak);
  // Cancellation costs about log10(peak) digits; fall back to quad precision.
  if (peak < 1e3) return fast;
  using Quad = boost::multiprecision::cpp_bin_float_quad;
  return static_cast<double>(hypergeometric_0f1<Quad>(mu, x, 1e-34, nullptr));
}

double ClippedQuadratic::on_square(const HermitianMatrix& x_squared) const {
  return std::min(real_inner(x_squared.matrix(), direction.matrix()), cap);
}

GapEstimate root_lipschitz_gap(const RadialLaw& law, const BesselParam& param, int n, const ClippedQuadratic& f,
                               std::size_t reps, const StreamFamily& streams, int workers) {
  if (law.q() != param.q() || law.field() != param.field())
    throw ShapeMismatch("root-Lipschitz gap: law does not match the parameter");
  if (n < 1 || reps < 2) throw DomainError("root-Lipschitz gap needs n >= 1 and at least two replicates");
  std::vector<double> hyper(reps), semi(reps);
  for_each_replicate(reps, workers, [&](std::size_t i) {
    RandomStream rng = streams.stream(i);
    PsdMatrix state = PsdMatrix::zero(param.q(), param.field());
    HermitianMatrix sum_sq = HermitianMatrix::zero(param.q(), param.field());
    for (int k = 0; k < n; ++k) {
      const PsdMatrix s = sample_law(law, rng);
      state = convolve_points(state, s, param, rng);
      sum_sq += s.squared();
    }
    hyper[i] = f.on_square(state.squared());
    semi[i] = f.on_square(sum_sq);
  });
  GapEstimate out;
  out.replicates = reps;
  double mean = 0.0, m2 = 0.0, mh = 0.0, ms = 0.0;
  for (std::size_t i = 0; i < reps; ++i) {
    const double diff = hyper[i] - semi[i];
    const double delta = diff - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (diff - mean);
    mh += hyper[i];
    ms += semi[i];
  }
  const double nr = static_cast<double>(reps);
  out.gap = std::abs(mean);
  out.std_error = std::sqrt(m2 / (nr - 1.0) / nr);
  out.hypergroup_mean = mh / nr;
  out.semigroup_mean = ms / nr;
  return out;
}

GapEstimate point_convolution_gap(const PsdMatrix& r, const PsdMatrix& s, const BesselParam& param,
                                  const ClippedQuadratic& f, std::size_t draws, const StreamFamily& streams,
                                  int workers) {
  if (draws < 2) throw DomainError("point convolution gap needs at least two draws");
  std::vector<double> hyper(draws);
  for_each_replicate(draws, workers, [&](std::size_t i) {
    RandomStream rng = streams.stream(i);
    hyper[i] = f(convolve_points(r, s, param, rng));
  });
  const double semi = f.on_square(r.squared() + s.squared());
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double delta = hyper[i] - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (hyper[i] - mean);
  }
  const double n = static_cast<double>(draws);
  GapEstimate out;
  out.replicates = draws;
  out.hypergroup_mean = mean;
  out.semigroup_mean = semi;
  out.gap = std::abs(mean - semi);
  out.std_error = std::sqrt(m2 / (n - 1.0) / n);
  return out;
}

}  // namespace radwalk
