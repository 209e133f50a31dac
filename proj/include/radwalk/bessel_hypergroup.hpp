#pragma once

// Bessel hypergroup (Pi_q, *_mu). The product of point masses delta_r *_mu
// delta_s is the law of
//
//     t = (r^2 + s^2 + s v r + r v^* s)^{1/2},
//
// where v lives in the matrix ball D_q = {v : v^* v < I} with density
// proportional to det(I - v v^*)^{mu - rho}, rho = d (q - 1/2) + 1. For
// mu = p d / 2 this is the radial part of the group convolution on M_{p,q}.

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "radwalk/cone_linalg.hpp"
#include "radwalk/orbit_sampler.hpp"
#include "radwalk/radial_laws.hpp"
#include "radwalk/random.hpp"

namespace radwalk {

class BesselParam {
 public:
  /// Throws DomainError unless q >= 1 and mu > rho - 1.
  BesselParam(double mu, int q, Field field);

  double mu() const { return mu_; }
  int q() const { return q_; }
  Field field() const { return field_; }
  int d() const { return real_dimension(field_); }
  double rho() const { return rho_; }
  /// Exponent mu - rho of the contraction density.
  double exponent() const { return mu_ - rho_; }
  /// mu >= 2 rho, the range of the mu -> infinity comparison estimates.
  bool lemma_regime() const { return mu_ >= 2.0 * rho_; }

  /// rho = d (q - 1/2) + 1.
  static double rho_of(int q, Field field);

 private:
  double mu_;
  int q_;
  Field field_;
  double rho_;
};

/// Element of D_q; construction checks that I - v^* v is positive definite.
class ContractionMatrix {
 public:
  explicit ContractionMatrix(Matrix v);
  /// Skips the membership check; for samplers that already verified it.
  static ContractionMatrix unchecked(Matrix v);
  const Matrix& matrix() const { return v_; }

 private:
  struct Unchecked {};
  ContractionMatrix(Unchecked, Matrix v) : v_(std::move(v)) {}
  Matrix v_;
};

enum class ContractionMethod {
  GaussianEnvelope,  ///< mu - rho >= 1/2
  UniformBall,       ///< 0 <= mu - rho < 1/2
  MatrixBeta,        ///< -1 < mu - rho < 0, also usable as an oracle everywhere
};

ContractionMethod contraction_method(const BesselParam& param);

/// Proposals without an acceptance after which the sampler reports a stall.
inline constexpr std::size_t kStallWindow = 10'000'000;

ContractionMatrix sample_contraction(const BesselParam& param, RandomStream& rng);
ContractionMatrix sample_contraction_with(const BesselParam& param, ContractionMethod method, RandomStream& rng);

/// (r^2 + s^2 + s v r + r v^* s)^{1/2} for a given contraction v.
PsdMatrix convolve_with(const PsdMatrix& r, const PsdMatrix& s, const ContractionMatrix& v);
/// A draw from delta_r *_mu delta_s.
PsdMatrix convolve_points(const PsdMatrix& r, const PsdMatrix& s, const BesselParam& param, RandomStream& rng);
/// The mu = infinity limit r . s = (r^2 + s^2)^{1/2}.
PsdMatrix semigroup_convolve(const PsdMatrix& r, const PsdMatrix& s);

struct KappaEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  ContractionMethod proposal = ContractionMethod::GaussianEnvelope;
  std::optional<double> quadrature;  ///< q = 1 only
};

/// Importance-sampling estimate of kappa_mu = int_{D_q} det(I - v^* v)^{mu - rho} dv
/// (Lebesgue measure on the d q^2 real coordinates).
KappaEstimate kappa_mu(const BesselParam& param, std::size_t n_samples, RandomStream& rng);

/// q = 1: kappa_mu by tanh-sinh quadrature of the radial integral.
double kappa_quadrature_1d(const BesselParam& param);

/// q = 1: P(|v|^2 <= x) for the contraction; |v|^2 ~ Beta(d/2, mu - rho + 1).
double contraction_square_cdf_1d(const BesselParam& param, double x);

struct BesselWalkConfig {
  BesselParam param;
  RadialLaw law;
  int n_steps = 1;
  std::vector<int> checkpoints;  ///< empty means {n_steps}
};

/// S_0 = 0, S_{k+1} ~ delta_{S_k} *_mu delta_{s_{k+1}}; records S_n^2.
WalkTrajectory run_bessel_walk(const BesselWalkConfig& cfg, RandomStream& rng);

/// q = 1 character phi_s(r) = j_{mu-1}(r s) = 0F1(mu; -(r s)^2 / 4). Throws
/// RangeError for r s > 50.
double bessel_character_1d(double mu, double r, double s);

inline constexpr double kCharacterMaxArgument = 50.0;

/// f(x) = min(<x^2, D>, cap). Root-Lipschitz with constant |D|_F, since
/// f(sqrt(y)) = min(<y, D>, cap) is |D|_F-Lipschitz in y.
struct ClippedQuadratic {
  HermitianMatrix direction;
  double cap = 0.0;

  double lipschitz() const { return frob_norm(direction); }
  /// Evaluates f at x given x^2.
  double on_square(const HermitianMatrix& x_squared) const;
  double operator()(const PsdMatrix& x) const { return on_square(x.squared()); }
};

struct GapEstimate {
  double gap = 0.0;  ///< |E f(hypergroup) - E f(semigroup)|
  double std_error = 0.0;
  double hypergroup_mean = 0.0;
  double semigroup_mean = 0.0;
  std::size_t replicates = 0;
};

/// Paired Monte Carlo estimate of |nu^{(n,*mu)}(f) - nu^{(n,.)}(f)|: every
/// replicate feeds the same increments to both composition rules.
GapEstimate root_lipschitz_gap(const RadialLaw& law, const BesselParam& param, int n, const ClippedQuadratic& f,
                               std::size_t reps, const StreamFamily& streams, int workers);

/// Single-step version: |delta_r *_mu delta_s (f) - f(r . s)|.
GapEstimate point_convolution_gap(const PsdMatrix& r, const PsdMatrix& s, const BesselParam& param,
                                  const ClippedQuadratic& f, std::size_t draws, const StreamFamily& streams,
                                  int workers);

}  // namespace radwalk
