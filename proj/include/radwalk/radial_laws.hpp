#pragma once

// Probability laws on the cone Pi_q. They are the radial parts shared by the
// group walks on M_{p,q} and the Bessel walks on Pi_q.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "radwalk/cone_linalg.hpp"
#include "radwalk/random.hpp"

namespace radwalk {

struct PointMass {
  PsdMatrix atom;
};

struct FiniteMixture {
  std::vector<PsdMatrix> atoms;
  std::vector<double> weights;
};

/// a with probability p_a, b otherwise (q = 1).
struct ScalarTwoPoint {
  double a = 0.0;
  double b = 0.0;
  double p_a = 0.5;
};

/// exp(N(log_mean, log_sd^2)) (q = 1).
struct ScalarLogNormal {
  double log_mean = 0.0;
  double log_sd = 1.0;
};

/// Uniform on [lo, hi] (q = 1).
struct ScalarUniform {
  double lo = 0.0;
  double hi = 1.0;
};

/// (G^* G)^{1/2} for G a dof x q Gaussian matrix with rows N(0, scale). For
/// q = 1, dof = p this is the chi law whose radial lift to R^p is N(0, scale I).
struct WishartRoot {
  PsdMatrix scale;
  int dof = 1;
};

class RadialLaw {
 public:
  using Variant = std::variant<PointMass, FiniteMixture, ScalarTwoPoint, ScalarLogNormal, ScalarUniform, WishartRoot>;

  /// delta_0 on Pi_1.
  RadialLaw() : RadialLaw(PointMass{PsdMatrix::zero(1, Field::Real)}, 1, Field::Real) {}

  static RadialLaw point_mass(PsdMatrix atom);
  static RadialLaw mixture(std::vector<PsdMatrix> atoms, std::vector<double> weights);
  static RadialLaw two_point(double a, double b, double p_a);
  static RadialLaw log_normal(double log_mean, double log_sd);
  static RadialLaw uniform(double lo, double hi);
  static RadialLaw wishart_root(PsdMatrix scale, int dof);

  const Variant& variant() const { return variant_; }
  int q() const { return q_; }
  Field field() const { return field_; }
  /// True for the q = 1 laws that can be sampled as plain doubles.
  bool is_scalar() const { return q_ == 1 && field_ == Field::Real; }
  std::string name() const;

 private:
  RadialLaw(Variant v, int q, Field field);

  Variant variant_;
  int q_ = 1;
  Field field_ = Field::Real;
  std::vector<double> cumulative_;  // mixture CDF
  Matrix scale_root_;               // WishartRoot: scale^{1/2}
  friend PsdMatrix sample_law(const RadialLaw&, RandomStream&);
  friend HermitianMatrix sample_law_squared(const RadialLaw&, RandomStream&);
  friend double sample_scalar(const RadialLaw&, RandomStream&);
};

PsdMatrix sample_law(const RadialLaw& law, RandomStream& rng);
/// s^2 for s ~ law; avoids a square root for WishartRoot.
HermitianMatrix sample_law_squared(const RadialLaw& law, RandomStream& rng);
/// q = 1 fast path: returns the 1x1 sample as a double.
double sample_scalar(const RadialLaw& law, RandomStream& rng);

enum class Exactness { Analytic, MonteCarlo };

struct MomentData {
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  PsdMatrix sigma2;                ///< integral of s^2
  RealMatrix sigma2_image_cov;     ///< covariance of vec(s^2) on H_q coordinates
  Exactness exactness = Exactness::Analytic;
  std::size_t n_samples = 0;       ///< Monte Carlo only
  double std_error = 0.0;          ///< Monte Carlo standard error of m2
  std::array<double, 4> moment_std_errors{};

  /// sigma^4 for q = 1.
  double sigma4() const;
};

/// Monte Carlo sample count used for WishartRoot moments.
inline constexpr std::size_t kMomentSamples = 1'000'000;

MomentData moments(const RadialLaw& law, std::size_t mc_samples = kMomentSamples);

}  // namespace radwalk
