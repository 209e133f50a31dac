#pragma once

// Limit statistics: the four normalizations of phi(S_n)^2, their Gaussian
// limit covariances, distribution distances and rate fits.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radwalk/cone_linalg.hpp"
#include "radwalk/orbit_sampler.hpp"
#include "radwalk/radial_laws.hpp"
#include "radwalk/random.hpp"

namespace radwalk {

enum class CltKind {
  Clt1,  ///< sqrt(p)/(n sigma^2 sqrt 2) (|S|^2 - n sigma^2), q = 1, limit N(0, 1)
  Clt2,  ///< (|S|^2 - n sigma^2)/sqrt(n), q = 1, limit N(0, m4 - sigma^4)
  Clt3,  ///< sqrt(p)/n (phi^2 - n sigma^2), limit N(0, T^2)
  Clt4,  ///< (phi^2 - n sigma^2)/sqrt(n), limit N(0, Sigma^2)
};

std::string to_string(CltKind kind);
/// Accepts "CLT1".."CLT4" (case-insensitive); throws DomainError otherwise.
CltKind parse_clt_kind(const std::string& text);

/// Normalized samples stored row-major, count() x dim().
struct CltStatistic {
  CltKind kind = CltKind::Clt2;
  int n = 0;
  double p_or_mu = 0.0;
  std::size_t dimension = 1;
  std::vector<double> values;

  std::size_t dim() const { return dimension; }
  std::size_t count() const { return dimension == 0 ? 0 : values.size() / dimension; }
  std::span<const double> sample(std::size_t i) const { return {values.data() + i * dimension, dimension}; }
};

/// q = 1 form: raw holds |S_n|^2 per replicate.
CltStatistic normalize_clt(CltKind kind, std::span<const double> raw, int n, double p_or_mu, const MomentData& md);
/// General form: raw holds phi(S_n)^2 per replicate.
CltStatistic normalize_clt(CltKind kind, std::span<const HermitianMatrix> raw, int n, double p_or_mu,
                           const MomentData& md);

/// Covariance of the CLT3 limit on HermVector coordinates:
/// Cov(X_ij, X_kl) = s_ik s_jl + s_il s_jk with s = sigma^2. Real field only.
RealMatrix t_squared_limit(const PsdMatrix& sigma2);

/// q = 1: E[(|S_n|^2 - n sigma^2)^2] = n (m4 - sigma^4) + 2 n (n - 1) sigma^4 / p.
double moment_identity_rhs(int n, double p, const MomentData& md);

/// Regularized lower incomplete gamma P(k/2, x/2).
double chi2_cdf(double k, double x);
double normal_cdf(double x, double variance = 1.0);

/// sup |F_N - F| for a sorted sample.
double ks_distance(std::span<const double> sorted, const std::function<double(double)>& cdf);

struct TwoSampleKs {
  double statistic = 0.0;
  double p_value = 1.0;  ///< asymptotic Kolmogorov distribution
};
TwoSampleKs ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);

/// 3 / sqrt(reps): distances below this are indistinguishable from Monte Carlo noise.
double noise_floor(std::size_t reps);

struct RatePoint {
  double x = 0.0;
  double distance = 0.0;
  bool flagged = false;  ///< below the noise floor, excluded from the fit
};

struct RateFit {
  std::vector<RatePoint> points;
  double noise_floor = 0.0;
  std::optional<double> slope;  ///< undefined with fewer than two usable points
  double slope_std_error = 0.0;
  double intercept = 0.0;
};

/// Least squares fit of log(distance) against log(x) over unflagged points.
RateFit fit_log_log(std::vector<RatePoint> points, double floor);

/// q = 1 group walk at fixed p: KS distance of d p |S_n|^2 / (n sigma^2) to
/// chi^2_{d p} at every n of the grid, then a log-log slope.
RateFit berry_esseen_scan(const RadialLaw& law, int p, std::span<const int> n_grid, std::size_t reps,
                          const StreamFamily& streams, int workers, WalkMethod method = WalkMethod::Auto);

struct MardiaResult {
  double skew = 0.0;  ///< b_{1,k}
  double kurt = 0.0;  ///< b_{2,k}
  double skew_statistic = 0.0;  ///< N b1 / 6 ~ chi^2_{k(k+1)(k+2)/6}
  double kurt_z = 0.0;          ///< (b2 - k(k+2)) / sqrt(8 k (k+2) / N)
  double skew_p_value = 1.0;
  double kurt_p_value = 1.0;
};

/// samples: row-major count x dim. Needs count > 10 dim^2.
MardiaResult mardia_tests(std::span<const double> samples, std::size_t dim);

struct CovarianceEstimate {
  std::vector<double> mean;
  RealMatrix covariance;  ///< unbiased
  RealMatrix std_error;   ///< standard error of each covariance entry
};

CovarianceEstimate empirical_cov(std::span<const double> samples, std::size_t dim);

/// Streaming count / mean / M2 with an associative merge.
struct RunningMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x);
  void merge(const RunningMoments& other);
  double variance() const;
  double std_error() const;
};

struct EmpiricalSummary {
  std::size_t count = 0;
  HermVector mean;
  RealMatrix covariance;
  std::optional<double> ks_distance;
  std::optional<double> sup_chi2_distance;
  std::optional<double> mardia_skew;
  std::optional<double> mardia_kurt;
};

/// Mean and covariance, plus Mardia statistics when dim > 1 and the sample is
/// large enough. The distances to a limit law are left empty; the caller knows
/// the limit and fills them.
EmpiricalSummary summarize(const CltStatistic& stat);

}  // namespace radwalk
