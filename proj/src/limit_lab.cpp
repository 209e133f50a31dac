#include "radwalk/limit_lab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "radwalk/errors.hpp"
#include "radwalk/replicate.hpp"

namespace radwalk {

std::string to_string(CltKind kind) {
  switch (kind) {
    case CltKind::Clt1:
      return "CLT1";
    case CltKind::Clt2:
      return "CLT2";
    case CltKind::Clt3:
      return "CLT3";
    case CltKind::Clt4:
      return "CLT4";
  }
  return "?";
}

CltKind parse_clt_kind(const std::string& text) {
  std::string upper = text;
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "CLT1") return CltKind::Clt1;
  if (upper == "CLT2") return CltKind::Clt2;
  if (upper == "CLT3") return CltKind::Clt3;
  if (upper == "CLT4") return CltKind::Clt4;
  throw DomainError("unknown CLT kind '" + text + "'");
}

namespace {

void require_positive_n(int n, double p_or_mu) {
  if (n < 1) throw DomainError("normalize_clt: n must be >= 1");
  if (!(p_or_mu > 0.0)) throw DomainError("normalize_clt: p (or mu) must be positive");
}

// Scale applied to (raw - n sigma^2).
double clt_scale(CltKind kind, int n, double p, double sigma2) {
  const double nn = n;
  switch (kind) {
    case CltKind::Clt1:
      return std::sqrt(p) / (nn * sigma2 * std::numbers::sqrt2);
    case CltKind::Clt2:
    case CltKind::Clt4:
      return 1.0 / std::sqrt(nn);
    case CltKind::Clt3:
      return std::sqrt(p) / nn;
  }
  return 0.0;
}

}  // namespace

CltStatistic normalize_clt(CltKind kind, std::span<const double> raw, int n, double p_or_mu, const MomentData& md) {
  require_positive_n(n, p_or_mu);
  if (md.sigma2.q() != 1) throw ShapeMismatch("normalize_clt: scalar samples need q = 1 moment data");
  const double sigma2 = md.m2;
  if (kind == CltKind::Clt1 && !(sigma2 > 0.0)) throw DegenerateData("normalize_clt: CLT1 needs sigma^2 > 0");
  const double scale = clt_scale(kind, n, p_or_mu, sigma2);
  const double center = n * sigma2;
  CltStatistic out{kind, n, p_or_mu, 1, {}};
  out.values.reserve(raw.size());
  for (double x : raw) out.values.push_back(scale * (x - center));
  return out;
}

CltStatistic normalize_clt(CltKind kind, std::span<const HermitianMatrix> raw, int n, double p_or_mu,
                           const MomentData& md) {
  require_positive_n(n, p_or_mu);
  const int q = md.sigma2.q();
  const Field field = md.sigma2.field();
  if ((kind == CltKind::Clt1 || kind == CltKind::Clt2) && q != 1)
    throw ShapeMismatch("normalize_clt: " + to_string(kind) + " is defined for q = 1 only");
  const double scale = clt_scale(kind, n, p_or_mu, md.m2);
  if (kind == CltKind::Clt1 && !(md.m2 > 0.0)) throw DegenerateData("normalize_clt: CLT1 needs sigma^2 > 0");
  const std::size_t dim = herm_dim(q, field);
  std::vector<double> center(dim);
  vectorize_into(md.sigma2.base() * static_cast<double>(n), center);

  CltStatistic out{kind, n, p_or_mu, dim, std::vector<double>(raw.size() * dim)};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].q() != q || raw[i].field() != field) throw ShapeMismatch("normalize_clt: sample shape mismatch");
    std::span<double> row(out.values.data() + i * dim, dim);
    vectorize_into(raw[i], row);
    for (std::size_t c = 0; c < dim; ++c) row[c] = scale * (row[c] - center[c]);
  }
  return out;
}

RealMatrix t_squared_limit(const PsdMatrix& sigma2) {
  if (sigma2.field() != Field::Real) throw UnsupportedField("t_squared_limit is only defined over the reals");
  const int q = sigma2.q();
  const std::size_t dim = herm_dim(q, Field::Real);
  // For symmetric basis elements E, E': Cov = 2 tr(E s E' s).
  std::vector<Matrix> basis;
  basis.reserve(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    std::vector<double> unit(dim, 0.0);
    unit[c] = 1.0;
    basis.push_back(devectorize_herm(unit, q, Field::Real).matrix());
  }
  const Matrix& s = sigma2.matrix();
  std::vector<Matrix> es;
  es.reserve(dim);
  for (const auto& e : basis) es.push_back(e * s);
  RealMatrix out(dim, dim);
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = a; b < dim; ++b) {
      // tr(X Y) = <X^*, Y>
      const double v = 2.0 * real_inner(es[a].adjoint(), es[b]);
      out(a, b) = v;
      out(b, a) = v;
    }
  }
  return out;
}

double moment_identity_rhs(int n, double p, const MomentData& md) {
  if (md.sigma2.q() != 1) throw ShapeMismatch("moment_identity_rhs needs q = 1");
  if (n < 1 || !(p > 0.0)) throw DomainError("moment_identity_rhs needs n >= 1 and p > 0");
  const double s4 = md.m2 * md.m2;
  const double nn = n;
  return nn * (md.m4 - s4) + 2.0 * nn * (nn - 1.0) / p * s4;
}

double chi2_cdf(double k, double x) {
  if (!(k > 0.0)) throw DomainError("chi2_cdf needs k > 0");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(0.5 * k, 0.5 * x);
}

double normal_cdf(double x, double variance) {
  if (!(variance > 0.0)) throw DomainError("normal_cdf needs a positive variance");
  return 0.5 * boost::math::erfc(-x / std::sqrt(2.0 * variance));
}

double ks_distance(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  if (sorted.empty()) throw DomainError("ks_distance needs a nonempty sample");
  if (!std::is_sorted(sorted.begin(), sorted.end())) throw DomainError("ks_distance needs a sorted sample");
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, std::abs((i + 1) / n - f), std::abs(i / n - f)});
  }
  return d;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;  // series is slow and the value is 1 to double precision
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TwoSampleKs ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_two_sample needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  TwoSampleKs out;
  out.statistic = d;
  out.p_value = kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d);
  return out;
}

double noise_floor(std::size_t reps) {
  if (reps == 0) throw DomainError("noise_floor needs reps >= 1");
  return 3.0 / std::sqrt(static_cast<double>(reps));
}

RateFit fit_log_log(std::vector<RatePoint> points, double floor) {
  RateFit fit;
  fit.noise_floor = floor;
  std::vector<double> xs, ys;
  for (auto& pt : points) {
    if (!(pt.x > 0.0)) throw DomainError("rate fit: grid values must be positive");
    pt.flagged = !(pt.distance >= floor) || !(pt.distance > 0.0);
    if (!pt.flagged) {
      xs.push_back(std::log(pt.x));
      ys.push_back(std::log(pt.distance));
    }
  }
  fit.points = std::move(points);
  const std::size_t m = xs.size();
  if (m < 2) return fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) return fit;
  const double slope = sxy / sxx;
  fit.slope = slope;
  fit.intercept = my - slope * mx;
  if (m > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = ys[i] - fit.intercept - slope * xs[i];
      rss += r * r;
    }
    fit.slope_std_error = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
  }
  return fit;
}

RateFit berry_esseen_scan(const RadialLaw& law, int p, std::span<const int> n_grid, std::size_t reps,
                          const StreamFamily& streams, int workers, WalkMethod method) {
  if (law.q() != 1) throw ShapeMismatch("berry_esseen_scan needs a q = 1 law");
  if (n_grid.size() < 4) throw DomainError("berry_esseen_scan needs at least four grid points");
  if (reps < 1) throw DomainError("berry_esseen_scan needs reps >= 1");
  const std::vector<int> grid = normalized_checkpoints(n_grid, n_grid.empty() ? 0 : n_grid.back());
  if (grid.front() < 1) throw DomainError("berry_esseen_scan: grid values must be >= 1");
  const MomentData md = moments(law);
  if (!(md.m2 > 0.0)) throw DegenerateData("berry_esseen_scan needs sigma^2 > 0");

  const std::size_t g = grid.size();
  std::vector<double> raw(reps * g);
  for_each_replicate(reps, workers, [&](std::size_t i) {
    RandomStream rng = streams.stream(i);
    run_scalar_group_walk(law, p, law.field(), grid, method, rng, std::span<double>(raw.data() + i * g, g));
  });

  const double dp = static_cast<double>(real_dimension(law.field())) * p;
  std::vector<RatePoint> points;
  std::vector<double> column(reps);
  for (std::size_t k = 0; k < g; ++k) {
    const double scale = dp / (grid[k] * md.m2);
    for (std::size_t i = 0; i < reps; ++i) column[i] = scale * raw[i * g + k];
    std::sort(column.begin(), column.end());
    points.push_back({static_cast<double>(grid[k]), ks_distance(column, [dp](double x) { return chi2_cdf(dp, x); })});
  }
  return fit_log_log(std::move(points), noise_floor(reps));
}

CovarianceEstimate empirical_cov(std::span<const double> samples, std::size_t dim) {
  if (dim == 0 || samples.size() % dim != 0) throw ShapeMismatch("empirical_cov: sample buffer is not count x dim");
  const std::size_t count = samples.size() / dim;
  if (count < 2) throw DomainError("empirical_cov needs at least two samples");
  CovarianceEstimate out;
  out.mean.assign(dim, 0.0);
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t a = 0; a < dim; ++a) out.mean[a] += samples[i * dim + a];
  for (auto& m : out.mean) m /= static_cast<double>(count);

  // Per entry: mean and spread of the centered products.
  RealMatrix sum(dim, dim), sum_sq(dim, dim);
  std::vector<double> centered(dim);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t a = 0; a < dim; ++a) centered[a] = samples[i * dim + a] - out.mean[a];
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = a; b < dim; ++b) {
        const double prod = centered[a] * centered[b];
        sum(a, b) += prod;
        sum_sq(a, b) += prod * prod;
      }
    }
  }
  const double n = static_cast<double>(count);
  out.covariance = RealMatrix(dim, dim);
  out.std_error = RealMatrix(dim, dim);
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = a; b < dim; ++b) {
      const double cov = sum(a, b) / (n - 1.0);
      const double mean_prod = sum(a, b) / n;
      const double var_prod = std::max(0.0, sum_sq(a, b) / n - mean_prod * mean_prod);
      const double se = std::sqrt(var_prod / n);
      out.covariance(a, b) = out.covariance(b, a) = cov;
      out.std_error(a, b) = out.std_error(b, a) = se;
    }
  }
  return out;
}

MardiaResult mardia_tests(std::span<const double> samples, std::size_t dim) {
  if (dim == 0 || samples.size() % dim != 0) throw ShapeMismatch("mardia_tests: sample buffer is not count x dim");
  const std::size_t count = samples.size() / dim;
  if (count <= 10 * dim * dim) throw DomainError("mardia_tests needs more than 10 dim^2 samples");
  const CovarianceEstimate est = empirical_cov(samples, dim);
  const double n = static_cast<double>(count);
  // Mardia uses the maximum-likelihood covariance.
  RealMatrix s(dim, dim);
  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t b = 0; b < dim; ++b) s(a, b) = est.covariance(a, b) * (n - 1.0) / n;
  const std::vector<double> spectrum = symmetric_eigenvalues(s);
  if (!(spectrum.front() > 1e-12 * std::max(spectrum.back(), 0.0)) || !(spectrum.back() > 0.0))
    throw DegenerateData("mardia_tests: singular empirical covariance");
  const RealMatrix l = cholesky(s);

  // Whitened samples y = L^{-1}(x - mean).
  std::vector<double> y(samples.size());
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t a = 0; a < dim; ++a) {
      double v = samples[i * dim + a] - est.mean[a];
      for (std::size_t b = 0; b < a; ++b) v -= l(a, b) * y[i * dim + b];
      y[i * dim + a] = v / l(a, a);
    }
  }
  // b1 = sum_{rst} (mean_i y_r y_s y_t)^2, b2 = mean_i |y_i|^4.
  std::vector<double> third(dim * dim * dim, 0.0);
  double b2 = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double* yi = y.data() + i * dim;
    double norm2 = 0.0;
    for (std::size_t r = 0; r < dim; ++r) {
      norm2 += yi[r] * yi[r];
      for (std::size_t s2 = 0; s2 < dim; ++s2)
        for (std::size_t t = 0; t < dim; ++t) third[(r * dim + s2) * dim + t] += yi[r] * yi[s2] * yi[t];
    }
    b2 += norm2 * norm2;
  }
  double b1 = 0.0;
  for (double v : third) b1 += (v / n) * (v / n);
  b2 /= n;

  const double k = static_cast<double>(dim);
  MardiaResult out;
  out.skew = b1;
  out.kurt = b2;
  out.skew_statistic = n * b1 / 6.0;
  const double skew_dof = k * (k + 1.0) * (k + 2.0) / 6.0;
  out.skew_p_value = boost::math::gamma_q(0.5 * skew_dof, 0.5 * out.skew_statistic);
  out.kurt_z = (b2 - k * (k + 2.0)) / std::sqrt(8.0 * k * (k + 2.0) / n);
  out.kurt_p_value = boost::math::erfc(std::abs(out.kurt_z) / std::numbers::sqrt2);
  return out;
}

void RunningMoments::push(double x) {
  ++count;
  const double delta = x - mean;
  mean += delta / static_cast<double>(count);
  m2 += delta * (x - mean);
}

void RunningMoments::merge(const RunningMoments& other) {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count);
  const double nb = static_cast<double>(other.count);
  const double total = na + nb;
  const double delta = other.mean - mean;
  mean += delta * nb / total;
  m2 += other.m2 + delta * delta * na * nb / total;
  count += other.count;
}

double RunningMoments::variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }

double RunningMoments::std_error() const {
  return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
}

EmpiricalSummary summarize(const CltStatistic& stat) {
  EmpiricalSummary out;
  out.count = stat.count();
  if (out.count < 2) {
    out.mean.values.assign(stat.dim(), 0.0);
    for (std::size_t i = 0; i < out.count; ++i)
      for (std::size_t a = 0; a < stat.dim(); ++a) out.mean.values[a] += stat.values[i * stat.dim() + a];
    out.covariance = RealMatrix(stat.dim(), stat.dim());
    return out;
  }
  const CovarianceEstimate est = empirical_cov(stat.values, stat.dim());
  out.mean.values = est.mean;
  out.covariance = est.covariance;
  if (stat.dim() > 1 && out.count > 10 * stat.dim() * stat.dim()) {
    try {
      const MardiaResult m = mardia_tests(stat.values, stat.dim());
      out.mardia_skew = m.skew;
      out.mardia_kurt = m.kurt;
    } catch (const DegenerateData&) {
    }
  }
  return out;
}

}  // namespace radwalk
