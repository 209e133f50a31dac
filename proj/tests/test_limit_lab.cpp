#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "radwalk/errors.hpp"
#include "radwalk/limit_lab.hpp"
#include "radwalk/random_matrix.hpp"

using namespace radwalk;

namespace {

std::vector<double> sorted_normals(std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  std::sort(x.begin(), x.end());
  return x;
}

// Orthonormal basis of H_q (real) in the same order as vectorize_herm.
std::vector<Matrix> herm_basis(int q) {
  std::vector<Matrix> basis;
  for (int i = 0; i < q; ++i) {
    Matrix e(q, q);
    e(i, i) = 1.0;
    basis.push_back(e);
  }
  for (int i = 0; i < q; ++i)
    for (int j = i + 1; j < q; ++j) {
      Matrix e(q, q);
      e(i, j) = e(j, i) = 1.0 / std::sqrt(2.0);
      basis.push_back(e);
    }
  return basis;
}

// Cov(<X, E_a>, <X, E_b>) with Cov(X_ij, X_kl) = s_ik s_jl + s_il s_jk.
RealMatrix t_squared_oracle(const Matrix& s) {
  const int q = s.rows();
  const auto basis = herm_basis(q);
  RealMatrix out(basis.size(), basis.size());
  for (std::size_t a = 0; a < basis.size(); ++a)
    for (std::size_t b = 0; b < basis.size(); ++b) {
      double sum = 0.0;
      for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j)
          for (int k = 0; k < q; ++k)
            for (int l = 0; l < q; ++l)
              sum += basis[a](i, j).real() * basis[b](k, l).real() *
                     (s(i, k).real() * s(j, l).real() + s(i, l).real() * s(j, k).real());
      out(a, b) = sum;
    }
  return out;
}

}  // namespace

TEST_CASE("clt kind names") {
  for (CltKind k : {CltKind::Clt1, CltKind::Clt2, CltKind::Clt3, CltKind::Clt4}) CHECK(parse_clt_kind(to_string(k)) == k);
  CHECK(parse_clt_kind("clt3") == CltKind::Clt3);
  CHECK_THROWS_AS(parse_clt_kind("CLT5"), DomainError);
}

TEST_CASE("normalize_clt examples") {
  const MomentData md = moments(RadialLaw::two_point(1.0, 2.0, 0.5));
  const std::vector<double> centered{250.0};
  CHECK(normalize_clt(CltKind::Clt2, centered, 100, 4.0, md).values[0] == 0.0);

  const std::vector<double> raw{260.0};
  const CltStatistic c1 = normalize_clt(CltKind::Clt1, raw, 100, 4.0, md);
  CHECK(c1.values[0] == doctest::Approx(2.0 / (100 * 2.5 * std::sqrt(2.0)) * 10.0).epsilon(1e-14));
  CHECK(c1.values[0] == doctest::Approx(0.0565685).epsilon(1e-6));

  const std::vector<double> many{10.0, 40.0, 55.5, 90.0};
  const CltStatistic c2 = normalize_clt(CltKind::Clt2, many, 20, 50.0, md);
  const CltStatistic c4 = normalize_clt(CltKind::Clt4, many, 20, 50.0, md);
  CHECK(c2.values == c4.values);
  CHECK(c2.count() == 4);
  CHECK(c2.dim() == 1);

  const CltStatistic c3 = normalize_clt(CltKind::Clt3, many, 20, 50.0, md);
  CHECK(c3.values[1] == doctest::Approx(std::sqrt(50.0) / 20 * (40.0 - 50.0)));

  std::vector<HermitianMatrix> mats;
  for (double x : many) mats.push_back(HermitianMatrix::identity(1, Field::Real) * x);
  CHECK(normalize_clt(CltKind::Clt4, mats, 20, 50.0, md).values == c4.values);
}

TEST_CASE("normalize_clt matrix shapes") {
  const std::vector<double> a{1.0, 0.0};
  const std::vector<double> b{0.0, 1.0};
  const MomentData md = moments(RadialLaw::mixture(
      {PsdMatrix::diagonal(a, Field::Complex), PsdMatrix::diagonal(b, Field::Complex)}, {0.5, 0.5}));
  std::vector<HermitianMatrix> raw(5, HermitianMatrix::identity(2, Field::Complex) * 4.0);
  const CltStatistic s = normalize_clt(CltKind::Clt4, raw, 4, 10.0, md);
  CHECK(s.dim() == 4);
  CHECK(s.count() == 5);
  // (4 I - 4 * I/2) / 2 = I
  CHECK(s.sample(2)[0] == doctest::Approx(1.0));
  CHECK(s.sample(2)[1] == doctest::Approx(1.0));
  CHECK(s.sample(2)[2] == 0.0);
  CHECK_THROWS_AS(normalize_clt(CltKind::Clt1, raw, 4, 10.0, md), ShapeMismatch);
  const std::vector<double> scalars{1.0};
  CHECK_THROWS_AS(normalize_clt(CltKind::Clt2, scalars, 4, 10.0, md), ShapeMismatch);
}

TEST_CASE("t_squared_limit") {
  SUBCASE("identity") {
    const RealMatrix t = t_squared_limit(PsdMatrix::identity(2, Field::Real));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(t(i, j) == doctest::Approx(i == j ? 2.0 : 0.0));
  }
  SUBCASE("diag(1, 0)") {
    const std::vector<double> d{1.0, 0.0};
    const RealMatrix t = t_squared_limit(PsdMatrix::diagonal(d, Field::Real));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(t(i, j) == doctest::Approx(i == 0 && j == 0 ? 2.0 : 0.0));
  }
  SUBCASE("random sigma^2 against the index formula") {
    RandomStream rng(1, 0);
    for (int q = 1; q <= 4; ++q) {
      const Matrix g = gaussian_matrix(q + 2, q, Field::Real, rng);
      const PsdMatrix s(HermitianMatrix(adjoint_times(g, g), Field::Real));
      const RealMatrix t = t_squared_limit(s);
      const RealMatrix o = t_squared_oracle(s.matrix());
      REQUIRE(t.rows() == o.rows());
      for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) {
          CHECK(t(i, j) == doctest::Approx(o(i, j)).epsilon(1e-12).scale(1.0));
          CHECK(t(i, j) == t(j, i));
        }
    }
  }
  CHECK_THROWS_AS(t_squared_limit(PsdMatrix::identity(2, Field::Complex)), UnsupportedField);
}

TEST_CASE("moment identity right-hand side") {
  const MomentData md = moments(RadialLaw::two_point(1.0, 2.0, 0.5));
  CHECK(moment_identity_rhs(20, 50, md) == doctest::Approx(140.0).epsilon(1e-14));
  CHECK(moment_identity_rhs(1, 7, md) == doctest::Approx(2.25));
  CHECK(moment_identity_rhs(30, 1e15, md) == doctest::Approx(30 * 2.25).epsilon(1e-12));
}

TEST_CASE("distribution functions") {
  CHECK(chi2_cdf(3, 0.0) == 0.0);
  CHECK(chi2_cdf(2, 2.0) == doctest::Approx(0.632120558828558).epsilon(1e-12));
  CHECK(std::abs(chi2_cdf(2, 2.0) - (1 - std::exp(-1.0))) <= 1e-10);
  CHECK(std::abs(chi2_cdf(1, 1.0) - std::erf(1.0 / std::sqrt(2.0))) <= 1e-10);
  CHECK(chi2_cdf(1, 1.0) == doctest::Approx(0.682689492137086).epsilon(1e-12));
  for (double x : {0.5, 3.0, 11.0}) CHECK(std::abs(chi2_cdf(4, x) - (1 - std::exp(-x / 2) * (1 + x / 2))) <= 1e-10);

  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.0) == doctest::Approx(0.841344746068543).epsilon(1e-12));
  CHECK(normal_cdf(3.0, 9.0) == doctest::Approx(normal_cdf(1.0)).epsilon(1e-15));
}

TEST_CASE("ks_distance") {
  const auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  const std::vector<double> one{0.5};
  CHECK(ks_distance(one, uniform) == doctest::Approx(0.5));

  for (std::size_t n : {1u, 7u, 100u}) {
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = (i + 0.5) / n;
    CHECK(ks_distance(q, uniform) == doctest::Approx(0.5 / n).epsilon(1e-12));
  }

  // DKW: P(D > 0.0061) <= 2 exp(-2 N 0.0061^2) < 6e-4 at N = 10^5
  const auto z = sorted_normals(100000, 2);
  CHECK(ks_distance(z, [](double x) { return normal_cdf(x); }) <= 0.0061);

  const std::vector<double> unsorted{0.3, 0.1};
  CHECK_THROWS_AS(ks_distance(unsorted, uniform), DomainError);
}

TEST_CASE("two-sample KS") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const auto same = ks_two_sample(a, a);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  const std::vector<double> b{6, 7, 8};
  CHECK(ks_two_sample(a, b).statistic == 1.0);
  const std::vector<double> c{2.5, 10};
  CHECK(ks_two_sample(a, c).statistic == doctest::Approx(0.5));

  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.26999967).epsilon(1e-6));
  CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.0494).epsilon(0.01));

  // null calibration: same law, p-values should rarely be tiny
  int rejects = 0;
  for (int t = 0; t < 200; ++t) {
    RandomStream rng(100 + t, 0);
    std::vector<double> x(500), y(700);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    rejects += ks_two_sample(x, y).p_value < 0.05;
  }
  CHECK(rejects <= 20);

  RandomStream rng(3, 0);
  std::vector<double> x(5000), y(5000);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.normal() + 0.2;
  CHECK(ks_two_sample(x, y).p_value < 1e-6);
}

TEST_CASE("noise floor and rate fits") {
  CHECK(noise_floor(10000) == doctest::Approx(0.03));
  CHECK(noise_floor(20000) / noise_floor(10000) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(noise_floor(40000) / noise_floor(10000) == doctest::Approx(0.5));

  std::vector<RatePoint> pts;
  for (double x : {4.0, 16.0, 64.0, 256.0, 1024.0}) pts.push_back({x, 3.0 * std::pow(x, -0.5), false});
  RateFit fit = fit_log_log(pts, 0.1);
  REQUIRE(fit.slope.has_value());
  // 3 / sqrt(1024) < 0.1 is flagged, the rest fit exactly
  CHECK(fit.points.back().flagged);
  CHECK(*fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));

  fit = fit_log_log(pts, 10.0);
  CHECK_FALSE(fit.slope.has_value());
  for (const auto& p : fit.points) CHECK(p.flagged);
}

TEST_CASE("berry-esseen scan of an exactly Gaussian walk is all noise") {
  // chi_3 radial part: every increment is N(0, I_3), so 3 |S_n|^2 / (3 n) ~ chi^2_3 exactly
  const RadialLaw law = RadialLaw::wishart_root(PsdMatrix::identity(1, Field::Real), 3);
  const std::vector<int> grid{1, 2, 4, 8};
  const RateFit fit = berry_esseen_scan(law, 3, grid, 20000, StreamFamily(4, 1), 2, WalkMethod::Explicit);
  CHECK_FALSE(fit.slope.has_value());
  for (const auto& p : fit.points) {
    CHECK(p.flagged);
    CHECK(p.distance > 0.0);
  }
}

TEST_CASE("berry-esseen scan decays for a lattice law") {
  const std::vector<int> grid{2, 4, 8, 16, 32};
  const RateFit fit = berry_esseen_scan(RadialLaw::two_point(1.0, 2.0, 0.5), 3, grid, 40000, StreamFamily(5, 1), 2);
  REQUIRE(fit.slope.has_value());
  CHECK(*fit.slope < -0.35);
}

TEST_CASE("mardia tests") {
  SUBCASE("null calibration") {
    int skew_rejects = 0, kurt_rejects = 0;
    constexpr int kRuns = 300;
    for (int t = 0; t < kRuns; ++t) {
      RandomStream rng(1000 + t, 0);
      std::vector<double> x(3 * 3000);
      for (auto& v : x) v = rng.normal();
      const MardiaResult m = mardia_tests(x, 3);
      skew_rejects += m.skew_p_value < 0.01;
      kurt_rejects += m.kurt_p_value < 0.01;
    }
    // Binomial(300, 0.01) exceeds 10 with probability below 1e-3
    CHECK(skew_rejects <= 10);
    CHECK(kurt_rejects <= 10);
  }
  SUBCASE("correlated normal input is not rejected") {
    RandomStream rng(6, 0);
    std::vector<double> x;
    for (int i = 0; i < 100000; ++i) {
      const double a = rng.normal(), b = rng.normal(), c = rng.normal();
      x.insert(x.end(), {a, a + 0.5 * b, 2.0 * c - b});
    }
    const MardiaResult m = mardia_tests(x, 3);
    CHECK(m.skew_p_value > 1e-3);
    CHECK(m.kurt_p_value > 1e-3);
    CHECK(m.kurt == doctest::Approx(15.0).epsilon(0.02));
  }
  SUBCASE("skewed input is rejected") {
    RandomStream rng(7, 0);
    std::vector<double> x(3 * 20000);
    for (auto& v : x) v = std::exp(rng.normal());
    CHECK(mardia_tests(x, 3).skew_p_value < 1e-6);
  }
  SUBCASE("constant input is degenerate") {
    std::vector<double> x(3 * 1000, 2.0);
    CHECK_THROWS_AS(mardia_tests(x, 3), DegenerateData);
  }
  SUBCASE("too few samples") {
    std::vector<double> x(3 * 90, 1.0);
    CHECK_THROWS_AS(mardia_tests(x, 3), DomainError);
  }
}

TEST_CASE("empirical covariance") {
  SUBCASE("two points") {
    const std::vector<double> x{1.0, 2.0, -1.0, 4.0, 0.0, 1.0};
    const CovarianceEstimate c = empirical_cov(x, 3);
    const auto ev = symmetric_eigenvalues(c.covariance);
    CHECK(ev[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(ev[1] == doctest::Approx(0.0).scale(1.0));
    CHECK(ev[2] == doctest::Approx((9.0 + 4.0 + 4.0) / 2.0));
  }
  SUBCASE("standard normal") {
    RandomStream rng(8, 0);
    std::vector<double> x(3 * 100000);
    for (auto& v : x) v = rng.normal();
    const CovarianceEstimate c = empirical_cov(x, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(c.mean[i]) <= 4.0 / std::sqrt(100000.0));
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(c.covariance(i, j) == c.covariance(j, i));
        CHECK(std::abs(c.covariance(i, j) - (i == j ? 1.0 : 0.0)) <= 4.0 * c.std_error(i, j));
      }
    }
    // se of a variance is about sqrt(2/N), of a covariance sqrt(1/N)
    CHECK(c.std_error(0, 0) == doctest::Approx(std::sqrt(2.0 / 100000)).epsilon(0.05));
    CHECK(c.std_error(0, 1) == doctest::Approx(std::sqrt(1.0 / 100000)).epsilon(0.05));
  }
  SUBCASE("shift invariance") {
    // small integers with a power-of-two count keep every operation exact
    const std::vector<double> x{1, 4, 2, 7, 3, 1, 0, 5, 6, 2, 2, 3, 5, 5, 4, 0};
    std::vector<double> y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += (i % 2 ? 1000.0 : -64.0);
    CHECK(empirical_cov(x, 2).covariance == empirical_cov(y, 2).covariance);
  }
}

TEST_CASE("running moments merge") {
  RandomStream rng(9, 0);
  std::vector<double> x(1001);
  for (auto& v : x) v = rng.gamma(2.0);
  RunningMoments all, a, b;
  for (std::size_t i = 0; i < x.size(); ++i) {
    all.push(x[i]);
    (i < 400 ? a : b).push(x[i]);
  }
  a.merge(b);
  CHECK(a.count == all.count);
  CHECK(a.mean == doctest::Approx(all.mean).epsilon(1e-13));
  CHECK(a.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  CHECK(all.mean == doctest::Approx(mean).epsilon(1e-13));
  RunningMoments empty;
  empty.merge(all);
  CHECK(empty.mean == all.mean);
}

TEST_CASE("summarize") {
  RandomStream rng(10, 0);
  const MomentData md = moments(RadialLaw::two_point(1.0, 2.0, 0.5));
  std::vector<double> raw(5000);
  for (auto& v : raw) v = 50.0 + 1.5 * std::sqrt(20.0) * rng.normal();
  const EmpiricalSummary s = summarize(normalize_clt(CltKind::Clt2, raw, 20, 1e6, md));
  CHECK(s.count == 5000);
  CHECK_FALSE(s.ks_distance.has_value());
  CHECK(s.covariance(0, 0) == doctest::Approx(2.25).epsilon(0.1));

  std::vector<double> mv(3 * 4000);
  for (auto& v : mv) v = rng.normal();
  CltStatistic stat;
  stat.kind = CltKind::Clt4;
  stat.dimension = 3;
  stat.values = mv;
  const EmpiricalSummary m = summarize(stat);
  CHECK(m.mardia_skew.has_value());
  CHECK(m.mean.dim() == 3);
  CHECK(symmetric_eigenvalues(m.covariance)[0] >= -1e-10);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(m.covariance(i, j) == m.covariance(j, i));
}
