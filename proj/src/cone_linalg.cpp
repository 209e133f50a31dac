#include "radwalk/cone_linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "radwalk/errors.hpp"

namespace radwalk {

namespace {

constexpr int kMaxJacobiSweeps = 100;

std::string describe(const Matrix& a) {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (int i = 0; i < a.rows(); ++i) {
    os << (i ? "; " : "");
    for (int j = 0; j < a.cols(); ++j) os << (j ? ", " : "") << a(i, j);
  }
  os << "]";
  return os.str();
}

double off_diagonal_sq(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j) s += std::norm(a(i, j));
  return s;
}

}  // namespace

std::string to_string(Field f) { return f == Field::Real ? "real" : "complex"; }

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(int rows, int cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, Scalar{0.0, 0.0}) {}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  const int n = static_cast<int>(values.size());
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = values[i];
  return m;
}

Matrix Matrix::adjoint() const {
  Matrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = std::conj((*this)(i, j));
  return t;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](const Scalar& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double factor) {
  for (auto& z : data_) z *= factor;
  return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      const Scalar aik = a(i, k);
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Matrix adjoint_times(const Matrix& a, const Matrix& b) {
  Matrix c(a.cols(), b.cols());
  for (int k = 0; k < a.rows(); ++k)
    for (int i = 0; i < a.cols(); ++i) {
      const Scalar aki = std::conj(a(k, i));
      for (int j = 0; j < b.cols(); ++j) c(i, j) += aki * b(k, j);
    }
  return c;
}

double frob_norm(const Matrix& a) {
  double s = 0.0;
  for (const auto& z : a.data()) s += std::norm(z);
  return std::sqrt(s);
}

double real_inner(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t k = 0; k < da.size(); ++k) s += (std::conj(da[k]) * db[k]).real();
  return s;
}

// ---------------------------------------------------------------------------
// HermitianMatrix

HermitianMatrix::HermitianMatrix(const Matrix& m, Field field) : m_(m.rows(), m.cols()), field_(field) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw ShapeMismatch("hermitian matrix must be square with q >= 1, got " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()));
  const int q = m.rows();
  for (int i = 0; i < q; ++i) {
    m_(i, i) = m(i, i).real();
    for (int j = i + 1; j < q; ++j) {
      Scalar z = 0.5 * (m(i, j) + std::conj(m(j, i)));
      if (field == Field::Real) z = z.real();
      m_(i, j) = z;
      m_(j, i) = std::conj(z);
    }
  }
}

HermitianMatrix HermitianMatrix::zero(int q, Field field) { return HermitianMatrix(Matrix(q, q), field); }

HermitianMatrix HermitianMatrix::identity(int q, Field field) { return HermitianMatrix(Matrix::identity(q), field); }

HermitianMatrix HermitianMatrix::diagonal(std::span<const double> values, Field field) {
  return HermitianMatrix(Matrix::diagonal(values), field);
}

HermitianMatrix& HermitianMatrix::operator+=(const HermitianMatrix& other) {
  m_ += other.m_;
  return *this;
}

HermitianMatrix& HermitianMatrix::operator-=(const HermitianMatrix& other) {
  m_ -= other.m_;
  return *this;
}

HermitianMatrix& HermitianMatrix::operator*=(double factor) {
  m_ *= factor;
  return *this;
}

HermitianMatrix HermitianMatrix::squared() const { return HermitianMatrix(m_ * m_, field_); }

// ---------------------------------------------------------------------------
// PsdMatrix

PsdMatrix::PsdMatrix(const HermitianMatrix& a, double tol) : base_(clamp_psd(a, tol).base_) {}

PsdMatrix PsdMatrix::zero(int q, Field field) { return PsdMatrix(Trusted{}, HermitianMatrix::zero(q, field)); }

PsdMatrix PsdMatrix::identity(int q, Field field) {
  return PsdMatrix(Trusted{}, HermitianMatrix::identity(q, field));
}

PsdMatrix PsdMatrix::diagonal(std::span<const double> values, Field field) {
  return PsdMatrix(HermitianMatrix::diagonal(values, field));
}

PsdMatrix PsdMatrix::scalar(double value, Field field) {
  const double v[1] = {value};
  return diagonal(v, field);
}

PsdMatrix trusted_psd(HermitianMatrix a) {
  for (int i = 0; i < a.q(); ++i)
    if (!(a(i, i).real() >= -PsdMatrix::kDefaultTolerance * (1.0 + frob_norm(a))))
      throw ConeViolation("trusted PSD matrix has negative diagonal " + describe(a.matrix()), a(i, i).real());
  return PsdMatrix(PsdMatrix::Trusted{}, std::move(a));
}

// ---------------------------------------------------------------------------
// Eigendecomposition

EigenDecomposition eig_herm(const HermitianMatrix& a) {
  const int n = a.q();
  Matrix A = a.matrix();
  Matrix V = Matrix::identity(n);

  if (!A.all_finite()) throw NumericalFailure("eig_herm: non-finite entries in " + describe(a.matrix()));

  const double scale = frob_norm(A);
  const double target = std::pow(1e-15 * scale, 2);
  int sweep = 0;
  while (scale > 0.0 && off_diagonal_sq(A) > target) {
    if (++sweep > kMaxJacobiSweeps)
      throw NumericalFailure("eig_herm: Jacobi did not converge for " + describe(a.matrix()));
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const Scalar c = A(p, q);
        const double abs_c = std::abs(c);
        if (abs_c == 0.0) continue;
        const double app = A(p, p).real();
        const double aqq = A(q, q).real();
        // Phase rotation makes the (p,q) entry real, then a real rotation zeros it.
        const Scalar phase = c / abs_c;
        const double theta = (aqq - app) / (2.0 * abs_c);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        const Scalar g00 = cs;
        const Scalar g01 = sn;
        const Scalar g10 = -sn * std::conj(phase);
        const Scalar g11 = cs * std::conj(phase);

        for (int k = 0; k < n; ++k) {
          const Scalar akp = A(k, p);
          const Scalar akq = A(k, q);
          A(k, p) = akp * g00 + akq * g10;
          A(k, q) = akp * g01 + akq * g11;
        }
        for (int k = 0; k < n; ++k) {
          const Scalar apk = A(p, k);
          const Scalar aqk = A(q, k);
          A(p, k) = std::conj(g00) * apk + std::conj(g10) * aqk;
          A(q, k) = std::conj(g01) * apk + std::conj(g11) * aqk;
        }
        A(p, q) = 0.0;
        A(q, p) = 0.0;
        A(p, p) = A(p, p).real();
        A(q, q) = A(q, q).real();
        for (int k = 0; k < n; ++k) {
          const Scalar vkp = V(k, p);
          const Scalar vkq = V(k, q);
          V(k, p) = vkp * g00 + vkq * g10;
          V(k, q) = vkp * g01 + vkq * g11;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return A(i, i).real() < A(j, j).real(); });

  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (int c = 0; c < n; ++c) {
    const int src = order[c];
    out.values[c] = A(src, src).real();
    double max_abs = 0.0;
    for (int k = 0; k < n; ++k) max_abs = std::max(max_abs, std::abs(V(k, src)));
    Scalar fix = 1.0;
    for (int k = 0; k < n; ++k) {
      const double m = std::abs(V(k, src));
      if (m > 1e-8 * max_abs) {
        fix = std::conj(V(k, src)) / m;
        break;
      }
    }
    for (int k = 0; k < n; ++k) {
      Scalar z = V(k, src) * fix;
      if (a.field() == Field::Real) z = z.real();
      out.vectors(k, c) = z;
    }
  }
  return out;
}

HermitianMatrix spectral_apply(const EigenDecomposition& e, Field field, double (*f)(double)) {
  const int n = static_cast<int>(e.values.size());
  Matrix m(n, n);
  for (int k = 0; k < n; ++k) {
    const double fk = f(e.values[k]);
    if (fk == 0.0) continue;
    for (int i = 0; i < n; ++i) {
      const Scalar uik = e.vectors(i, k) * fk;
      for (int j = 0; j < n; ++j) m(i, j) += uik * std::conj(e.vectors(j, k));
    }
  }
  return HermitianMatrix(m, field);
}

namespace {

void check_cone(const HermitianMatrix& a, const EigenDecomposition& e, double tol) {
  const double bound = -tol * (1.0 + frob_norm(a));
  if (!e.values.empty() && e.values.front() < bound) {
    std::ostringstream os;
    os.precision(17);
    os << "cone violation: min eigenvalue " << e.values.front() << " < " << bound << " for "
       << describe(a.matrix());
    throw ConeViolation(os.str(), e.values.front());
  }
}

double clamp_zero(double x) { return x > 0.0 ? x : 0.0; }
double clamped_sqrt(double x) { return x > 0.0 ? std::sqrt(x) : 0.0; }

}  // namespace

PsdMatrix clamp_psd(const HermitianMatrix& a, double tol) {
  const EigenDecomposition e = eig_herm(a);
  check_cone(a, e, tol);
  if (e.values.front() >= 0.0) return PsdMatrix(PsdMatrix::Trusted{}, a);
  return PsdMatrix(PsdMatrix::Trusted{}, spectral_apply(e, a.field(), clamp_zero));
}

PsdMatrix psd_sqrt(const PsdMatrix& a) {
  const EigenDecomposition e = eig_herm(a.base());
  return PsdMatrix(PsdMatrix::Trusted{}, spectral_apply(e, a.field(), clamped_sqrt));
}

PsdMatrix psd_sqrt_of(const HermitianMatrix& a, double tol) {
  const EigenDecomposition e = eig_herm(a);
  check_cone(a, e, tol);
  return PsdMatrix(PsdMatrix::Trusted{}, spectral_apply(e, a.field(), clamped_sqrt));
}

// ---------------------------------------------------------------------------
// Scalars of hermitian matrices

double frob_norm(const HermitianMatrix& a) { return frob_norm(a.matrix()); }
double frob_norm(const PsdMatrix& a) { return frob_norm(a.matrix()); }

double trace(const HermitianMatrix& a) {
  double t = 0.0;
  for (int i = 0; i < a.q(); ++i) t += a(i, i).real();
  return t;
}

double trace(const PsdMatrix& a) { return trace(a.base()); }

double det_herm(const HermitianMatrix& a) {
  const auto e = eig_herm(a);
  double d = 1.0;
  for (double v : e.values) d *= v;
  return d;
}

double min_eigenvalue(const HermitianMatrix& a) { return eig_herm(a).values.front(); }

// ---------------------------------------------------------------------------
// Vectorization

std::size_t herm_dim(int q, Field field) {
  const auto uq = static_cast<std::size_t>(q);
  return static_cast<std::size_t>(real_dimension(field)) * uq * (uq - 1) / 2 + uq;
}

void vectorize_into(const HermitianMatrix& a, std::span<double> out) {
  const int q = a.q();
  std::size_t k = 0;
  for (int i = 0; i < q; ++i) out[k++] = a(i, i).real();
  for (int i = 0; i < q; ++i)
    for (int j = i + 1; j < q; ++j) {
      out[k++] = std::sqrt(2.0) * a(i, j).real();
      if (a.field() == Field::Complex) out[k++] = std::sqrt(2.0) * a(i, j).imag();
    }
}

HermVector vectorize_herm(const HermitianMatrix& a) {
  HermVector v{std::vector<double>(herm_dim(a.q(), a.field()))};
  vectorize_into(a, v.values);
  return v;
}

HermitianMatrix devectorize_herm(std::span<const double> coords, int q, Field field) {
  if (coords.size() != herm_dim(q, field))
    throw ShapeMismatch("devectorize_herm: expected " + std::to_string(herm_dim(q, field)) + " coordinates, got " +
                        std::to_string(coords.size()));
  Matrix m(q, q);
  std::size_t k = 0;
  for (int i = 0; i < q; ++i) m(i, i) = coords[k++];
  for (int i = 0; i < q; ++i)
    for (int j = i + 1; j < q; ++j) {
      const double re = coords[k++] / std::sqrt(2.0);
      const double im = field == Field::Complex ? coords[k++] / std::sqrt(2.0) : 0.0;
      m(i, j) = Scalar(re, im);
      m(j, i) = Scalar(re, -im);
    }
  return HermitianMatrix(m, field);
}

// ---------------------------------------------------------------------------
// Real helpers

std::vector<double> symmetric_eigenvalues(const RealMatrix& a) {
  const int n = static_cast<int>(a.rows());
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = a(i, j);
  return eig_herm(HermitianMatrix(m, Field::Real)).values;
}

RealMatrix cholesky(const RealMatrix& a) {
  const std::size_t n = a.rows();
  RealMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw DegenerateData("cholesky: matrix is not positive definite (pivot " + std::to_string(j) + ")");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

}  // namespace radwalk
