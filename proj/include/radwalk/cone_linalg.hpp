#pragma once

// Dense hermitian linear algebra on small q x q matrices over R (d = 1) and
// C (d = 2). Real matrices are stored as complex matrices with zero imaginary
// parts, so every routine below works for both fields.

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace radwalk {

using Scalar = std::complex<double>;

enum class Field { Real = 1, Complex = 2 };

/// Real dimension d of the field.
constexpr int real_dimension(Field f) { return static_cast<int>(f); }

std::string to_string(Field f);

/// Dense row-major matrix with complex entries.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);

  static Matrix identity(int n);
  static Matrix diagonal(std::span<const double> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  Scalar& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
  const Scalar& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

  std::span<Scalar> data() { return data_; }
  std::span<const Scalar> data() const { return data_; }

  Matrix adjoint() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double factor);

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double f) { return a *= f; }
  friend Matrix operator*(double f, Matrix a) { return a *= f; }
  friend Matrix operator*(const Matrix& a, const Matrix& b);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Scalar> data_;
};

/// a^* b without forming the adjoint.
Matrix adjoint_times(const Matrix& a, const Matrix& b);

/// Frobenius norm of an arbitrary matrix.
double frob_norm(const Matrix& a);

/// Real inner product <a, b> = Re tr(a^* b).
double real_inner(const Matrix& a, const Matrix& b);

/// Hermitian q x q matrix. Construction symmetrizes, A <- (A + A^*)/2, and
/// drops imaginary parts for the real field.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  HermitianMatrix(const Matrix& m, Field field);

  static HermitianMatrix zero(int q, Field field);
  static HermitianMatrix identity(int q, Field field);
  static HermitianMatrix diagonal(std::span<const double> values, Field field);

  int q() const { return m_.rows(); }
  Field field() const { return field_; }
  const Matrix& matrix() const { return m_; }
  const Scalar& operator()(int i, int j) const { return m_(i, j); }

  HermitianMatrix& operator+=(const HermitianMatrix& other);
  HermitianMatrix& operator-=(const HermitianMatrix& other);
  HermitianMatrix& operator*=(double factor);
  friend HermitianMatrix operator+(HermitianMatrix a, const HermitianMatrix& b) { return a += b; }
  friend HermitianMatrix operator-(HermitianMatrix a, const HermitianMatrix& b) { return a -= b; }
  friend HermitianMatrix operator*(HermitianMatrix a, double f) { return a *= f; }
  friend HermitianMatrix operator*(double f, HermitianMatrix a) { return a *= f; }

  /// a^2 (hermitian for hermitian a).
  HermitianMatrix squared() const;

 private:
  Matrix m_;
  Field field_ = Field::Real;
};

/// Element of the cone Pi_q of positive semidefinite matrices. Eigenvalues in
/// [-eps_psd (1 + |A|_F), 0) are clamped to zero; anything below throws.
class PsdMatrix {
 public:
  static constexpr double kDefaultTolerance = 1e-10;

  PsdMatrix() = default;
  explicit PsdMatrix(const HermitianMatrix& a, double tol = kDefaultTolerance);

  static PsdMatrix zero(int q, Field field);
  static PsdMatrix identity(int q, Field field);
  static PsdMatrix diagonal(std::span<const double> values, Field field);
  /// Scalar element of Pi_1.
  static PsdMatrix scalar(double value, Field field = Field::Real);

  const HermitianMatrix& base() const { return base_; }
  int q() const { return base_.q(); }
  Field field() const { return base_.field(); }
  const Matrix& matrix() const { return base_.matrix(); }
  const Scalar& operator()(int i, int j) const { return base_(i, j); }

  HermitianMatrix squared() const { return base_.squared(); }

 private:
  struct Trusted {};
  PsdMatrix(Trusted, HermitianMatrix a) : base_(std::move(a)) {}

  friend PsdMatrix clamp_psd(const HermitianMatrix& a, double tol);
  friend PsdMatrix psd_sqrt(const PsdMatrix& a);
  friend PsdMatrix psd_sqrt_of(const HermitianMatrix& a, double tol);
  friend PsdMatrix trusted_psd(HermitianMatrix a);

  HermitianMatrix base_;
};

struct EigenDecomposition {
  std::vector<double> values;  ///< ascending
  Matrix vectors;              ///< columns are eigenvectors, unitary
};

/// Cyclic complex Jacobi. Eigenvalues ascending; each eigenvector is scaled so
/// that its first non-negligible component is real and positive.
EigenDecomposition eig_herm(const HermitianMatrix& a);

/// U diag(f(lambda)) U^* for a decomposition.
HermitianMatrix spectral_apply(const EigenDecomposition& e, Field field, double (*f)(double));

PsdMatrix clamp_psd(const HermitianMatrix& a, double tol = PsdMatrix::kDefaultTolerance);
PsdMatrix psd_sqrt(const PsdMatrix& a);
/// clamp_psd followed by psd_sqrt, sharing one eigendecomposition.
PsdMatrix psd_sqrt_of(const HermitianMatrix& a, double tol = PsdMatrix::kDefaultTolerance);
/// Wraps a matrix already known to be PSD (e.g. a^* a) after a cheap check of
/// the diagonal; used on hot paths that build PSD matrices by construction.
PsdMatrix trusted_psd(HermitianMatrix a);

double frob_norm(const HermitianMatrix& a);
double frob_norm(const PsdMatrix& a);
double trace(const HermitianMatrix& a);
double trace(const PsdMatrix& a);
double det_herm(const HermitianMatrix& a);
double min_eigenvalue(const HermitianMatrix& a);

/// Coordinates of H_q in an orthonormal basis: diagonal entries first, then
/// for each i < j (row-major) sqrt(2) Re a_ij and, for C, sqrt(2) Im a_ij.
struct HermVector {
  std::vector<double> values;
  std::size_t dim() const { return values.size(); }
};

/// d q (q - 1)/2 + q.
std::size_t herm_dim(int q, Field field);
HermVector vectorize_herm(const HermitianMatrix& a);
/// Writes the coordinates into out (size herm_dim) without allocating.
void vectorize_into(const HermitianMatrix& a, std::span<double> out);
HermitianMatrix devectorize_herm(std::span<const double> coords, int q, Field field);

/// Small dense real matrix, row-major; used for covariance tables.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> data() const { return data_; }

  bool operator==(const RealMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Eigenvalues of a real symmetric matrix (ascending), via eig_herm.
std::vector<double> symmetric_eigenvalues(const RealMatrix& a);

/// Cholesky factor L (lower) of a symmetric positive definite matrix; throws
/// DegenerateData if a pivot is not positive.
RealMatrix cholesky(const RealMatrix& a);

}  // namespace radwalk
