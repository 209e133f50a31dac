#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace radwalk {

/// Coarse classification used by the CLI to pick an exit code.
enum class ErrorKind {
  Config,     ///< invalid experiment configuration
  Numerical,  ///< non-convergence, cone violation, sampler stall, overflow
  Domain,     ///< argument outside the supported range of an operation
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& what) : Error(ErrorKind::Numerical, what) {}
};

/// A matrix that should lie in the PSD cone has an eigenvalue below tolerance.
class ConeViolation : public NumericalFailure {
 public:
  ConeViolation(const std::string& what, double min_eigenvalue)
      : NumericalFailure(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class SamplerStall : public NumericalFailure {
 public:
  SamplerStall(const std::string& what, double mu, int q) : NumericalFailure(what), mu_(mu), q_(q) {}
  double mu() const noexcept { return mu_; }
  int q() const noexcept { return q_; }

 private:
  double mu_;
  int q_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

class RangeError : public DomainError {
 public:
  using DomainError::DomainError;
};

class UnsupportedField : public DomainError {
 public:
  using DomainError::DomainError;
};

class ShapeMismatch : public DomainError {
 public:
  using DomainError::DomainError;
};

class DegenerateData : public DomainError {
 public:
  using DomainError::DomainError;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : Error(ErrorKind::Config, field.empty() ? message : field + ": " + message), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& message)
      : Error(ErrorKind::Io, path + ": " + message), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Wraps an error raised inside one Monte Carlo replicate.
class ReplicateFailure : public Error {
 public:
  ReplicateFailure(ErrorKind kind, std::size_t replicate, const std::string& what)
      : Error(kind, "replicate " + std::to_string(replicate) + ": " + what), replicate_(replicate) {}
  std::size_t replicate() const noexcept { return replicate_; }

 private:
  std::size_t replicate_;
};

}  // namespace radwalk
