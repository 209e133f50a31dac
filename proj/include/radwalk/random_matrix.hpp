#pragma once

#include <cmath>

#include "radwalk/cone_linalg.hpp"
#include "radwalk/random.hpp"

namespace radwalk {

/// Standard Gaussian entry over the field, normalized so E|g|^2 = 1.
inline Scalar gaussian_entry(Field field, RandomStream& rng) {
  if (field == Field::Real) return rng.normal();
  const double re = rng.normal();
  const double im = rng.normal();
  return Scalar(re, im) * std::sqrt(0.5);
}

inline Matrix gaussian_matrix(int rows, int cols, Field field, RandomStream& rng) {
  Matrix g(rows, cols);
  for (auto& z : g.data()) z = gaussian_entry(field, rng);
  return g;
}

}  // namespace radwalk
