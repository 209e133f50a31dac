#pragma once

// Group-case engine: U_p-radial random matrices on M_{p,q} and the random walk
// S_n = X_1 + ... + X_n observed through phi_p(S_n)^2 = S_n^* S_n.

#include <span>
#include <vector>

#include "radwalk/cone_linalg.hpp"
#include "radwalk/radial_laws.hpp"
#include "radwalk/random.hpp"

namespace radwalk {

/// Haar-distributed p x q frame (Q^* Q = I_q): Gaussian matrix followed by a
/// thin QR factorization with positive R diagonal.
Matrix sample_stiefel_frame(int p, int q, Field field, RandomStream& rng);

/// X = Q s with Q a Haar frame and s ~ law; phi_p(X) = s.
Matrix sample_radial_matrix(const RadialLaw& law, int p, RandomStream& rng);

/// phi_p(x) = (x^* x)^{1/2}.
PsdMatrix radial_part(const Matrix& x, Field field);

/// G^* G for G a dof x q standard Gaussian matrix (E|g_ij|^2 = 1). Uses the
/// Bartlett decomposition once dof is large compared with q.
HermitianMatrix gaussian_gram(int dof, int q, Field field, RandomStream& rng);

/// W_p of the Wishart limit: G^* G / p, so that the mean is I_q.
PsdMatrix wishart_sample(int p, int q, Field field, RandomStream& rng);

enum class WalkMethod {
  Auto,      ///< Explicit for small p*q, Reduced otherwise
  Explicit,  ///< materializes S_n in M_{p,q}; O(pq^2) per step
  Reduced,   ///< exact q x q recursion, cost independent of p
};

struct GroupWalkConfig {
  int p = 1;
  int q = 1;
  Field field = Field::Real;
  int n_steps = 1;
  RadialLaw law;
  std::vector<int> checkpoints;  ///< sorted, each in [0, n_steps]; empty means {n_steps}
  WalkMethod method = WalkMethod::Auto;
};

struct WalkTrajectory {
  std::vector<int> steps;
  std::vector<HermitianMatrix> values;  ///< phi(S_n)^2 at each checkpoint
};

/// Validates checkpoints against n_steps and returns the effective list.
std::vector<int> normalized_checkpoints(std::span<const int> checkpoints, int n_steps);

WalkMethod resolve_method(WalkMethod method, int p, int q);

WalkTrajectory run_group_walk(const GroupWalkConfig& cfg, RandomStream& rng);

/// q = 1 fast path: writes |S_n|^2 at each checkpoint into out.
void run_scalar_group_walk(const RadialLaw& law, int p, Field field, std::span<const int> checkpoints,
                           WalkMethod method, RandomStream& rng, std::span<double> out);

}  // namespace radwalk
