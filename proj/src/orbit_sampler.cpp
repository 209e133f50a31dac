#include "radwalk/orbit_sampler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "radwalk/errors.hpp"
#include "radwalk/random_matrix.hpp"

namespace radwalk {

namespace {

// Bartlett is used for the Gram matrix once dof exceeds this multiple of q.
constexpr int kBartlettFactor = 4;

void require_frame_shape(int p, int q) {
  if (q < 1 || p < q)
    throw DomainError("orbit sampler needs p >= q >= 1, got p = " + std::to_string(p) + ", q = " + std::to_string(q));
}

[[noreturn]] void overflow(int step) {
  throw NumericalFailure("group walk: non-finite state at step " + std::to_string(step));
}

double inv_sqrt_clamped(double x) { return x > 0.0 ? 1.0 / std::sqrt(x) : 0.0; }

}  // namespace

Matrix sample_stiefel_frame(int p, int q, Field field, RandomStream& rng) {
  require_frame_shape(p, q);
  Matrix g = gaussian_matrix(p, q, field, rng);
  // Classical Gram-Schmidt with one reorthogonalization pass (CGS2); the
  // implied R has a positive diagonal.
  for (int j = 0; j < q; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < j; ++k) {
        Scalar r = 0.0;
        for (int i = 0; i < p; ++i) r += std::conj(g(i, k)) * g(i, j);
        for (int i = 0; i < p; ++i) g(i, j) -= r * g(i, k);
      }
    }
    double norm = 0.0;
    for (int i = 0; i < p; ++i) norm += std::norm(g(i, j));
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw NumericalFailure("sample_stiefel_frame: rank-deficient Gaussian draw");
    for (int i = 0; i < p; ++i) g(i, j) /= norm;
  }
  return g;
}

Matrix sample_radial_matrix(const RadialLaw& law, int p, RandomStream& rng) {
  const Matrix frame = sample_stiefel_frame(p, law.q(), law.field(), rng);
  const PsdMatrix s = sample_law(law, rng);
  return frame * s.matrix();
}

PsdMatrix radial_part(const Matrix& x, Field field) {
  return psd_sqrt_of(HermitianMatrix(adjoint_times(x, x), field));
}

HermitianMatrix gaussian_gram(int dof, int q, Field field, RandomStream& rng) {
  if (dof < 0 || q < 1) throw DomainError("gaussian_gram: need dof >= 0 and q >= 1");
  if (dof < kBartlettFactor * q) {
    const Matrix g = gaussian_matrix(dof, q, field, rng);
    return HermitianMatrix(adjoint_times(g, g), field);
  }
  // Bartlett: G^* G has the law of L L^* with L lower triangular,
  // |L_ii|^2 ~ Gamma(d (dof - i)/2, 2/d) and standard off-diagonal entries.
  const double d = real_dimension(field);
  Matrix l(q, q);
  for (int i = 0; i < q; ++i) {
    l(i, i) = std::sqrt(rng.gamma(0.5 * d * (dof - i), 2.0 / d));
    for (int j = 0; j < i; ++j) l(i, j) = gaussian_entry(field, rng);
  }
  return HermitianMatrix(l * l.adjoint(), field);
}

PsdMatrix wishart_sample(int p, int q, Field field, RandomStream& rng) {
  if (p < 1) throw DomainError("wishart_sample: p must be >= 1");
  HermitianMatrix w = gaussian_gram(p, q, field, rng);
  w *= 1.0 / p;
  return trusted_psd(std::move(w));
}

std::vector<int> normalized_checkpoints(std::span<const int> checkpoints, int n_steps) {
  if (n_steps < 0) throw DomainError("walk: n_steps must be >= 0");
  if (checkpoints.empty()) return {n_steps};
  std::vector<int> out(checkpoints.begin(), checkpoints.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 0 || out[i] > n_steps)
      throw DomainError("walk: checkpoint " + std::to_string(out[i]) + " outside [0, " + std::to_string(n_steps) + "]");
    if (i > 0 && out[i] <= out[i - 1]) throw DomainError("walk: checkpoints must be strictly increasing");
  }
  return out;
}

WalkMethod resolve_method(WalkMethod method, int p, int q) {
  if (method != WalkMethod::Auto) return method;
  return static_cast<long long>(p) * q <= 64 ? WalkMethod::Explicit : WalkMethod::Reduced;
}

// ---------------------------------------------------------------------------
// Scalar fast path

void run_scalar_group_walk(const RadialLaw& law, int p, Field field, std::span<const int> checkpoints,
                           WalkMethod method, RandomStream& rng, std::span<double> out) {
  require_frame_shape(p, 1);
  if (law.q() != 1) throw ShapeMismatch("scalar group walk needs a q = 1 law");
  if (out.size() != checkpoints.size()) throw ShapeMismatch("scalar group walk: output size mismatch");
  if (checkpoints.empty()) return;
  const int n_steps = checkpoints.back();
  std::size_t next = 0;
  while (next < checkpoints.size() && checkpoints[next] == 0) out[next++] = 0.0;

  if (resolve_method(method, p, 1) == WalkMethod::Explicit) {
    std::vector<Scalar> sum(static_cast<std::size_t>(p)), dir(static_cast<std::size_t>(p));
    for (int step = 1; step <= n_steps; ++step) {
      double norm = 0.0;
      for (auto& z : dir) {
        z = gaussian_entry(field, rng);
        norm += std::norm(z);
      }
      const double s = sample_scalar(law, rng) / std::sqrt(norm);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += s * dir[i];
      if (checkpoints[next] == step) {
        double phi2 = 0.0;
        for (const auto& z : sum) phi2 += std::norm(z);
        if (!std::isfinite(phi2)) overflow(step);
        out[next++] = phi2;
      }
    }
    return;
  }

  // Reduced path: by U_p invariance only the component of the new direction
  // along S_n matters. With g_1 the first coordinate of a Gaussian vector and
  // rest = sum_{k>=2} |g_k|^2, the cosine is Re(g_1) / sqrt(|g_1|^2 + rest) and
  // |S_{n+1}|^2 = |S_n|^2 + s^2 + 2 s |S_n| cos.
  // Equivalently (1 + cos) / 2 ~ Beta(k, k) with k = (dp - 1) / 2; for small
  // integer k that is the k-th order statistic of 2k - 1 uniforms.
  const double d = real_dimension(field);
  const double rest_shape = 0.5 * d * (p - 1);
  const int dp = static_cast<int>(d) * p;
  const int order_k = (dp - 1) % 2 == 0 ? (dp - 1) / 2 : 0;
  constexpr int kMaxOrderK = 8;
  std::array<double, 2 * kMaxOrderK - 1> pool{};
  auto draw_cosine = [&]() {
    if (order_k >= 1 && order_k <= kMaxOrderK) {
      const int m = 2 * order_k - 1;
      for (int i = 0; i < m; ++i) pool[i] = rng.uniform();
      std::nth_element(pool.begin(), pool.begin() + (order_k - 1), pool.begin() + m);
      return 2.0 * pool[order_k - 1] - 1.0;
    }
    const Scalar g1 = gaussian_entry(field, rng);
    const double rest = rest_shape > 0.0 ? rng.gamma(rest_shape, 2.0 / d) : 0.0;
    return g1.real() / std::sqrt(std::norm(g1) + rest);
  };
  double phi2 = 0.0;
  for (int step = 1; step <= n_steps; ++step) {
    const double s = sample_scalar(law, rng);
    const double cosine = draw_cosine();
    phi2 = std::max(0.0, phi2 + s * s + 2.0 * s * std::sqrt(phi2) * cosine);
    if (checkpoints[next] == step) {
      if (!std::isfinite(phi2)) overflow(step);
      out[next++] = phi2;
    }
  }
}

// ---------------------------------------------------------------------------
// Matrix walks

namespace {

WalkTrajectory run_explicit(const GroupWalkConfig& cfg, const std::vector<int>& cps, RandomStream& rng) {
  WalkTrajectory traj;
  Matrix sum(cfg.p, cfg.q);
  std::size_t next = 0;
  auto record = [&](int step) {
    traj.steps.push_back(step);
    traj.values.emplace_back(adjoint_times(sum, sum), cfg.field);
  };
  while (next < cps.size() && cps[next] == 0) {
    record(0);
    ++next;
  }
  for (int step = 1; next < cps.size(); ++step) {
    sum += sample_radial_matrix(cfg.law, cfg.p, rng);
    if (cps[next] == step) {
      if (!sum.all_finite()) overflow(step);
      record(step);
      ++next;
    }
  }
  return traj;
}

// With S_n = V R (V orthonormal p x q, R = phi(S_n)) and a Haar frame U whose
// coordinates along (V, V^perp) are (A, B):
//   S_{n+1}^* S_{n+1} = (R + A s)^* (R + A s) + s B^* B s.
// A Haar frame is G (G^* G)^{-1/2}; split G = (G_1; G_2) with G_1 q x q, so
// A = G_1 N and B^* B = N (G_2^* G_2) N with N = (G^* G)^{-1/2}.
WalkTrajectory run_reduced(const GroupWalkConfig& cfg, const std::vector<int>& cps, RandomStream& rng) {
  const int q = cfg.q;
  const Field field = cfg.field;
  WalkTrajectory traj;
  HermitianMatrix phi2 = HermitianMatrix::zero(q, field);
  std::size_t next = 0;
  while (next < cps.size() && cps[next] == 0) {
    traj.steps.push_back(0);
    traj.values.push_back(phi2);
    ++next;
  }
  for (int step = 1; next < cps.size(); ++step) {
    const PsdMatrix s = sample_law(cfg.law, rng);
    const Matrix r = psd_sqrt_of(phi2).matrix();
    const Matrix g1 = gaussian_matrix(q, q, field, rng);
    const HermitianMatrix tail = gaussian_gram(cfg.p - q, q, field, rng);
    const HermitianMatrix gram(adjoint_times(g1, g1) + tail.matrix(), field);
    const Matrix n = spectral_apply(eig_herm(gram), field, inv_sqrt_clamped).matrix();
    const Matrix a = g1 * n;
    const Matrix head = r + a * s.matrix();
    const Matrix b_gram = n * tail.matrix() * n;
    phi2 = HermitianMatrix(adjoint_times(head, head) + s.matrix() * b_gram * s.matrix(), field);
    if (cps[next] == step) {
      if (!phi2.matrix().all_finite()) overflow(step);
      traj.steps.push_back(step);
      traj.values.push_back(phi2);
      ++next;
    }
  }
  return traj;
}

}  // namespace

WalkTrajectory run_group_walk(const GroupWalkConfig& cfg, RandomStream& rng) {
  require_frame_shape(cfg.p, cfg.q);
  if (cfg.law.q() != cfg.q || cfg.law.field() != cfg.field)
    throw ShapeMismatch("group walk: law dimension/field does not match the configuration");
  const std::vector<int> cps = normalized_checkpoints(cfg.checkpoints, cfg.n_steps);

  if (cfg.q == 1) {
    std::vector<double> out(cps.size());
    run_scalar_group_walk(cfg.law, cfg.p, cfg.field, cps, cfg.method, rng, out);
    WalkTrajectory traj;
    traj.steps = cps;
    for (double v : out) traj.values.push_back(HermitianMatrix::diagonal(std::span<const double>(&v, 1), cfg.field));
    return traj;
  }
  return resolve_method(cfg.method, cfg.p, cfg.q) == WalkMethod::Explicit ? run_explicit(cfg, cps, rng)
                                                                         : run_reduced(cfg, cps, rng);
}

}  // namespace radwalk
