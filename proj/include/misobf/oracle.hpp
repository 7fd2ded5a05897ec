#pragma once

// Independent checks used by the test suites: random beamformer search,
// random feasible covariances, and inertia counting.

#include "misobf/channel_model.hpp"

#include <cstdint>
#include <random>

namespace misobf {

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seedable generator. Streams with different ids are independent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), engine_(mix_seed(seed, stream)) {}

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  Vector normal_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }
  Matrix normal_matrix(Eigen::Index r, Eigen::Index c) {
    Matrix a(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
      for (Eigen::Index i = 0; i < r; ++i) a(i, j) = normal();
    return a;
  }
  Vector unit_vector(Eigen::Index n) {
    for (;;) {
      Vector v = normal_vector(n);
      const double nv = v.norm();
      if (nv > 1e-12) return v / nv;
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Best signal power h_uu^T b b^T h_uu found by sampling directions on the
/// sphere, each scaled to the largest power allowed by P_u and the budgets.
inline double brute_force_user(const MisoNetwork& net, std::size_t user, const InterferenceBudget& budget,
                               std::size_t samples, std::uint64_t seed, Vector* best_direction = nullptr) {
  require_valid(net);
  if (user >= net.users()) throw Error("brute_force_user: user index out of range");
  Rng rng(seed, 0x6272757465ULL);
  const auto t = net.t[user];
  const Vector& direct = net.direct(user);
  double best = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Vector u = rng.unit_vector(t);
    double power = net.P[user];
    for (std::size_t j = 0; j < net.users(); ++j) {
      if (j == user) continue;
      const double z2 = budget.get(user, j);
      const double leak = net.h[user][j].dot(u);
      if (leak * leak > 0.0 && std::isfinite(z2)) power = std::min(power, z2 / (leak * leak));
    }
    const double g = direct.dot(u);
    const double value = power * g * g;
    if (value > best) {
      best = value;
      if (best_direction) *best_direction = std::sqrt(power) * u;
    }
  }
  return best;
}

/// S_i = A_i^T A_i scaled to trace u_i P_i, A_i standard normal, u_i uniform.
inline CovarianceSet random_feasible_covariances(const MisoNetwork& net, std::uint64_t seed) {
  Rng rng(seed, 0x636f76ULL);
  CovarianceSet cov;
  for (std::size_t i = 0; i < net.users(); ++i) {
    const Matrix A = rng.normal_matrix(net.t[i], net.t[i]);
    Matrix S = A.transpose() * A;
    const double target = rng.uniform() * net.P[i];
    const double tr = S.trace();
    S *= tr > 0.0 ? target / tr : 0.0;
    cov.push_back(0.5 * (S + S.transpose()));
  }
  return cov;
}

/// Rate points of random beamformer sets: each user draws a direction on its
/// sphere and a power uniform in [0, P_i].
inline std::vector<RatePoint> random_beamformer_rates(const MisoNetwork& net, std::size_t samples, std::uint64_t seed) {
  require_valid(net);
  Rng rng(seed, 0x6265616dULL);
  const std::size_t m = net.users();
  std::vector<RatePoint> out;
  out.reserve(samples);
  std::vector<Vector> b(m);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < m; ++i) b[i] = std::sqrt(rng.uniform() * net.P[i]) * rng.unit_vector(net.t[i]);
    RatePoint r{std::vector<double>(m)};
    for (std::size_t i = 0; i < m; ++i) {
      double interference = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        const double g = net.h[j][i].dot(b[j]);
        interference += g * g;
      }
      const double g = net.h[i][i].dot(b[i]);
      r[i] = sud_rate(g * g, interference);
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// (pi, nu): counts of positive / negative eigenvalues, treating
/// |eta| <= 1e-10 * ||A||_2 as zero.
struct InertiaCount {
  int positive = 0;
  int negative = 0;
};

inline InertiaCount inertia(const Matrix& A) {
  if (!linalg::is_symmetric(A)) throw Error("inertia: matrix must be symmetric");
  InertiaCount ic;
  if (A.rows() == 0) return ic;
  const Vector ev = linalg::sym_eigvals(A);
  const double tol = 1e-10 * ev.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) > tol) ++ic.positive;
    else if (ev(i) < -tol) ++ic.negative;
  }
  return ic;
}

/// pi(H A H^T) <= pi(A) and nu(H A H^T) <= nu(A).
inline bool check_inertia_bound(const Matrix& H, const Matrix& A) {
  if (H.cols() != A.rows()) throw Error("check_inertia_bound: dimension mismatch");
  const auto outer = inertia(A);
  Matrix M = H * A * H.transpose();
  M = linalg::symmetrized(M);
  const auto inner = inertia(M);
  return inner.positive <= outer.positive && inner.negative <= outer.negative;
}

}  // namespace misobf
