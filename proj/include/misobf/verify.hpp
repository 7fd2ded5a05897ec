#pragma once

// Randomized property suites. Each suite draws seeded instances, checks one
// family of properties and reports the worst observed ratio of error to
// tolerance. Tolerances are multiplied by `tol_scale`; a negative scale makes
// every check fail, which is how the fault-injection tests exercise the
// failure path.

#include "misobf/completion.hpp"
#include "misobf/oracle.hpp"
#include "misobf/reduction.hpp"
#include "misobf/solver.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace misobf {

struct SuiteReport {
  std::string name;
  int trials = 0;
  int failures = 0;
  double worst = 0.0;  // max over checks of error / tolerance
  double seconds = 0.0;
  std::string first_failure;
  bool passed() const { return failures == 0 && trials > 0; }
};

struct SuiteConfig {
  std::uint64_t seed = 20090921;
  int trials = 0;  // 0 selects the suite default
  double tol_scale = 1.0;
};

struct RandomInstance {
  MisoNetwork net;
  std::size_t user = 0;
  InterferenceBudget budget;
};

struct InstanceShape {
  std::vector<int> users{2, 3, 4};
  int t_min = 2;
  int t_max = 6;
  bool force_reduction = false;  // t_user > m - 1
};

/// Standard-normal channels, P ~ U[0.5, 2], finite budgets
/// z_ij^2 = P_i ||h_ij||^2 * 10^U(-3, 0) on every pair.
inline RandomInstance random_instance(Rng& rng, const InstanceShape& shape = {}) {
  RandomInstance inst;
  const int m = shape.users[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(shape.users.size()) - 1))];
  const auto mu = static_cast<std::size_t>(m);
  inst.user = static_cast<std::size_t>(rng.uniform_int(0, m - 1));
  for (int i = 0; i < m; ++i) {
    int lo = shape.t_min;
    if (shape.force_reduction && static_cast<std::size_t>(i) == inst.user) lo = std::max(lo, m);
    inst.net.t.push_back(rng.uniform_int(lo, std::max(lo, shape.t_max)));
    inst.net.P.push_back(rng.uniform(0.5, 2.0));
  }
  inst.net.h.assign(mu, std::vector<Vector>(mu));
  for (std::size_t j = 0; j < mu; ++j)
    for (std::size_t i = 0; i < mu; ++i) inst.net.h[j][i] = rng.normal_vector(inst.net.t[j]);
  inst.budget = InterferenceBudget(mu);
  for (std::size_t i = 0; i < mu; ++i)
    for (std::size_t j = 0; j < mu; ++j)
      if (i != j) inst.budget.set(i, j, inst.net.P[i] * inst.net.h[i][j].squaredNorm() * std::pow(10.0, rng.uniform(-3.0, 0.0)));
  return inst;
}

/// Problem with the original (unreduced) variables for `inst.user`.
inline QcqpProblem full_problem(const RandomInstance& inst) {
  QcqpProblem p;
  p.h = inst.net.direct(inst.user);
  for (std::size_t j = 0; j < inst.net.users(); ++j) {
    if (j == inst.user) continue;
    p.hj.push_back(inst.net.h[inst.user][j]);
    p.z2.push_back(inst.budget.get(inst.user, j));
  }
  p.Pbar = inst.net.P[inst.user];
  return p;
}

namespace detail {

class SuiteRun {
 public:
  SuiteRun(std::string name, const SuiteConfig& cfg, int default_trials)
      : cfg_(cfg), start_(std::chrono::steady_clock::now()) {
    report_.name = std::move(name);
    report_.trials = cfg.trials > 0 ? cfg.trials : default_trials;
  }

  int trials() const { return report_.trials; }
  Rng rng(int trial) const { return Rng(cfg_.seed, static_cast<std::uint64_t>(trial)); }

  // Records error <= tol * tol_scale for one check of the current trial.
  void check(double error, double tol, const std::string& what) {
    const double limit = tol * cfg_.tol_scale;
    const double ratio = tol > 0.0 ? error / tol : (error > 0.0 ? kInf : 0.0);
    if (std::isfinite(ratio) || std::isinf(ratio)) report_.worst = std::max(report_.worst, ratio);
    if (!(error <= limit)) trial_failed(what + " (error " + std::to_string(error) + ")");
  }
  void require(bool ok, const std::string& what) {
    if (!ok || cfg_.tol_scale < 0.0) trial_failed(what);
  }
  void end_trial() {
    if (failed_) ++report_.failures;
    failed_ = false;
    ++executed_;
  }

  SuiteReport finish() {
    report_.trials = executed_;
    report_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return report_;
  }

 private:
  void trial_failed(const std::string& what) {
    if (report_.first_failure.empty()) report_.first_failure = what;
    failed_ = true;
  }

  SuiteConfig cfg_;
  SuiteReport report_;
  std::chrono::steady_clock::time_point start_;
  bool failed_ = false;
  int executed_ = 0;
};

inline double ratio_of(const Matrix& S) {
  if (S.rows() < 2) return 0.0;
  const Vector ev = linalg::sym_eig_desc(S).values;
  if (ev(0) <= 0.0) return 0.0;
  return std::max(ev(1), 0.0) / ev(0);
}

}  // namespace detail

/// Rank of the optimal reduced covariance. The barrier's central primal is
/// used so the check does not depend on the rank-1 extraction step.
inline SuiteReport suite_rank1(const SuiteConfig& cfg) {
  detail::SuiteRun run("rank1", cfg, 200);
  for (int k = 0; k < run.trials(); ++k) {
    Rng rng = run.rng(k);
    const auto inst = random_instance(rng);
    const auto sol = solve_user(inst.net, inst.user, inst.budget);
    const auto& inner = sol.split.inner;
    run.check(detail::ratio_of(inner.central), 1e-6, "central primal eigenvalue ratio");
    run.check(detail::ratio_of(inner.S11), 1e-6, "extracted primal eigenvalue ratio");
    run.require(sol.rank_one, "beamformer extraction reported rank > 1");
    run.end_trial();
  }
  return run.finish();
}

/// brute force <= solver value <= dual bound of the unreduced problem.
inline SuiteReport suite_sandwich(const SuiteConfig& cfg, std::size_t samples = 100000) {
  detail::SuiteRun run("sandwich", cfg, 200);
  for (int k = 0; k < run.trials(); ++k) {
    Rng rng = run.rng(k);
    const auto inst = random_instance(rng);
    const auto sol = solve_user(inst.net, inst.user, inst.budget);
    const double brute = brute_force_user(inst.net, inst.user, inst.budget, samples, rng.engine()());
    const auto full = solve_reduced_sdp(full_problem(inst));
    run.check(std::max(0.0, brute - sol.signal), 1e-6, "brute force exceeds solver value");
    run.check(std::max(0.0, sol.signal - full.dual_value), 1e-6, "solver value exceeds dual bound");
    run.check(std::max(0.0, -full.duality_gap), 1e-6, "negative duality gap");
    run.end_trial();
  }
  return run.finish();
}

/// Random completion inputs covering all three cases.
inline CompletionInput random_completion_input(Rng& rng) {
  CompletionInput in;
  const int t1 = rng.uniform_int(1, 5), t2 = rng.uniform_int(0, 4);
  const int rank = rng.uniform_int(0, t1);
  const Matrix B = rng.normal_matrix(rank, t1);
  in.K11 = B.transpose() * B;
  in.P = rng.uniform(0.1, 5.0);
  const double tr = in.K11.trace();
  if (tr > 0.0) in.K11 *= rng.uniform(0.0, 1.0) * in.P / tr;
  in.K11 = linalg::symmetrized(in.K11);
  in.x = rng.normal_vector(t1);
  in.y = rng.normal_vector(t2);
  const double u = rng.uniform();
  if (u < 0.1) {
    in.y.setZero();
  } else if (u < 0.25 && rank < t1) {
    // x in the null space of K11
    const Matrix N = linalg::null_space_of_columns(B.transpose());
    if (N.cols() > 0) in.x = N * rng.normal_vector(N.cols());
  } else if (u < 0.3) {
    in.K11.setZero();
  }
  return in;
}

/// Completion attains the bound with a PSD, trace-feasible, low-rank matrix;
/// random completions never exceed the bound.
inline SuiteReport suite_completion(const SuiteConfig& cfg, int random_completions = 4) {
  detail::SuiteRun run("completion", cfg, 10000);
  for (int k = 0; k < run.trials(); ++k) {
    Rng rng = run.rng(k);
    const auto in = random_completion_input(rng);
    const auto res = complete_matrix(in);
    const double bound = res.bound;
    const double attained = stacked_quadratic_form(in.x, in.y, res.K);
    run.check(std::abs(attained - bound), 1e-10 * std::max(bound, 1e-300) + 1e-14, "bound not attained");
    const double trK = res.K.trace();
    run.check(std::max(0.0, -linalg::min_eig(res.K)), 1e-10 * std::max(trK, 1e-300), "completion not PSD");
    run.check(std::max(0.0, trK - in.P), 1e-10, "completion trace exceeds P");
    const int r11 = linalg::psd_rank(in.K11);
    const int rk = linalg::psd_rank(res.K);
    run.require(rk <= std::max(r11, 1), "rank bound violated");

    const Matrix F = psd_sqrt_factor(in.K11);
    const auto t1 = in.x.size(), t2 = in.y.size();
    for (int c = 0; c < random_completions && t2 > 0; ++c) {
      const auto rows = rng.uniform_int(1, static_cast<int>(t1 + t2));
      Matrix X = rng.normal_matrix(t1, t2);
      Matrix Y = rng.normal_matrix(rows, t2);
      const double budget = rng.uniform() * std::max(0.0, in.P - in.K11.trace());
      const double tr22 = X.squaredNorm() + Y.squaredNorm();
      const double s = tr22 > 0.0 ? std::sqrt(budget / tr22) : 0.0;
      X *= s;
      Y *= s;
      Matrix K(t1 + t2, t1 + t2);
      K.topLeftCorner(t1, t1) = in.K11;
      K.topRightCorner(t1, t2) = F.transpose() * X;
      K.bottomLeftCorner(t2, t1) = X.transpose() * F;
      K.bottomRightCorner(t2, t2) = X.transpose() * X + Y.transpose() * Y;
      const double v = stacked_quadratic_form(in.x, in.y, K);
      run.check(std::max(0.0, v - bound), 1e-8 * (1.0 + bound), "random completion beats the bound");
    }
    run.end_trial();
  }
  return run.finish();
}

/// Reduced pipeline versus a direct solve in the original dimension.
inline SuiteReport suite_reduction(const SuiteConfig& cfg) {
  detail::SuiteRun run("reduction", cfg, 100);
  InstanceShape shape;
  shape.force_reduction = true;
  for (int k = 0; k < run.trials(); ++k) {
    Rng rng = run.rng(k);
    const auto inst = random_instance(rng, shape);
    const auto sol = solve_user(inst.net, inst.user, inst.budget);
    const auto full = solve_reduced_sdp(full_problem(inst));
    const double scale = 1.0 + std::abs(full.value);
    run.check(std::abs(sol.predicted - full.value), 1e-7 * scale, "predicted value differs from full solve");
    run.check(std::abs(sol.signal - full.value), 1e-7 * scale, "beamformer value differs from full solve");

    const auto& red = sol.reduced;
    const Matrix S11 = sol.split.inner.S11;
    const Matrix S = lift_solution(red, S11);
    for (std::size_t c = 0; c < red.hj.size(); ++c) {
      const double reduced = red.hj[c].dot(S11 * red.hj[c]);
      const double lifted = inst.net.h[inst.user][red.rx[c]].dot(S * inst.net.h[inst.user][red.rx[c]]);
      run.check(std::abs(reduced - lifted), 1e-10 * (1.0 + std::abs(reduced)), "lifted constraint value");
    }
    const double lifted_obj = inst.net.direct(inst.user).dot(S * inst.net.direct(inst.user));
    run.check(std::abs(lifted_obj - sol.signal), 1e-10 * scale, "lifted objective value");
    run.check(std::max(0.0, S.trace() - red.P), 1e-10 * (1.0 + red.P), "lifted trace");
    run.end_trial();
  }
  return run.finish();
}

/// Certificates for random solves and the hand-derived two-dimensional case.
inline SuiteReport suite_kkt(const SuiteConfig& cfg) {
  detail::SuiteRun run("kkt", cfg, 200);
  {
    QcqpProblem p;
    p.h = Vector(2);
    p.h << 1.0, 1.0;
    Vector a(2);
    a << 1.0, 0.0;
    p.hj = {a};
    p.z2 = {0.25};
    p.Pbar = 1.0;
    const auto res = solve_reduced_sdp(p);
    const auto cert = certify_kkt(p, res);
    run.require(cert.pass, "hand instance certificate");
    run.check(std::abs(res.lambda(0) - 2.0 / std::sqrt(3.0)), 1e-6, "hand instance lambda_1");
    run.check(std::abs(res.lambda(1) - (1.0 + std::sqrt(3.0)) / std::sqrt(3.0)), 1e-6, "hand instance lambda_2");
    run.check(std::abs(res.value - (1.0 + std::sqrt(3.0) / 2.0)), 1e-8, "hand instance value");
    run.end_trial();
  }
  for (int k = 1; k < run.trials(); ++k) {
    Rng rng = run.rng(k);
    const auto inst = random_instance(rng);
    const auto sol = solve_user(inst.net, inst.user, inst.budget);
    const auto& c = sol.certificate;
    run.require(c.pass, "certificate failed: " + (c.failures.empty() ? std::string("?") : c.failures.front()));
    const double tol = 1e-7 * (1.0 + std::abs(sol.split.inner.value));
    run.check(c.stationarity, tol, "stationarity residual");
    for (double s : c.slackness) run.check(s, tol, "complementary slackness");
    run.end_trial();
  }
  return run.finish();
}

/// Inertia does not grow under congruence, for random pairs and for the
/// solver's own C = H diag(-1, lambda) H^T.
inline SuiteReport suite_inertia(const SuiteConfig& cfg) {
  detail::SuiteRun run("inertia", cfg, 500);
  for (int k = 0; k < run.trials(); ++k) {
    Rng rng = run.rng(k);
    const Matrix H = rng.normal_matrix(3, 5);
    Matrix A = rng.normal_matrix(5, 5);
    A = linalg::symmetrized(A);
    if (rng.uniform() < 0.3) {
      // rank-deficient A exercises the zero threshold
      const Matrix B = rng.normal_matrix(5, rng.uniform_int(1, 3));
      A = B * B.transpose() - rng.uniform() * Matrix::Identity(5, 5);
      A = linalg::symmetrized(A);
    }
    run.require(check_inertia_bound(H, A), "random pair violates the inertia bound");
    run.end_trial();
  }
  for (int k = 0; k < std::max(1, run.trials() / 10); ++k) {
    Rng rng(mix_seed(cfg.seed, 0x696e6572ULL), static_cast<std::uint64_t>(k));
    const auto inst = random_instance(rng);
    const auto sol = solve_user(inst.net, inst.user, inst.budget);
    const auto& red = sol.reduced;
    const auto& res = sol.split.inner;
    const auto n = static_cast<Eigen::Index>(red.dim);
    const auto kk = static_cast<Eigen::Index>(red.hj.size());
    if (n == 0) continue;
    const Matrix V = res.basis;
    Matrix H(V.cols(), kk + 1);
    H.col(0) = V.transpose() * red.h;
    Vector diag(kk + 1);
    diag(0) = -1.0;
    for (Eigen::Index j = 0; j < kk; ++j) {
      H.col(j + 1) = V.transpose() * red.hj[static_cast<std::size_t>(j)];
      diag(j + 1) = res.lambda(j);
    }
    const Matrix A = diag.asDiagonal();
    Matrix C = H * A * H.transpose();
    C = linalg::symmetrized(C);
    const auto ic = inertia(C);
    run.require(check_inertia_bound(H, A), "solver C violates the inertia bound");
    run.require(ic.negative <= 1 && ic.positive <= static_cast<int>(kk), "solver C exceeds (m-1, 1)");
    run.require(ic.positive == sol.certificate.positive && ic.negative == sol.certificate.negative,
                "certificate inertia differs from congruence construction");
    run.end_trial();
  }
  return run.finish();
}

/// Optimal value is nondecreasing in every budget and in the trace budget.
inline SuiteReport suite_monotonicity(const SuiteConfig& cfg) {
  detail::SuiteRun run("monotonicity", cfg, 100);
  for (int k = 0; k < run.trials(); ++k) {
    Rng rng = run.rng(k);
    const auto inst = random_instance(rng);
    const QcqpProblem p = full_problem(inst);
    const auto base = solve_reduced_sdp(p);
    const double tol = 1e-8 * (1.0 + base.value);
    for (std::size_t j = 0; j < p.z2.size(); ++j) {
      QcqpProblem q = p;
      q.z2[j] *= rng.uniform(1.0, 4.0);
      const auto up = solve_reduced_sdp(q);
      run.check(std::max(0.0, base.value - up.value), tol, "value decreased when a budget grew");
    }
    QcqpProblem q = p;
    q.Pbar *= rng.uniform(1.0, 2.0);
    const auto up = solve_reduced_sdp(q);
    run.check(std::max(0.0, base.value - up.value), tol, "value decreased when the power grew");
    run.end_trial();
  }
  return run.finish();
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"rank1", "sandwich", "completion", "reduction", "kkt", "inertia", "monotonicity"};
  return names;
}

inline SuiteReport run_suite(const std::string& name, const SuiteConfig& cfg) {
  if (name == "rank1") return suite_rank1(cfg);
  if (name == "sandwich") return suite_sandwich(cfg);
  if (name == "completion") return suite_completion(cfg);
  if (name == "reduction") return suite_reduction(cfg);
  if (name == "kkt") return suite_kkt(cfg);
  if (name == "inertia") return suite_inertia(cfg);
  if (name == "monotonicity") return suite_monotonicity(cfg);
  throw Error("unknown suite '" + name + "'");
}

}  // namespace misobf
