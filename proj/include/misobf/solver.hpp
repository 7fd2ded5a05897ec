#pragma once

// Per-user beamforming solver.
//
// The inner problem is the SDP
//
//   maximize  h^T S h
//   s.t.      h_j^T S h_j <= z_j^2,  tr S <= Pbar,  S >= 0,
//
// solved through its dual
//
//   minimize  lambda_m Pbar + sum_j lambda_j z_j^2
//   s.t.      Z = sum_j lambda_j h_j h_j^T + lambda_m I - h h^T >= 0,  lambda >= 0
//
// with a log-det barrier and damped Newton steps. The primal optimum lives in
// the null space of the slack Z; when that null space is one-dimensional the
// optimizer is the rank-1 matrix alpha u u^T.

#include "misobf/channel_model.hpp"
#include "misobf/completion.hpp"
#include "misobf/oracle.hpp"
#include "misobf/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace misobf {

struct QcqpProblem {
  Vector h;
  std::vector<Vector> hj;
  std::vector<double> z2;
  double Pbar = 0.0;
};

struct SolverOptions {
  double gap_tol = 1e-10;         // relative central-path gap for the barrier
  int max_newton_per_center = 100;
  int max_outer = 40;
  double split_tol = 1e-9;        // golden-section tolerance, relative to P
  int max_purify_depth = 4;
};

struct SolveResult {
  Matrix S11;              // optimal n x n covariance
  double value = 0.0;      // h^T S11 h
  Vector lambda;           // constraint multipliers, then the trace multiplier
  double dual_value = 0.0;
  double duality_gap = 0.0;
  Matrix central;          // barrier primal estimate Z^{-1} / t (lifted to n x n)
  Matrix basis;            // orthonormal basis of the space left after zero budgets
  std::vector<bool> eliminated;  // constraints with zero budget, folded into `basis`
  int null_dim = 0;        // dimension of the slack null space at the optimum
  bool purified = false;   // a rank-reduction step was needed
  bool rank_one = true;
  int newton_steps = 0;
};

namespace detail {

// Problem with unit objective direction, unit constraint vectors and
// normalized budgets zbar_j = z_j / (Pbar ||h_j||^2) in (0, 1); Pbar = 1.
struct NormalizedQcqp {
  Vector h;
  Matrix A;
  Vector z;
};

struct BarrierState {
  Vector y;  // k constraint multipliers, then the trace multiplier
  double t = 1.0;
  Matrix Z;
  int newton_steps = 0;
};

inline Matrix slack_matrix(const NormalizedQcqp& q, const Vector& y) {
  const auto k = q.A.cols();
  Matrix Z = q.A * y.head(k).asDiagonal() * q.A.transpose();
  Z.diagonal().array() += y(k);
  Z.noalias() -= q.h * q.h.transpose();
  return Z;
}

inline double log_det(const Eigen::LLT<Matrix>& llt) {
  const Matrix& L = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) s += std::log(L(i, i));
  return 2.0 * s;
}

inline BarrierState solve_dual_barrier(const NormalizedQcqp& q, const SolverOptions& opt) {
  const auto n = q.h.size();
  const auto k = q.A.cols();
  const auto nv = k + 1;
  Vector c(nv);
  c << q.z, 1.0;

  BarrierState st;
  st.y = Vector::Ones(nv);
  st.y(k) = 1.0 + q.h.squaredNorm();
  st.t = 1.0;
  const double nu = static_cast<double>(n + nv);

  Eigen::LLT<Matrix> llt;
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    for (int it = 0; it < opt.max_newton_per_center; ++it) {
      const Matrix Z = slack_matrix(q, st.y);
      llt.compute(Z);
      if (llt.info() != Eigen::Success) break;
      const Matrix Zinv = llt.solve(Matrix::Identity(n, n));
      const Matrix ZinvA = Zinv * q.A;
      const Matrix M = q.A.transpose() * ZinvA;

      Vector g(nv);
      Matrix H(nv, nv);
      for (Eigen::Index i = 0; i < k; ++i) {
        g(i) = st.t * c(i) - M(i, i) - 1.0 / st.y(i);
        for (Eigen::Index j = 0; j < k; ++j) H(i, j) = M(i, j) * M(i, j);
        H(i, i) += 1.0 / (st.y(i) * st.y(i));
        H(i, k) = H(k, i) = ZinvA.col(i).squaredNorm();
      }
      g(k) = st.t * c(k) - Zinv.trace() - 1.0 / st.y(k);
      H(k, k) = Zinv.squaredNorm() + 1.0 / (st.y(k) * st.y(k));

      const Vector dy = H.ldlt().solve(-g);
      const double dec2 = -g.dot(dy);
      if (!std::isfinite(dec2) || dec2 <= 1e-10) break;

      const double logdet0 = log_det(llt);
      double s = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
        const Vector y1 = st.y + s * dy;
        if ((y1.array() <= 0.0).any()) continue;
        Eigen::LLT<Matrix> l1(slack_matrix(q, y1));
        if (l1.info() != Eigen::Success) continue;
        double dphi = st.t * c.dot(s * dy) - (log_det(l1) - logdet0);
        for (Eigen::Index i = 0; i < nv; ++i) dphi -= std::log1p(s * dy(i) / st.y(i));
        if (dphi <= -0.25 * s * dec2) {
          st.y = y1;
          moved = true;
          break;
        }
      }
      ++st.newton_steps;
      if (!moved) break;
    }
    if (nu / st.t <= opt.gap_tol * (1.0 + std::abs(c.dot(st.y)))) break;
    st.t *= 10.0;
  }
  st.Z = slack_matrix(q, st.y);
  return st;
}

inline SolveResult zero_solution(const QcqpProblem& p, std::size_t n) {
  SolveResult r;
  r.S11 = Matrix::Zero(n, n);
  r.central = r.S11;
  r.lambda = Vector::Zero(p.hj.size() + 1);
  r.basis = Matrix::Identity(n, n);
  r.eliminated.assign(p.hj.size(), false);
  r.null_dim = 0;
  return r;
}

inline double qcqp_value(const QcqpProblem& p, const Matrix& S) { return p.h.dot(S * p.h); }

/// Largest alpha with alpha u u^T feasible. Constraints flagged in `skip`
/// are ones u is orthogonal to by construction; their round-off leakage is
/// ignored.
inline double feasible_scale(const QcqpProblem& p, const Vector& u, const std::vector<bool>& skip = {}) {
  double alpha = p.Pbar / std::max(u.squaredNorm(), 1e-300);
  for (std::size_t j = 0; j < p.hj.size(); ++j) {
    if (j < skip.size() && skip[j]) continue;
    const double leak = p.hj[j].dot(u);
    if (leak * leak > 0.0 && std::isfinite(p.z2[j])) alpha = std::min(alpha, p.z2[j] / (leak * leak));
  }
  return std::max(alpha, 0.0);
}

// Refines a rank-1 candidate b. Near an optimal vertex some of the
// equations a_j^T b = +-z_j^{1/2} and ||b||^2 = Pbar hold exactly; the
// barrier direction only satisfies them approximately. Every subset of the
// nearly tight equations of size min(#tight, n) is solved by Gauss-Newton
// from b, each result is scaled onto the feasible set, and the best one wins.
inline Vector polish_beam(const QcqpProblem& p, const Vector& b0, const std::vector<bool>& skip) {
  const auto n = b0.size();
  struct Eq {
    std::size_t j;  // constraint index, or hj.size() for the trace
    double target;
  };
  std::vector<Eq> tight;
  for (std::size_t j = 0; j < p.hj.size(); ++j) {
    if ((j < skip.size() && skip[j]) || !std::isfinite(p.z2[j]) || p.z2[j] <= 0.0) continue;
    const double l = p.hj[j].dot(b0);
    if (l * l >= (1.0 - 1e-3) * p.z2[j]) tight.push_back({j, std::copysign(std::sqrt(p.z2[j]), l)});
  }
  if (b0.squaredNorm() >= (1.0 - 1e-3) * p.Pbar) tight.push_back({p.hj.size(), p.Pbar});
  if (tight.empty() || tight.size() > 16) return b0;

  auto newton = [&](const std::vector<Eq>& eqs) {
    Vector b = b0;
    const auto rows = static_cast<Eigen::Index>(eqs.size());
    Matrix J(rows, n);
    Vector r(rows);
    for (int it = 0; it < 8; ++it) {
      for (Eigen::Index c = 0; c < rows; ++c) {
        const auto& e = eqs[static_cast<std::size_t>(c)];
        if (e.j == p.hj.size()) {
          J.row(c) = 2.0 * b.transpose();
          r(c) = b.squaredNorm() - e.target;
        } else {
          J.row(c) = p.hj[e.j].transpose();
          r(c) = p.hj[e.j].dot(b) - e.target;
        }
      }
      const Vector step = J.completeOrthogonalDecomposition().solve(r);
      b -= step;
      if (!b.allFinite()) return b0;
      if (step.norm() <= 1e-15 * (1.0 + b.norm())) break;
    }
    return b;
  };
  auto value_of = [&](const Vector& b) {
    const double nb = b.norm();
    if (!(nb > 0.0)) return -1.0;
    const Vector u = b / nb;
    const double g = p.h.dot(u);
    return feasible_scale(p, u, skip) * g * g;
  };

  const std::size_t r = tight.size();
  const std::size_t size = std::min<std::size_t>(r, static_cast<std::size_t>(n));
  Vector best = b0;
  double best_value = value_of(b0);
  std::vector<bool> mask(r, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(size), true);
  do {
    std::vector<Eq> eqs;
    for (std::size_t c = 0; c < r; ++c)
      if (mask[c]) eqs.push_back(tight[c]);
    const Vector b = newton(eqs);
    const double v = value_of(b);
    if (v > best_value) {
      best_value = v;
      best = b;
    }
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

struct DualPolish {
  bool ok = false;
  Vector lambda;  // k constraint multipliers, then the trace multiplier
  double value = 0.0;
};

// Multipliers matched to a rank-1 primal S = b b^T: nonnegative lambda on the
// constraints (nearly) tight at b with h (h^T b) = sum_j lambda_j a_j (a_j^T b) +
// lambda_m b, the trace multiplier then raised until the slack matrix is PSD
// on the subspace V. Any such lambda is dual feasible, so its value is an
// upper bound on the optimum.
inline DualPolish polish_dual(const QcqpProblem& p, const Vector& b, const Matrix& V, const std::vector<bool>& skip) {
  DualPolish out;
  const auto k = p.hj.size();
  const double nb2 = b.squaredNorm();
  if (!(nb2 > 0.0)) return out;
  std::vector<std::size_t> tight;  // index k stands for the trace
  for (std::size_t j = 0; j < k; ++j) {
    if ((j < skip.size() && skip[j]) || !std::isfinite(p.z2[j])) continue;
    const double l = p.hj[j].dot(b);
    if (std::abs(l * l - p.z2[j]) <= 1e-6 * (p.z2[j] + 1e-300) + 1e-14 * p.hj[j].squaredNorm() * nb2) tight.push_back(j);
  }
  if (std::abs(nb2 - p.Pbar) <= 1e-6 * p.Pbar) tight.push_back(k);
  if (tight.empty() || tight.size() > 12) return out;

  const auto hb = p.h.dot(b);
  const Vector rhs = V.transpose() * (p.h * hb);
  auto column = [&](std::size_t j) -> Vector {
    return j == k ? Vector(V.transpose() * b) : Vector(V.transpose() * (p.hj[j] * p.hj[j].dot(b)));
  };
  // Loose on purpose: the PSD shift below keeps any nonnegative fit dual
  // feasible, and the caller judges the resulting bound.
  const double tol = 1e-6 * (1.0 + rhs.norm());

  const std::size_t r = tight.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << r); ++mask) {
    std::vector<std::size_t> sel;
    for (std::size_t c = 0; c < r; ++c)
      if (mask & (std::size_t{1} << c)) sel.push_back(tight[c]);
    Matrix G(rhs.size(), static_cast<Eigen::Index>(sel.size()));
    for (std::size_t c = 0; c < sel.size(); ++c) G.col(static_cast<Eigen::Index>(c)) = column(sel[c]);
    const Vector w = G.completeOrthogonalDecomposition().solve(rhs);
    if ((w.array() < 0.0).any() || (G * w - rhs).norm() > tol) continue;

    Vector lambda = Vector::Zero(static_cast<Eigen::Index>(k + 1));
    for (std::size_t c = 0; c < sel.size(); ++c) lambda(static_cast<Eigen::Index>(sel[c])) = w(static_cast<Eigen::Index>(c));
    Matrix Z = -p.h * p.h.transpose();
    for (std::size_t j = 0; j < k; ++j)
      if (lambda(static_cast<Eigen::Index>(j)) > 0.0) Z.noalias() += lambda(static_cast<Eigen::Index>(j)) * p.hj[j] * p.hj[j].transpose();
    Matrix Zp = V.transpose() * Z * V;
    Zp = linalg::symmetrized(Zp);
    const double shift = linalg::min_eig(Zp) + lambda(static_cast<Eigen::Index>(k));
    if (shift < 0.0) lambda(static_cast<Eigen::Index>(k)) -= shift;
    double value = lambda(static_cast<Eigen::Index>(k)) * p.Pbar;
    for (std::size_t j = 0; j < k; ++j)
      if (lambda(static_cast<Eigen::Index>(j)) > 0.0) value += lambda(static_cast<Eigen::Index>(j)) * p.z2[j];
    if (!out.ok || value < out.value) {
      out.ok = true;
      out.lambda = lambda;
      out.value = value;
    }
  }
  return out;
}

inline QcqpProblem restrict_problem(const QcqpProblem& p, const Matrix& W) {
  QcqpProblem sub;
  sub.h = W.transpose() * p.h;
  for (const auto& a : p.hj) sub.hj.push_back(W.transpose() * a);
  sub.z2 = p.z2;
  sub.Pbar = p.Pbar;
  return sub;
}

inline SolveResult solve_qcqp(const QcqpProblem& p, const SolverOptions& opt, int depth);

// Optimum restricted to span(W), expressed in the original coordinates.
inline bool solve_on_subspace(const QcqpProblem& p, const Matrix& W, const SolverOptions& opt, int depth, Matrix& S) {
  if (depth >= opt.max_purify_depth) return false;
  const SolveResult sub = solve_qcqp(restrict_problem(p, W), opt, depth + 1);
  if (!sub.rank_one) return false;
  S = W * sub.S11 * W.transpose();
  return true;
}

// Smallest trace budget that keeps the optimum; there the trace multiplier is
// positive, which pins down a rank-1 optimizer.
inline bool solve_with_shrunk_trace(const QcqpProblem& p, double target, const SolverOptions& opt, int depth, Matrix& S) {
  if (depth >= opt.max_purify_depth) return false;
  QcqpProblem shrunk = p;
  double lo = 0.0, hi = p.Pbar;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    shrunk.Pbar = mid;
    const SolveResult r = solve_qcqp(shrunk, opt, opt.max_purify_depth);
    if (r.dual_value >= target * (1.0 - 1e-10)) hi = mid;
    else lo = mid;
  }
  shrunk.Pbar = hi;
  const SolveResult r = solve_qcqp(shrunk, opt, depth + 1);
  if (!r.rank_one) return false;
  S = r.S11;
  return true;
}

inline SolveResult solve_qcqp(const QcqpProblem& p, const SolverOptions& opt, int depth) {
  const auto n = static_cast<std::size_t>(p.h.size());
  const auto k_all = p.hj.size();
  if (p.z2.size() != k_all) throw Error("qcqp: budget count does not match constraint count");
  for (const auto& a : p.hj)
    if (static_cast<std::size_t>(a.size()) != n) throw Error("qcqp: constraint vector dimension mismatch");
  for (double z : p.z2)
    if (!(z >= 0.0)) throw Error("qcqp: budgets must be nonnegative");
  if (!(p.Pbar >= 0.0)) throw Error("qcqp: trace budget must be nonnegative");

  SolveResult res = zero_solution(p, n);
  if (n == 0) return res;
  const double hn2 = p.h.squaredNorm();
  if (p.Pbar == 0.0 || hn2 == 0.0) {
    res.lambda(k_all) = hn2;
    return res;
  }

  // Zero budgets confine S to the orthogonal complement of their vectors.
  std::vector<Vector> zero_cols;
  for (std::size_t j = 0; j < k_all; ++j) {
    const double an2 = p.hj[j].squaredNorm();
    if (an2 > 1e-28 * hn2 && p.z2[j] <= 1e-15 * p.Pbar * an2) {
      res.eliminated[j] = true;
      zero_cols.push_back(p.hj[j]);
    }
  }
  if (!zero_cols.empty()) {
    Matrix cols(n, zero_cols.size());
    for (std::size_t j = 0; j < zero_cols.size(); ++j) cols.col(j) = zero_cols[j];
    res.basis = linalg::null_space_of_columns(cols);
  }
  const Matrix& V = res.basis;
  const auto np = V.cols();
  if (np == 0) return res;

  const Vector hp = V.transpose() * p.h;
  const double hp2 = hp.squaredNorm();
  if (hp2 <= 1e-24 * hn2) return res;

  // Constraints that can bind after the projection.
  std::vector<std::size_t> live;
  std::vector<double> live_norm2;
  for (std::size_t j = 0; j < k_all; ++j) {
    if (res.eliminated[j] || !std::isfinite(p.z2[j])) continue;
    const Vector ap = V.transpose() * p.hj[j];
    const double an2 = ap.squaredNorm();
    if (an2 <= 1e-28 * hn2) continue;
    if (p.z2[j] >= p.Pbar * an2) continue;
    live.push_back(j);
    live_norm2.push_back(an2);
  }

  NormalizedQcqp q;
  q.h = hp / std::sqrt(hp2);
  q.A.resize(np, static_cast<Eigen::Index>(live.size()));
  q.z.resize(static_cast<Eigen::Index>(live.size()));
  for (std::size_t c = 0; c < live.size(); ++c) {
    q.A.col(static_cast<Eigen::Index>(c)) = V.transpose() * p.hj[live[c]] / std::sqrt(live_norm2[c]);
    q.z(static_cast<Eigen::Index>(c)) = p.z2[live[c]] / (p.Pbar * live_norm2[c]);
  }

  const BarrierState st = solve_dual_barrier(q, opt);
  res.newton_steps = st.newton_steps;
  const auto kl = static_cast<Eigen::Index>(live.size());
  const double scale = hp2 * p.Pbar;  // objective units of the normalized problem

  for (std::size_t c = 0; c < live.size(); ++c) res.lambda(live[c]) = st.y(static_cast<Eigen::Index>(c)) * hp2 / live_norm2[c];
  res.lambda(static_cast<Eigen::Index>(k_all)) = st.y(kl) * hp2;
  {
    Vector c(kl + 1);
    c << q.z, 1.0;
    res.dual_value = scale * c.dot(st.y);
  }

  Eigen::LLT<Matrix> llt(st.Z);
  if (llt.info() == Eigen::Success) {
    const Matrix Sc = llt.solve(Matrix::Identity(np, np)) / st.t;
    res.central = p.Pbar * V * Sc * V.transpose();
  }

  // Primal recovery from the slack null space.
  const auto eg = linalg::sym_eig_desc(st.Z);  // descending
  const Vector mu = eg.values.reverse();
  const Matrix U = eg.vectors.rowwise().reverse();
  const double mu0 = std::max(mu(0), 0.0);
  auto null_count = [&](double factor) {
    int d = 0;
    for (Eigen::Index i = 0; i < np; ++i)
      if (mu(i) <= factor * mu0 || mu(i) <= 1e-14) ++d;
    return std::max(d, 1);
  };
  const double accept = 1e-9 * (1.0 + res.dual_value);
  // Polishes a rank-1 direction b0 and accepts it when its value meets the
  // dual bound, tightening the bound with matched multipliers if needed.
  auto try_rank_one = [&](const Vector& b0) {
    Vector b = V * (V.transpose() * polish_beam(p, b0, res.eliminated));
    const double nb = b.norm();
    if (!(nb > 0.0) || !std::isfinite(nb)) return false;
    const Vector u = b / nb;
    b = std::sqrt(feasible_scale(p, u, res.eliminated)) * u;
    const Matrix S = b * b.transpose();
    const double value = qcqp_value(p, S);
    // Multipliers matched to S drop the 1/t residue the barrier leaves on
    // inactive constraints; they replace the barrier's whenever they still
    // certify optimality.
    const DualPolish dp = polish_dual(p, b, V, res.eliminated);
    if (dp.ok && dp.value - value <= accept) {
      res.dual_value = dp.value;
      res.lambda = dp.lambda;
    } else if (res.dual_value - value > accept) {
      return false;
    }
    res.S11 = S;
    return true;
  };

  int d = null_count(1e3);
  res.null_dim = d;
  bool done = false;
  if (d == 1) {
    const Vector u = V * U.col(0);
    done = try_rank_one(std::sqrt(feasible_scale(p, u, res.eliminated)) * u);
    if (!done) d = std::max(2, null_count(1e6));
  }
  if (!done && res.central.size() > 0) {
    // Near a change in the active set the slack spectrum is nearly degenerate;
    // the central primal still points along the optimizer.
    const Vector u = linalg::sym_eig_desc(res.central).vectors.col(0);
    done = try_rank_one(std::sqrt(feasible_scale(p, u, res.eliminated)) * u);
  }
  if (!done && d > 1) {
    res.purified = true;
    Matrix S;
    const double target = res.dual_value;
    if (d < np) {
      if (solve_on_subspace(p, V * U.leftCols(d), opt, depth, S) && target - qcqp_value(p, S) <= accept) {
        res.S11 = S;
        done = true;
      }
    } else if (solve_with_shrunk_trace(p, target, opt, depth, S) && target - qcqp_value(p, S) <= accept) {
      res.S11 = S;
      done = true;
    }
  }
  if (!done) {
    // Fall back to the (feasible, near-optimal) central primal.
    res.rank_one = false;
    Matrix S = res.central;
    double shrink = 1.0;
    if (S.trace() > p.Pbar) shrink = std::min(shrink, p.Pbar / S.trace());
    for (std::size_t j = 0; j < k_all; ++j) {
      if (res.eliminated[j]) continue;
      const double leak = p.hj[j].dot(S * p.hj[j]);
      if (leak > p.z2[j]) shrink = std::min(shrink, p.z2[j] / leak);
    }
    res.S11 = shrink * S;
  }

  res.S11 = linalg::symmetrized(res.S11);
  res.value = qcqp_value(p, res.S11);
  res.duality_gap = res.dual_value - res.value;
  if (done) res.rank_one = linalg::psd_rank(res.S11, 1e-6) <= 1;
  return res;
}

}  // namespace detail

/// Solves the reduced SDP for a fixed trace budget.
inline SolveResult solve_reduced_sdp(const QcqpProblem& p, const SolverOptions& opt = {}) {
  return detail::solve_qcqp(p, opt, 0);
}

inline QcqpProblem qcqp_from_reduced(const ReducedProblem& red, double Pbar) {
  return QcqpProblem{red.h, red.hj, red.z2, Pbar};
}

struct PowerSplit {
  double Pbar = 0.0;      // trace budget for the interference-coupled block
  double value = 0.0;     // (sqrt(v(Pbar)) + ||h_hat|| sqrt(P - Pbar))^2
  SolveResult inner;
  int evaluations = 0;
};

inline double split_objective(double inner_value, double h_hat_norm2, double P, double Pbar) {
  const double s = std::sqrt(std::max(inner_value, 0.0)) + std::sqrt(h_hat_norm2 * std::max(P - Pbar, 0.0));
  return s * s;
}

/// Maximizes the split objective over Pbar in [0, P]. The square root of the
/// objective is concave in Pbar, so golden-section search is exact up to the
/// interval tolerance.
inline PowerSplit solve_power_split(const ReducedProblem& red, const SolverOptions& opt = {}) {
  PowerSplit out;
  auto eval = [&](double Pbar) {
    ++out.evaluations;
    return solve_reduced_sdp(qcqp_from_reduced(red, Pbar), opt);
  };
  if (red.dim == 0) {
    // Single user: everything rides the interference-free residual.
    out.Pbar = 0.0;
    out.inner = eval(0.0);
    out.value = split_objective(0.0, red.h_hat_norm2, red.P, 0.0);
    return out;
  }
  if (red.h_hat_norm2 == 0.0) {
    out.Pbar = red.P;
    out.inner = eval(red.P);
    out.value = out.inner.value;
    return out;
  }

  auto f = [&](double Pbar, SolveResult& r) {
    r = eval(Pbar);
    return split_objective(r.value, red.h_hat_norm2, red.P, Pbar);
  };

  SolveResult r_lo, r_hi;
  double best_x = 0.0;
  double best_f = f(0.0, r_lo);
  SolveResult best_r = r_lo;
  if (const double fp = f(red.P, r_hi); fp > best_f) {
    best_f = fp;
    best_x = red.P;
    best_r = r_hi;
  }

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = red.P;
  double x1 = b - inv_phi * (b - a), x2 = a + inv_phi * (b - a);
  SolveResult r1, r2;
  double f1 = f(x1, r1), f2 = f(x2, r2);
  const double tol = opt.split_tol * red.P;
  while (b - a > tol) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      r2 = r1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1, r1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      r1 = r2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2, r2);
    }
  }
  if (f1 > best_f) {
    best_f = f1;
    best_x = x1;
    best_r = r1;
  }
  if (f2 > best_f) {
    best_f = f2;
    best_x = x2;
    best_r = r2;
  }
  out.Pbar = best_x;
  out.value = best_f;
  out.inner = std::move(best_r);
  return out;
}

struct KktCertificate {
  Matrix C;                // -h h^T + sum_j lambda_j h_j h_j^T (in the working subspace)
  Vector eta;              // eigenvalues of C, ascending
  int positive = 0;        // pi(C)
  int negative = 0;        // nu(C)
  double stationarity = 0.0;     // ||S (C + lambda_m I)||_F
  std::vector<double> slackness;  // |lambda_j (h_j^T S h_j - z_j^2)|, then the trace term
  double primal_violation = 0.0;
  int slack_rank = 0;      // rank(C + lambda_m I)
  bool pass = false;
  std::vector<std::string> failures;
};

inline KktCertificate certify_kkt(const QcqpProblem& p, const SolveResult& res) {
  KktCertificate cert;
  const auto k = p.hj.size();
  const auto n = p.h.size();
  if (res.lambda.size() != static_cast<Eigen::Index>(k + 1)) throw Error("certify_kkt: multiplier count mismatch");
  const Matrix V = res.basis.rows() == n ? res.basis : Matrix::Identity(n, n);
  const auto np = V.cols();
  const double lam_m = res.lambda(static_cast<Eigen::Index>(k));
  const double tol = 1e-7 * (1.0 + std::abs(res.value));

  const Vector hp = V.transpose() * p.h;
  cert.C = -hp * hp.transpose();
  for (std::size_t j = 0; j < k; ++j) {
    const Vector ap = V.transpose() * p.hj[j];
    cert.C.noalias() += res.lambda(static_cast<Eigen::Index>(j)) * ap * ap.transpose();
  }
  cert.eta = linalg::sym_eigvals(cert.C);
  const auto ic = inertia(cert.C);
  cert.positive = ic.positive;
  cert.negative = ic.negative;

  const Matrix Sp = V.transpose() * res.S11 * V;
  Matrix shifted = cert.C;
  shifted.diagonal().array() += lam_m;
  cert.stationarity = (Sp * shifted).norm();
  cert.slack_rank = static_cast<int>(np) - [&] {
    int z = 0;
    const Vector ev = linalg::sym_eigvals(shifted);
    const double scale = std::max(1.0, ev.size() ? ev.cwiseAbs().maxCoeff() : 0.0);
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (std::abs(ev(i)) <= 1e-8 * scale) ++z;
    return z;
  }();

  for (std::size_t j = 0; j < k; ++j) {
    const double lam = res.lambda(static_cast<Eigen::Index>(j));
    const double leak = p.hj[j].dot(res.S11 * p.hj[j]);
    cert.primal_violation = std::max(cert.primal_violation, leak - p.z2[j]);
    if (lam < 0.0) cert.failures.push_back("negative multiplier " + std::to_string(j + 1));
    cert.slackness.push_back(std::isfinite(p.z2[j]) ? std::abs(lam * (leak - p.z2[j])) : (lam == 0.0 ? 0.0 : kInf));
  }
  cert.slackness.push_back(std::abs(lam_m * (res.S11.trace() - p.Pbar)));
  cert.primal_violation = std::max(cert.primal_violation, res.S11.trace() - p.Pbar);
  if (lam_m < 0.0) cert.failures.push_back("negative trace multiplier");

  if (cert.negative > 1) cert.failures.push_back("inertia: nu(C) > 1");
  if (cert.positive > static_cast<int>(k)) cert.failures.push_back("inertia: pi(C) > m - 1");
  if (np >= 2) {
    const double et = 1e-10 * std::max(1.0, cert.eta.cwiseAbs().maxCoeff());
    if (cert.eta(1) < -et) cert.failures.push_back("eigenvalue order: eta_2 < 0");
  }
  if (np >= 1 && lam_m > tol && cert.slack_rank < static_cast<int>(np) - 1)
    cert.failures.push_back("rank(C + lambda_m I) < dim - 1");
  if (cert.stationarity > tol) cert.failures.push_back("stationarity residual " + std::to_string(cert.stationarity));
  for (std::size_t j = 0; j < cert.slackness.size(); ++j)
    if (cert.slackness[j] > tol) cert.failures.push_back("complementary slackness " + std::to_string(j + 1));
  if (cert.primal_violation > 1e-9 * (1.0 + std::abs(res.value))) cert.failures.push_back("primal infeasible");
  if (!linalg::is_psd(res.S11)) cert.failures.push_back("S not PSD");
  cert.pass = cert.failures.empty();
  return cert;
}

/// Rank-1 factor of the reduced optimum. Runs purification when the optimum
/// is not numerically rank 1.
inline Vector reduced_beamformer(const QcqpProblem& p, const SolveResult& res, bool& ok, const SolverOptions& opt = {}) {
  ok = true;
  const auto n = p.h.size();
  if (n == 0) return Vector();
  const auto eg = linalg::sym_eig_desc(res.S11);
  const double top = std::max(eg.values(0), 0.0);
  Matrix S = res.S11;
  if (top > 0.0 && n > 1 && eg.values(1) > 1e-6 * top) {
    Matrix purified;
    const int r = linalg::psd_rank(res.S11, 1e-6);
    const bool got = r < n ? detail::solve_on_subspace(p, eg.vectors.leftCols(r), opt, 0, purified)
                           : detail::solve_with_shrunk_trace(p, res.value, opt, 0, purified);
    if (got) S = purified;
    else ok = false;
  }
  const auto e2 = linalg::sym_eig_desc(S);
  const double l1 = std::max(e2.values(0), 0.0);
  if (n > 1 && e2.values(1) > 1e-6 * std::max(l1, 1e-300)) ok = false;
  Vector b = std::sqrt(l1) * e2.vectors.col(0);
  if (p.h.dot(b) < 0.0) b = -b;
  return b;
}

/// Full-dimension beamformer: lifts the rank-1 reduced factor through the
/// completion and factors the resulting covariance.
inline Beamformer extract_beamformer(const SolveResult& res, const ReducedProblem& red, double Pbar, bool& ok,
                                     const SolverOptions& opt = {}) {
  const QcqpProblem p = qcqp_from_reduced(red, Pbar);
  const Vector b_red = reduced_beamformer(p, res, ok, opt);
  const Matrix S = lift_solution(red, b_red * b_red.transpose());
  const auto eg = linalg::sym_eig_desc(S);
  Beamformer bf;
  bf.user = red.user;
  const double top = std::max(eg.values(0), 0.0);
  if (S.rows() > 1 && eg.values(1) > 1e-8 * std::max(top, 1e-300) && eg.values(1) > 1e-14) ok = false;
  bf.b = std::sqrt(top) * eg.vectors.col(0);
  const Vector direct = red.lift * (Vector(red.h.size() + red.h_hat.size()) << red.h, red.h_hat).finished();
  if (direct.dot(bf.b) < 0.0) bf.b = -bf.b;
  if (top == 0.0) bf.b.setZero();
  return bf;
}

struct UserSolution {
  Beamformer beamformer;
  double signal = 0.0;              // h_uu^T S h_uu with S = b b^T
  double predicted = 0.0;           // power-split objective
  std::vector<double> leakage;      // h_uj^T S h_uj for each receiver (0 at j == u)
  ReducedProblem reduced;
  PowerSplit split;
  KktCertificate certificate;
  bool rank_one = true;
  bool ok() const { return certificate.pass && rank_one; }
};

inline UserSolution solve_user(const MisoNetwork& net, std::size_t user, const InterferenceBudget& budget,
                               const SolverOptions& opt = {}) {
  UserSolution sol;
  sol.reduced = reduce_user_problem(net, user, budget);
  sol.split = solve_power_split(sol.reduced, opt);
  sol.predicted = sol.split.value;
  const QcqpProblem inner = qcqp_from_reduced(sol.reduced, sol.split.Pbar);
  sol.certificate = certify_kkt(inner, sol.split.inner);
  bool ok = true;
  sol.beamformer = extract_beamformer(sol.split.inner, sol.reduced, sol.split.Pbar, ok, opt);
  sol.rank_one = ok;
  const Vector& b = sol.beamformer.b;
  const double sq = net.direct(user).dot(b);
  sol.signal = sq * sq;
  sol.leakage.assign(net.users(), 0.0);
  for (std::size_t j = 0; j < net.users(); ++j) {
    if (j == user) continue;
    const double l = net.h[user][j].dot(b);
    sol.leakage[j] = l * l;
  }
  return sol;
}

}  // namespace misobf
