#pragma once

// Completion of a PSD matrix K = [K11 K21^T; K21 K22] with a fixed upper-left
// block and a trace budget, maximizing the quadratic form [x; y]^T K [x; y].
//
// The maximum is (sqrt(x^T K11 x) + ||y|| sqrt(P - tr K11))^2 and it is
// attained by a completion whose rank does not exceed max(rank K11, 1).

#include "misobf/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace misobf {

struct CompletionInput {
  Vector x;    // t1
  Vector y;    // t2 (may be empty)
  Matrix K11;  // t1 x t1, PSD
  double P = 0.0;
};

enum class CompletionCase {
  Aligned,      // x^T K11 x != 0, y != 0
  DegenerateX,  // x^T K11 x == 0, y != 0
  ZeroY,        // y == 0
};

inline const char* to_string(CompletionCase c) {
  switch (c) {
    case CompletionCase::Aligned: return "aligned";
    case CompletionCase::DegenerateX: return "degenerate-x";
    case CompletionCase::ZeroY: return "zero-y";
  }
  return "?";
}

struct CompletionResult {
  Matrix K;
  CompletionCase kind = CompletionCase::ZeroY;
  double bound = 0.0;
};

namespace detail {

struct CompletionTerms {
  double quad = 0.0;      // x^T K11 x, zeroed below the dispatch threshold
  double y_norm2 = 0.0;   // ||y||^2, zeroed below the dispatch threshold
  double residual = 0.0;  // P - tr K11, clipped at 0
  CompletionCase kind = CompletionCase::ZeroY;
};

inline CompletionTerms completion_terms(const CompletionInput& in) {
  const auto t1 = in.x.size();
  if (in.K11.rows() != t1 || in.K11.cols() != t1) throw Error("completion: K11 must be t1 x t1");
  const double tr = in.K11.trace();
  if (tr > in.P + 1e-12 * (1.0 + std::abs(in.P))) throw Error("completion: trace(K11) exceeds P");
  if (!linalg::is_psd(in.K11)) throw Error("completion: K11 is not PSD");

  CompletionTerms c;
  const double zero_tol = 1e-12 * (1.0 + std::abs(tr));
  c.quad = std::max(0.0, in.x.dot(in.K11 * in.x));
  c.y_norm2 = in.y.squaredNorm();
  c.residual = std::max(0.0, in.P - tr);
  if (c.quad < zero_tol) c.quad = 0.0;
  if (c.y_norm2 < zero_tol) c.y_norm2 = 0.0;
  if (c.y_norm2 == 0.0) c.kind = CompletionCase::ZeroY;
  else if (c.quad == 0.0) c.kind = CompletionCase::DegenerateX;
  else c.kind = CompletionCase::Aligned;
  return c;
}

}  // namespace detail

/// Square-root factor F of a PSD matrix: F^T F = K11, eigenvalues taken in
/// descending order, rows beyond the numerical rank set to zero.
/// Row k is sqrt(lambda_k) q_k^T with q_k's first nonzero entry positive.
inline Matrix psd_sqrt_factor(const Matrix& K11) {
  if (K11.rows() != K11.cols()) throw Error("psd_sqrt_factor: matrix must be square");
  const auto n = K11.rows();
  if (n == 0) return Matrix(0, 0);
  if (!linalg::is_symmetric(K11)) throw Error("psd_sqrt_factor: matrix must be symmetric");
  const auto eg = linalg::sym_eig_desc(K11);
  const double top = eg.values(0);
  const double scale = std::max({std::abs(K11.trace()), K11.cwiseAbs().maxCoeff(), 1e-300});
  if (eg.values(n - 1) < -1e-10 * scale) throw Error("psd_sqrt_factor: indefinite input");
  Matrix F = Matrix::Zero(n, n);
  if (top <= 0.0) return F;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (eg.values(k) <= 1e-12 * top) break;
    F.row(k) = std::sqrt(eg.values(k)) * eg.vectors.col(k).transpose();
  }
  return F;
}

/// Upper bound on [x;y]^T K [x;y] over feasible completions.
inline double completion_bound(const CompletionInput& in) {
  const auto c = detail::completion_terms(in);
  const double s = std::sqrt(c.quad) + std::sqrt(c.y_norm2) * std::sqrt(c.residual);
  return s * s;
}

/// Completion attaining `completion_bound`.
///
/// The blocks equal G^T G with G = [F, alpha F x y^T] (aligned case) or
/// G = [F, gain e1 y^T] (degenerate-x case), F = psd_sqrt_factor(K11), so
/// K is PSD with rank at most max(rank K11, 1).
inline CompletionResult complete_matrix(const CompletionInput& in) {
  const auto c = detail::completion_terms(in);
  const auto t1 = in.x.size();
  const auto t2 = in.y.size();
  const Matrix K11 = 0.5 * (in.K11 + in.K11.transpose());

  CompletionResult out;
  out.kind = c.kind;
  out.K = Matrix::Zero(t1 + t2, t1 + t2);
  out.K.topLeftCorner(t1, t1) = K11;
  {
    const double s = std::sqrt(c.quad) + std::sqrt(c.y_norm2) * std::sqrt(c.residual);
    out.bound = s * s;
  }
  if (c.kind == CompletionCase::ZeroY) return out;

  const double yn = std::sqrt(c.y_norm2);
  const double gain = std::sqrt(c.residual) / yn;  // sqrt(P - tr K11) / ||y||
  out.K.bottomRightCorner(t2, t2) = (c.residual / c.y_norm2) * in.y * in.y.transpose();

  Matrix K21;
  if (c.kind == CompletionCase::Aligned) {
    K21 = (gain / std::sqrt(c.quad)) * in.y * (K11 * in.x).transpose();
  } else if (t1 > 0) {
    const Matrix F = psd_sqrt_factor(K11);
    K21 = gain * in.y * F.row(0);
  } else {
    K21 = Matrix::Zero(t2, 0);
  }
  out.K.bottomLeftCorner(t2, t1) = K21;
  out.K.topRightCorner(t1, t2) = K21.transpose();
  return out;
}

/// Quadratic form [x; y]^T K [x; y].
inline double stacked_quadratic_form(const Vector& x, const Vector& y, const Matrix& K) {
  Vector z(x.size() + y.size());
  z << x, y;
  return z.dot(K * z);
}

}  // namespace misobf
