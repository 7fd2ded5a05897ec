#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace misobf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised for malformed inputs (dimension mismatch, infeasible matrices, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace linalg {

/// Symmetric eigendecomposition with eigenvalues in descending order and
/// each eigenvector's first non-negligible entry made positive.
struct SymEig {
  Vector values;   // descending
  Matrix vectors;  // column k pairs with values(k)
};

inline void normalize_sign(Eigen::Ref<Vector> v) {
  if (v.size() == 0) return;
  const double scale = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12 * scale) {
      if (v(i) < 0) v = -v;
      return;
    }
  }
}

inline SymEig sym_eig_desc(const Matrix& a) {
  SymEig out;
  const auto n = a.rows();
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index k = 0; k < n; ++k) normalize_sign(out.vectors.col(k));
  return out;
}

/// Ascending eigenvalues only.
inline Vector sym_eigvals(const Matrix& a) {
  if (a.rows() == 0) return Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_eig(const Matrix& a) {
  return a.rows() == 0 ? 0.0 : sym_eigvals(a)(0);
}

/// (a + a^T) / 2 as a new matrix; safe to assign back to `a`.
inline Matrix symmetrized(const Matrix& a) {
  Matrix out = a + a.transpose();
  out *= 0.5;
  return out;
}

inline bool is_symmetric(const Matrix& a, double rel_tol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// PSD up to -tol_rel * max(trace, tiny).
inline bool is_psd(const Matrix& a, double tol_rel = 1e-10) {
  if (a.rows() == 0) return true;
  const double tr = std::max(std::abs(a.trace()), 1e-300);
  return min_eig(a) >= -tol_rel * tr;
}

/// Numerical rank of a symmetric PSD matrix: eigenvalues above rel_tol * max.
inline int psd_rank(const Matrix& a, double rel_tol = 1e-8) {
  if (a.rows() == 0) return 0;
  const Vector ev = sym_eigvals(a);
  const double top = ev(ev.size() - 1);
  if (top <= 0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > rel_tol * top) ++r;
  return r;
}

/// Orthogonal symmetric reflector H with H * v = (||v||, 0, ..., 0).
/// Returns the identity for a zero vector, and for a vector that already
/// has that form.
inline Matrix householder_to_e1(const Vector& v) {
  const auto n = v.size();
  Matrix h = Matrix::Identity(n, n);
  const double norm = v.norm();
  if (n == 0 || norm == 0.0) return h;
  Vector w = v;
  w(0) -= norm;
  const double wn2 = w.squaredNorm();
  if (wn2 <= (1e-30 * norm) * norm) return h;
  h.noalias() -= (2.0 / wn2) * w * w.transpose();
  return h;
}

/// Orthonormal basis (columns) of the orthogonal complement of span(cols).
inline Matrix null_space_of_columns(const Matrix& cols, double rel_tol = 1e-10) {
  const auto n = cols.rows();
  if (cols.cols() == 0) return Matrix::Identity(n, n);
  const SymEig eg = sym_eig_desc(cols * cols.transpose());
  const double top = std::max(eg.values(0), 0.0);
  int keep = 0;
  for (Eigen::Index k = 0; k < n; ++k)
    if (eg.values(k) <= rel_tol * top) ++keep;
  if (top == 0.0) keep = static_cast<int>(n);
  return eg.vectors.rightCols(keep);
}

}  // namespace linalg
}  // namespace misobf
