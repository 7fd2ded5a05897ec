#pragma once

// Reduction of a single user's signal-power problem
//
//   max h_uu^T S h_uu  s.t.  h_uj^T S h_uj <= z_uj^2 (j != u), tr S <= P_u, S >= 0
//
// from t_u dimensions to dim = min(t_u, m - 1). A sequence of reflections
// moves the cross channels h_uj into the leading `dim` coordinates; the
// direct channel splits into a leading part `h` and an interference-free
// residual of squared norm `h_hat_norm2`.

#include "misobf/channel_model.hpp"
#include "misobf/completion.hpp"

#include <algorithm>
#include <vector>

namespace misobf {

struct ReducedProblem {
  std::size_t user = 0;
  int dim = 0;                    // min(t_u, m - 1)
  Vector h;                       // reduced direct channel, length dim
  Vector h_hat;                   // residual direct channel, length t_u - dim
  double h_hat_norm2 = 0.0;       // ||h_hat||^2
  std::vector<Vector> hj;         // reduced cross channels, length dim each
  std::vector<std::size_t> rx;    // receiver index for each hj
  std::vector<double> z2;         // budgets for each hj
  double P = 0.0;                 // power budget of the user
  Matrix lift;                    // orthogonal t_u x t_u; original = lift * rotated
};

inline ReducedProblem reduce_user_problem(const MisoNetwork& net, std::size_t user, const InterferenceBudget& budget) {
  require_valid(net);
  const auto m = net.users();
  if (user >= m) throw Error("reduce_user_problem: user index out of range");
  if (budget.users() != m) throw Error("reduce_user_problem: budget size does not match network");

  const int t = net.t[user];
  const int dim = std::min<int>(t, static_cast<int>(m) - 1);

  ReducedProblem red;
  red.user = user;
  red.dim = dim;
  red.P = net.P[user];
  red.lift = Matrix::Identity(t, t);

  std::vector<Vector> cross;
  for (std::size_t j = 0; j < m; ++j) {
    if (j == user) continue;
    cross.push_back(net.h[user][j]);
    red.rx.push_back(j);
    red.z2.push_back(budget.get(user, j));
  }
  Vector direct = net.direct(user);

  if (t > static_cast<int>(m) - 1) {
    // Step k keeps the first k coordinates and rotates the rest of the k-th
    // cross channel onto coordinate k.
    for (int k = 0; k < static_cast<int>(cross.size()); ++k) {
      const int tail = t - k;
      const Matrix U = linalg::householder_to_e1(cross[k].tail(tail));
      for (auto& v : cross) v.tail(tail) = U * v.tail(tail);
      direct.tail(tail) = U * direct.tail(tail);
      red.lift.rightCols(tail) = red.lift.rightCols(tail) * U;
    }
  }

  red.h = direct.head(dim);
  red.h_hat = direct.tail(t - dim);
  red.h_hat_norm2 = red.h_hat.squaredNorm();
  for (auto& v : cross) {
    red.hj.push_back(v.head(dim));
  }
  return red;
}

/// Lifts an optimal reduced block S11 to a full t_u x t_u covariance using
/// the rank-preserving completion with x = h, y = h_hat, budget P.
inline Matrix lift_solution(const ReducedProblem& red, const Matrix& S11) {
  if (S11.rows() != red.dim || S11.cols() != red.dim) throw Error("lift_solution: S11 must be dim x dim");
  if (!linalg::is_psd(S11)) throw Error("lift_solution: S11 is not PSD");
  if (S11.trace() > red.P + 1e-10 * (1.0 + red.P)) throw Error("lift_solution: trace(S11) exceeds P");
  CompletionInput in{red.h, red.h_hat, S11, red.P};
  const auto done = complete_matrix(in);
  Matrix S = red.lift * done.K * red.lift.transpose();
  return 0.5 * (S + S.transpose());
}

}  // namespace misobf
