#pragma once

// Real-valued m-user MISO interference channel with unit-variance noise at
// every receiver, and the single-user-detection (SUD) rate map.

#include "misobf/linalg.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace misobf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Channel description. Users are 0-based inside the library.
///
/// `h[j][i]` is the channel from transmitter j to receiver i and has
/// `t[j]` entries. Receiver noise variance is 1.
struct MisoNetwork {
  std::vector<int> t;                  // antennas per transmitter
  std::vector<double> P;               // power budget per transmitter
  std::vector<std::vector<Vector>> h;  // h[tx][rx]

  std::size_t users() const { return t.size(); }
  const Vector& channel(std::size_t tx, std::size_t rx) const { return h[tx][rx]; }
  const Vector& direct(std::size_t user) const { return h[user][user]; }

  /// Network with `user` removed; remaining users keep their relative order.
  MisoNetwork without_user(std::size_t user) const {
    MisoNetwork out;
    for (std::size_t j = 0; j < users(); ++j) {
      if (j == user) continue;
      out.t.push_back(t[j]);
      out.P.push_back(P[j]);
      std::vector<Vector> row;
      for (std::size_t i = 0; i < users(); ++i)
        if (i != user) row.push_back(h[j][i]);
      out.h.push_back(std::move(row));
    }
    return out;
  }
};

/// One transmit covariance per user.
using CovarianceSet = std::vector<Matrix>;

struct Beamformer {
  std::size_t user = 0;
  Vector b;
};

/// Rates in bits per real channel use.
struct RatePoint {
  std::vector<double> R;

  std::size_t size() const { return R.size(); }
  double operator[](std::size_t i) const { return R[i]; }
  double& operator[](std::size_t i) { return R[i]; }
  bool operator==(const RatePoint&) const = default;
};

/// Caps on interference power h_ij^T S_i h_ij from transmitter i at
/// receiver j (i != j). Entries default to +inf (unconstrained).
class InterferenceBudget {
 public:
  InterferenceBudget() = default;
  explicit InterferenceBudget(std::size_t m, double fill = kInf)
      : m_(m), z2_(Matrix::Constant(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m), fill)) {
    z2_.diagonal().setZero();
  }

  static InterferenceBudget unconstrained(std::size_t m) { return InterferenceBudget(m, kInf); }
  static InterferenceBudget zero_forcing(std::size_t m) { return InterferenceBudget(m, 0.0); }

  std::size_t users() const { return m_; }

  double get(std::size_t tx, std::size_t rx) const { return z2_(idx(tx), idx(rx)); }

  void set(std::size_t tx, std::size_t rx, double z2) {
    if (tx == rx) throw Error("interference budget: diagonal entry (" + std::to_string(tx + 1) + ") is not a budget");
    if (tx >= m_ || rx >= m_) throw Error("interference budget: index out of range");
    if (!(z2 >= 0.0)) throw Error("interference budget: entries must be nonnegative");
    z2_(idx(tx), idx(rx)) = z2;
  }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }
  std::size_t m_ = 0;
  Matrix z2_;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string str() const {
    std::ostringstream os;
    for (std::size_t k = 0; k < violations.size(); ++k) os << (k ? "; " : "") << violations[k];
    return os.str();
  }
};

inline ValidationReport validate_network(const MisoNetwork& net) {
  ValidationReport rep;
  const auto m = net.users();
  auto add = [&](std::string kind, const std::string& where) { rep.violations.push_back(kind + ": " + where); };
  if (m == 0) add("dimension mismatch", "no users");
  if (net.P.size() != m) add("dimension mismatch", "P has " + std::to_string(net.P.size()) + " entries, expected " + std::to_string(m));
  if (net.h.size() != m) add("dimension mismatch", "H has " + std::to_string(net.h.size()) + " transmitters, expected " + std::to_string(m));
  for (std::size_t j = 0; j < m; ++j) {
    if (net.t[j] < 1) add("dimension mismatch", "t_" + std::to_string(j + 1) + " < 1");
    if (j < net.P.size()) {
      if (!std::isfinite(net.P[j])) add("non-finite entry", "P_" + std::to_string(j + 1));
      else if (net.P[j] <= 0.0) add("non-positive power", "P_" + std::to_string(j + 1));
    }
  }
  for (std::size_t j = 0; j < std::min(m, net.h.size()); ++j) {
    if (net.h[j].size() != m) {
      add("dimension mismatch", "transmitter " + std::to_string(j + 1) + " has " + std::to_string(net.h[j].size()) + " receivers");
      continue;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const auto tag = "h_" + std::to_string(j + 1) + std::to_string(i + 1);
      if (net.h[j][i].size() != net.t[j]) add("dimension mismatch", tag + " length " + std::to_string(net.h[j][i].size()) + " != t_" + std::to_string(j + 1));
      else if (!net.h[j][i].allFinite()) add("non-finite entry", tag);
    }
  }
  return rep;
}

inline void require_valid(const MisoNetwork& net) {
  if (auto rep = validate_network(net); !rep.ok()) throw Error("invalid network: " + rep.str());
}

inline void check_covariances(const MisoNetwork& net, const CovarianceSet& cov) {
  if (cov.size() != net.users()) throw Error("dimension mismatch: covariance count");
  for (std::size_t i = 0; i < cov.size(); ++i)
    if (cov[i].rows() != net.t[i] || cov[i].cols() != net.t[i])
      throw Error("dimension mismatch: S_" + std::to_string(i + 1));
}

/// True when every S_i is symmetric PSD and within its power budget.
inline bool covariances_feasible(const MisoNetwork& net, const CovarianceSet& cov) {
  if (cov.size() != net.users()) return false;
  for (std::size_t i = 0; i < cov.size(); ++i) {
    if (cov[i].rows() != net.t[i] || !linalg::is_symmetric(cov[i])) return false;
    if (!linalg::is_psd(cov[i])) return false;
    if (cov[i].trace() > net.P[i] + 1e-10) return false;
  }
  return true;
}

/// Entry (i, j), i != j, is h_ij^T S_i h_ij: the interference transmitter i
/// places on receiver j. Diagonal entries are zero.
inline Matrix interference_map(const MisoNetwork& net, const CovarianceSet& cov) {
  check_covariances(net, cov);
  const auto m = static_cast<Eigen::Index>(net.users());
  Matrix out = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j) {
        const Vector& hij = net.h[i][j];
        out(i, j) = std::max(0.0, hij.dot(cov[i] * hij));
      }
  return out;
}

inline double sud_rate(double signal, double interference) {
  return 0.5 * std::log2(1.0 + signal / (1.0 + interference));
}

/// R_i = 1/2 log2(1 + h_ii^T S_i h_ii / (1 + sum_{j != i} h_ji^T S_j h_ji)).
inline RatePoint rate_vector(const MisoNetwork& net, const CovarianceSet& cov) {
  const Matrix zr = interference_map(net, cov);
  const auto m = net.users();
  RatePoint r{std::vector<double>(m)};
  for (std::size_t i = 0; i < m; ++i) {
    const Vector& hii = net.h[i][i];
    const double signal = std::max(0.0, hii.dot(cov[i] * hii));
    double interference = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) interference += zr(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
    r[i] = sud_rate(signal, interference);
  }
  return r;
}

/// Interference-free rate 1/2 log2(1 + P_i ||h_ii||^2).
inline double single_user_bound(const MisoNetwork& net, std::size_t user) {
  return 0.5 * std::log2(1.0 + net.P[user] * net.direct(user).squaredNorm());
}

/// b b^T. Throws when ||b||^2 exceeds `power_cap` by more than 1e-10.
inline Matrix beamformer_to_covariance(const Beamformer& bf, double power_cap = kInf) {
  if (bf.b.squaredNorm() > power_cap + 1e-10)
    throw Error("power violation: ||b_" + std::to_string(bf.user + 1) + "||^2 exceeds P");
  return bf.b * bf.b.transpose();
}

inline CovarianceSet to_covariances(const MisoNetwork& net, const std::vector<Beamformer>& bfs) {
  CovarianceSet cov;
  cov.reserve(bfs.size());
  for (const auto& bf : bfs) cov.push_back(beamformer_to_covariance(bf, net.P.at(bf.user)));
  return cov;
}

}  // namespace misobf
