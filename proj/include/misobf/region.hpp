#pragma once

// SUD rate-region tracing by interference-budget sweeps.
//
// For a fixed budget matrix the per-user problems decouple: user i's
// beamformer depends only on its own outgoing budgets z_ij. The tracer solves
// each user once per budget tuple, combines the per-user choices, evaluates
// the rates with the realized interference, and keeps the Pareto set.

#include "misobf/channel_model.hpp"
#include "misobf/oracle.hpp"
#include "misobf/solver.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace misobf {

struct RegionGrid {
  int G = 8;                  // log-spaced samples per budget pair
  double low_ratio = 1e-3;    // smallest positive sample, relative to the upper limit
  std::size_t samples = 4096; // quasi-random budget draws when m > 3
  std::uint64_t seed = 0;     // random shift of the quasi-random points (m > 3)
};

/// Budget samples for one (tx, rx) pair: 0, G log-spaced values in
/// [low_ratio * upper, upper], then +inf. Sorted ascending.
inline std::vector<double> budget_samples(const RegionGrid& grid, double upper) {
  if (grid.G < 2) throw Error("region grid: G must be at least 2");
  std::vector<double> out{0.0};
  if (upper > 0.0) {
    const double lo = std::log(grid.low_ratio * upper), hi = std::log(upper);
    for (int k = 0; k < grid.G; ++k) {
      const double v = k + 1 == grid.G ? upper : std::exp(lo + (hi - lo) * k / (grid.G - 1));
      out.push_back(v);
    }
  }
  out.push_back(kInf);
  return out;
}

struct ParetoPoint {
  RatePoint rates;
  std::vector<Beamformer> beamformers;
  Matrix realized;            // realized interference map h_ij^T S_i h_ij
  std::size_t grid_index = 0; // position in the sweep order
};

struct ParetoSet {
  std::vector<ParetoPoint> points;
  RegionGrid grid;
  std::size_t evaluated = 0;      // rate points evaluated before filtering
  std::size_t user_solves = 0;
  std::size_t failed_certificates = 0;
};

struct WeightVector {
  std::vector<double> mu;
};

/// Indices of the non-dominated points in input order. A point is dropped
/// when another point is >= in every coordinate; of identical points only
/// the first is kept.
inline std::vector<std::size_t> pareto_filter(const std::vector<RatePoint>& pts) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> keep;
  if (n == 0) return keep;
  const std::size_t m = pts[0].size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(pts[b].R.begin(), pts[b].R.end(), pts[a].R.begin(), pts[a].R.end());
  });
  // Every point that weakly dominates p precedes p in `order`.
  std::vector<char> kept(n, 0);
  if (m == 1) {
    kept[order[0]] = 1;
  } else if (m == 2) {
    double best = -kInf;
    for (auto i : order)
      if (pts[i][1] > best) {
        kept[i] = 1;
        best = pts[i][1];
      }
  } else if (m == 3) {
    std::map<double, double> stair;  // (R_2 -> R_3), R_3 strictly decreasing in R_2
    for (auto i : order) {
      const double a = pts[i][1], b = pts[i][2];
      auto it = stair.lower_bound(a);
      if (it != stair.end() && it->second >= b) continue;
      kept[i] = 1;
      while (it != stair.begin()) {
        auto prev = std::prev(it);
        if (prev->second <= b) it = stair.erase(prev);
        else break;
      }
      if (it != stair.end() && it->first == a) stair.erase(it);
      stair[a] = b;
    }
  } else {
    std::vector<std::size_t> front;
    for (auto i : order) {
      bool dominated = false;
      for (auto f : front) {
        bool ge = true;
        for (std::size_t d = 0; d < m && ge; ++d) ge = pts[f][d] >= pts[i][d];
        if (ge) {
          dominated = true;
          break;
        }
      }
      if (!dominated) {
        front.push_back(i);
        kept[i] = 1;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (kept[i]) keep.push_back(i);
  return keep;
}

struct TraceOptions {
  int threads = 1;
  SolverOptions solver;
};

namespace detail {

struct UserOption {
  Beamformer bf;
  double signal = 0.0;
  std::vector<double> leakage;
  bool certified = true;
};

template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

// Drops options that another option beats on signal without leaking more
// anywhere; such options never contribute a Pareto point.
inline std::vector<std::size_t> prune_options(const std::vector<UserOption>& opts) {
  std::vector<std::size_t> keep;
  for (std::size_t a = 0; a < opts.size(); ++a) {
    bool dominated = false;
    for (std::size_t b = 0; b < opts.size() && !dominated; ++b) {
      if (a == b) continue;
      bool ge = opts[b].signal >= opts[a].signal;
      bool equal = opts[b].signal == opts[a].signal;
      for (std::size_t j = 0; j < opts[a].leakage.size() && ge; ++j) {
        ge = opts[b].leakage[j] <= opts[a].leakage[j];
        equal = equal && opts[b].leakage[j] == opts[a].leakage[j];
      }
      dominated = ge && (!equal || b < a);
    }
    if (!dominated) keep.push_back(a);
  }
  return keep;
}

inline double halton(std::size_t index, int base) {
  double f = 1.0, r = 0.0;
  std::size_t i = index;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<std::size_t>(base));
    i /= static_cast<std::size_t>(base);
  }
  return r;
}

inline int nth_prime(int n) {
  int count = 0;
  for (int c = 2;; ++c) {
    bool prime = true;
    for (int d = 2; d * d <= c; ++d)
      if (c % d == 0) {
        prime = false;
        break;
      }
    if (prime && count++ == n) return c;
  }
}

}  // namespace detail

inline ParetoSet trace_region(const MisoNetwork& net, const RegionGrid& grid, const TraceOptions& opt = {}) {
  require_valid(net);
  const std::size_t m = net.users();
  ParetoSet set;
  set.grid = grid;

  // samples[i][j]: budget values for pair (i -> j).
  std::vector<std::vector<std::vector<double>>> samples(m, std::vector<std::vector<double>>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) samples[i][j] = budget_samples(grid, net.P[i] * net.h[i][j].squaredNorm());

  // Per-user budget tuples, as index vectors over the receivers j != i.
  std::vector<std::vector<std::vector<int>>> tuples(m);
  std::vector<std::vector<std::size_t>> combos;  // for m > 3: per-sample tuple choice per user
  const int levels = grid.G + 2;
  if (m <= 3) {
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t count = static_cast<std::size_t>(std::pow(levels, static_cast<double>(m - 1)));
      for (std::size_t c = 0; c < count; ++c) {
        std::vector<int> idx;
        std::size_t rem = c;
        for (std::size_t d = 0; d + 1 < m; ++d) {
          idx.push_back(static_cast<int>(rem % static_cast<std::size_t>(levels)));
          rem /= static_cast<std::size_t>(levels);
        }
        std::reverse(idx.begin(), idx.end());
        tuples[i].push_back(std::move(idx));
      }
    }
  } else {
    std::vector<std::map<std::vector<int>, std::size_t>> seen(m);
    Rng rng(grid.seed, 0x68616c74ULL);
    std::vector<double> shift(m * (m - 1));
    for (auto& v : shift) v = rng.uniform();
    for (std::size_t s = 0; s < grid.samples; ++s) {
      std::vector<std::size_t> choice(m);
      int dim = 0;
      for (std::size_t i = 0; i < m; ++i) {
        std::vector<int> idx;
        for (std::size_t d = 0; d + 1 < m; ++d, ++dim) {
          double u = detail::halton(s + 1, detail::nth_prime(dim)) + shift[static_cast<std::size_t>(dim)];
          u -= std::floor(u);
          idx.push_back(std::min(levels - 1, static_cast<int>(u * levels)));
        }
        auto [it, fresh] = seen[i].emplace(idx, tuples[i].size());
        if (fresh) tuples[i].push_back(idx);
        choice[i] = it->second;
      }
      combos.push_back(std::move(choice));
    }
  }

  // Solve every (user, tuple) once.
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t c = 0; c < tuples[i].size(); ++c) jobs.emplace_back(i, c);
  std::vector<std::vector<detail::UserOption>> options(m);
  for (std::size_t i = 0; i < m; ++i) options[i].resize(tuples[i].size());
  detail::parallel_for(jobs.size(), opt.threads, [&](std::size_t k) {
    const auto [i, c] = jobs[k];
    InterferenceBudget budget(m);
    std::size_t d = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      budget.set(i, j, samples[i][j][static_cast<std::size_t>(tuples[i][c][d++])]);
    }
    const UserSolution sol = solve_user(net, i, budget, opt.solver);
    options[i][c] = detail::UserOption{sol.beamformer, sol.signal, sol.leakage, sol.ok()};
  });
  set.user_solves = jobs.size();
  for (const auto& per_user : options)
    for (const auto& o : per_user)
      if (!o.certified) ++set.failed_certificates;

  auto evaluate = [&](const std::vector<std::size_t>& pick) {
    RatePoint r{std::vector<double>(m)};
    for (std::size_t i = 0; i < m; ++i) {
      double interference = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        if (j != i) interference += options[j][pick[j]].leakage[i];
      r[i] = sud_rate(options[i][pick[i]].signal, interference);
    }
    return r;
  };

  std::vector<RatePoint> rates;
  std::vector<std::vector<std::size_t>> picks;
  if (m <= 3) {
    std::vector<std::vector<std::size_t>> alive(m);
    for (std::size_t i = 0; i < m; ++i) alive[i] = detail::prune_options(options[i]);
    std::vector<std::size_t> counter(m, 0);
    bool done = false;
    while (!done) {
      std::vector<std::size_t> pick(m);
      for (std::size_t i = 0; i < m; ++i) pick[i] = alive[i][counter[i]];
      rates.push_back(evaluate(pick));
      picks.push_back(std::move(pick));
      done = true;
      for (std::size_t d = m; d-- > 0;) {
        if (++counter[d] < alive[d].size()) {
          done = false;
          break;
        }
        counter[d] = 0;
      }
    }
  } else {
    for (const auto& pick : combos) {
      rates.push_back(evaluate(pick));
      picks.push_back(pick);
    }
  }
  set.evaluated = rates.size();

  for (auto idx : pareto_filter(rates)) {
    ParetoPoint pt;
    pt.rates = rates[idx];
    pt.grid_index = idx;
    pt.realized = Matrix::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      const auto& o = options[i][picks[idx][i]];
      pt.beamformers.push_back(o.bf);
      for (std::size_t j = 0; j < m; ++j)
        if (j != i) pt.realized(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = o.leakage[j];
    }
    set.points.push_back(std::move(pt));
  }
  return set;
}

/// Stored point maximizing sum_i mu_i R_i; ties go to the lexicographically
/// largest rate vector.
inline const ParetoPoint& weighted_boundary(const ParetoSet& set, const WeightVector& w) {
  if (set.points.empty()) throw Error("weighted_boundary: empty Pareto set");
  const auto m = set.points.front().rates.size();
  if (w.mu.size() != m) throw Error("weighted_boundary: weight count does not match user count");
  bool any = false;
  for (double v : w.mu) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("weighted_boundary: weights must be finite and nonnegative");
    any = any || v > 0.0;
  }
  if (!any) throw Error("weighted_boundary: weights must not all be zero");
  const ParetoPoint* best = nullptr;
  double best_val = -kInf;
  for (const auto& p : set.points) {
    double v = 0.0;
    for (std::size_t i = 0; i < m; ++i) v += w.mu[i] * p.rates[i];
    if (v > best_val || (v == best_val && best && p.rates.R > best->rates.R)) {
      best_val = v;
      best = &p;
    }
  }
  return *best;
}

/// Distance (max norm) from r to the region dominated by the Pareto set;
/// zero when some stored point is >= r in every coordinate.
inline double frontier_violation(const ParetoSet& set, const RatePoint& r) {
  double best = kInf;
  for (const auto& p : set.points) {
    double gap = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) gap = std::max(gap, r[i] - p.rates[i]);
    best = std::min(best, gap);
    if (best <= 0.0) return 0.0;
  }
  return best;
}

/// Largest frontier violation over a set of oracle rate points.
inline double coverage_violation(const ParetoSet& set, const std::vector<RatePoint>& oracle) {
  double worst = 0.0;
  for (const auto& r : oracle) worst = std::max(worst, frontier_violation(set, r));
  return worst;
}

enum class ProjectionMode { Inactive, AtMax, Level };

struct ProjectionSpec {
  ProjectionMode mode = ProjectionMode::AtMax;
  double level = 0.0;        // Level mode: target rate of the fixed user
  double half_width = 0.0;   // Level mode: band half-width (<= 0 picks half the local spacing)
  double at_max_tol = 1e-3;  // AtMax mode: relative tolerance below the maximum
};

struct Curve {
  std::size_t a = 0, b = 1;  // users on the two axes
  std::vector<std::array<double, 2>> points;
  std::string warning;
};

/// 2-D Pareto frontier of (x, y) pairs, ascending in x.
inline std::vector<std::array<double, 2>> frontier_2d(const std::vector<std::array<double, 2>>& pts) {
  std::vector<RatePoint> rp;
  rp.reserve(pts.size());
  for (const auto& p : pts) rp.push_back(RatePoint{{p[0], p[1]}});
  std::vector<std::array<double, 2>> out;
  for (auto i : pareto_filter(rp)) out.push_back(pts[i]);
  std::sort(out.begin(), out.end());
  return out;
}

inline Curve project_2d(const MisoNetwork& net, const ParetoSet& set, std::size_t fixed_user, const ProjectionSpec& spec,
                        const TraceOptions& opt = {}) {
  const std::size_t m = net.users();
  Curve curve;
  if (m == 2) {
    std::vector<std::array<double, 2>> pts;
    for (const auto& p : set.points) pts.push_back({p.rates[0], p.rates[1]});
    curve.points = frontier_2d(pts);
    return curve;
  }
  if (m != 3) throw Error("project_2d: projections are defined for m = 2 or m = 3");
  if (fixed_user >= m) throw Error("project_2d: user index out of range");
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < m; ++i)
    if (i != fixed_user) others.push_back(i);
  curve.a = others[0];
  curve.b = others[1];

  std::vector<std::array<double, 2>> pts;
  if (spec.mode == ProjectionMode::Inactive) {
    const ParetoSet sub = trace_region(net.without_user(fixed_user), set.grid, opt);
    for (const auto& p : sub.points) pts.push_back({p.rates[0], p.rates[1]});
  } else {
    double lo = 0.0, hi = 0.0;
    if (spec.mode == ProjectionMode::AtMax) {
      double rmax = 0.0;
      for (const auto& p : set.points) rmax = std::max(rmax, p.rates[fixed_user]);
      lo = (1.0 - spec.at_max_tol) * rmax;
      hi = kInf;
    } else {
      double hw = spec.half_width;
      if (hw <= 0.0) {
        std::vector<double> levels;
        for (const auto& p : set.points) levels.push_back(p.rates[fixed_user]);
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
        double gap = kInf;
        auto it = std::lower_bound(levels.begin(), levels.end(), spec.level);
        if (it != levels.end() && it != levels.begin()) gap = *it - *std::prev(it);
        else if (levels.size() >= 2) gap = levels[1] - levels[0];
        hw = std::isfinite(gap) ? 0.5 * gap : 0.0;
      }
      lo = spec.level - hw;
      hi = spec.level + hw;
    }
    for (const auto& p : set.points) {
      const double r = p.rates[fixed_user];
      if (r >= lo && r <= hi) pts.push_back({p.rates[curve.a], p.rates[curve.b]});
    }
  }
  curve.points = frontier_2d(pts);
  if (curve.points.empty()) curve.warning = "projection selected no points";
  return curve;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Columns: R_1..R_m, b_1_1..b_m_tm, zr_i_j for i != j.
inline void write_region_csv(std::ostream& os, const MisoNetwork& net, const ParetoSet& set) {
  const std::size_t m = net.users();
  std::vector<std::string> cols;
  for (std::size_t i = 0; i < m; ++i) cols.push_back("R_" + std::to_string(i + 1));
  for (std::size_t i = 0; i < m; ++i)
    for (int k = 0; k < net.t[i]; ++k) cols.push_back("b_" + std::to_string(i + 1) + "_" + std::to_string(k + 1));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) cols.push_back("zr_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << '\n';
  for (const auto& p : set.points) {
    std::vector<double> row(p.rates.R);
    for (const auto& bf : p.beamformers)
      for (Eigen::Index k = 0; k < bf.b.size(); ++k) row.push_back(bf.b(k));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) row.push_back(p.realized(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_number(row[c]);
    os << '\n';
  }
}

inline void write_projection_csv(std::ostream& os, const Curve& curve) {
  os << "R_" << curve.a + 1 << ",R_" << curve.b + 1 << '\n';
  for (const auto& p : curve.points) os << format_number(p[0]) << ',' << format_number(p[1]) << '\n';
}

}  // namespace misobf
