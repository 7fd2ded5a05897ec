#include "test_support.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace misobf;
using misobf::test::vec;

namespace {

std::vector<RatePoint> pts(std::initializer_list<std::vector<double>> in) {
  std::vector<RatePoint> out;
  for (const auto& r : in) out.push_back(RatePoint{r});
  return out;
}

double max_rate(const ParetoSet& set, std::size_t user) {
  double best = 0.0;
  for (const auto& p : set.points) best = std::max(best, p.rates[user]);
  return best;
}

ParetoSet small_set(std::initializer_list<std::vector<double>> rates) {
  ParetoSet set;
  for (const auto& r : rates) set.points.push_back(ParetoPoint{RatePoint{r}, {}, Matrix(), 0});
  return set;
}

}  // namespace

TEST(ParetoFilter, Examples) {
  EXPECT_EQ(pareto_filter(pts({{1, 1}, {0.5, 0.5}})), (std::vector<std::size_t>{0}));
  EXPECT_EQ(pareto_filter(pts({{1, 0}, {0, 1}})).size(), 2u);
  EXPECT_TRUE(pareto_filter({}).empty());
}

TEST(ParetoFilter, DuplicatesKeepTheFirst) {
  EXPECT_EQ(pareto_filter(pts({{1, 2}, {1, 2}, {2, 1}})), (std::vector<std::size_t>{0, 2}));
}

TEST(ParetoFilter, AgreesWithBruteForceInThreeAndFourDimensions) {
  Rng rng(4);
  for (int m : {3, 4}) {
    std::vector<RatePoint> in;
    for (int k = 0; k < 300; ++k) {
      RatePoint r{std::vector<double>(static_cast<std::size_t>(m))};
      for (auto& v : r.R) v = std::round(rng.uniform() * 20.0) / 20.0;
      in.push_back(r);
    }
    const auto keep = pareto_filter(in);
    std::set<std::size_t> kept(keep.begin(), keep.end());
    for (std::size_t i = 0; i < in.size(); ++i) {
      bool dominated = false, dup_before = false;
      for (std::size_t j = 0; j < in.size(); ++j) {
        if (i == j) continue;
        bool ge = true, gt = false;
        for (int d = 0; d < m; ++d) {
          ge = ge && in[j].R[d] >= in[i].R[d];
          gt = gt || in[j].R[d] > in[i].R[d];
        }
        dominated = dominated || (ge && gt);
        dup_before = dup_before || (j < i && in[j] == in[i]);
      }
      EXPECT_EQ(kept.count(i) == 1, !dominated && !dup_before) << "m=" << m << " i=" << i;
    }
  }
}

TEST(BudgetSamples, SortedWithZeroAndInfinity) {
  RegionGrid grid;
  grid.G = 5;
  const auto s = budget_samples(grid, 4.0);
  ASSERT_EQ(s.size(), 7u);
  EXPECT_EQ(s.front(), 0.0);
  EXPECT_TRUE(std::isinf(s.back()));
  EXPECT_NEAR(s[1], 4e-3, 1e-15);
  EXPECT_EQ(s[5], 4.0);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
  grid.G = 1;
  EXPECT_THROW(budget_samples(grid, 1.0), Error);
}

TEST(BudgetSamples, RefinedGridContainsCoarseGrid) {
  RegionGrid coarse, fine;
  coarse.G = 5;
  fine.G = 9;
  const auto a = budget_samples(coarse, 3.0);
  const auto b = budget_samples(fine, 3.0);
  for (double v : a) {
    bool found = false;
    for (double w : b) found = found || std::abs(v - w) <= 1e-12 * (1.0 + std::abs(v)) || (std::isinf(v) && std::isinf(w));
    EXPECT_TRUE(found) << v;
  }
}

TEST(WeightedBoundary, PicksWeightedMaximum) {
  const auto set = small_set({{1, 0}, {0.6, 0.6}, {0, 1}});
  EXPECT_EQ(weighted_boundary(set, {{1, 0}}).rates[0], 1.0);
  EXPECT_EQ(weighted_boundary(set, {{1, 1}}).rates[0], 0.6);
  EXPECT_EQ(weighted_boundary(set, {{0, 2}}).rates[1], 1.0);
}

TEST(WeightedBoundary, TiesGoToLexicographicallyLargest) {
  const auto set = small_set({{0, 1}, {1, 0}});
  EXPECT_EQ(weighted_boundary(set, {{1, 1}}).rates[0], 1.0);
}

TEST(WeightedBoundary, BadInputsThrow) {
  const auto set = small_set({{1, 0}});
  EXPECT_THROW(weighted_boundary(ParetoSet{}, {{1, 1}}), Error);
  EXPECT_THROW(weighted_boundary(set, {{1}}), Error);
  EXPECT_THROW(weighted_boundary(set, {{0, 0}}), Error);
  EXPECT_THROW(weighted_boundary(set, {{-1, 2}}), Error);
}

TEST(FrontierViolation, ZeroInsideAndGapOutside) {
  const auto set = small_set({{1, 0.5}, {0.5, 1}});
  EXPECT_EQ(frontier_violation(set, RatePoint{{0.9, 0.4}}), 0.0);
  EXPECT_NEAR(frontier_violation(set, RatePoint{{0.8, 0.8}}), 0.3, 1e-15);
  EXPECT_NEAR(coverage_violation(set, {RatePoint{{0.1, 0.1}}, RatePoint{{1.2, 0.5}}}), 0.2, 1e-15);
}

TEST(TraceRegion, SingleUserGivesOnePoint) {
  MisoNetwork net;
  net.t = {2};
  net.P = {2.0};
  net.h = {{vec({1, 1})}};
  const auto set = trace_region(net, RegionGrid{});
  ASSERT_EQ(set.points.size(), 1u);
  EXPECT_NEAR(set.points[0].rates[0], 0.5 * std::log2(1.0 + 4.0), 1e-9);
}

TEST(TraceRegion, OrthogonalCrossChannelsGiveRectangle) {
  const auto net = test::two_user(vec({1, 0}), vec({0, 1}), vec({1, 0}), vec({0, 1}), 1.0, 2.0);
  RegionGrid grid;
  grid.G = 4;
  const auto set = trace_region(net, grid);
  ASSERT_EQ(set.points.size(), 1u);
  EXPECT_NEAR(set.points[0].rates[0], 0.5, 1e-9);
  EXPECT_NEAR(set.points[0].rates[1], 0.5 * std::log2(3.0), 1e-9);
  EXPECT_EQ(&weighted_boundary(set, {{1, 1}}), &set.points[0]);
}

TEST(TraceRegion, ShippedNetworkCorners) {
  const auto net = test::three_user_network();
  RegionGrid grid;
  grid.G = 3;
  const auto set = trace_region(net, grid);
  EXPECT_EQ(set.failed_certificates, 0u);
  const double corners[] = {1.474300423746678, 1.9689075844017097, 1.8912042824636865};
  for (std::size_t u = 0; u < 3; ++u) EXPECT_NEAR(max_rate(set, u), corners[u], 1e-6);
}

TEST(TraceRegion, DeterministicAcrossThreadCounts) {
  const auto net = test::three_user_network();
  RegionGrid grid;
  grid.G = 3;
  TraceOptions one, three;
  three.threads = 3;
  std::ostringstream a, b;
  write_region_csv(a, net, trace_region(net, grid, one));
  write_region_csv(b, net, trace_region(net, grid, three));
  EXPECT_EQ(a.str(), b.str());
}

TEST(TraceRegion, FourUsersUseSeededSampling) {
  Rng rng(31);
  MisoNetwork net;
  for (int i = 0; i < 4; ++i) {
    net.t.push_back(2);
    net.P.push_back(1.0);
  }
  net.h.assign(4, std::vector<Vector>(4));
  for (auto& row : net.h)
    for (auto& v : row) v = rng.normal_vector(2);
  RegionGrid grid;
  grid.G = 3;
  grid.samples = 64;
  grid.seed = 5;
  const auto a = trace_region(net, grid);
  const auto b = trace_region(net, grid);
  ASSERT_FALSE(a.points.empty());
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t k = 0; k < a.points.size(); ++k) EXPECT_EQ(a.points[k].rates, b.points[k].rates);
  for (const auto& p : a.points)
    for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(p.rates[i], single_user_bound(net, i) + 1e-9);
}

TEST(TraceRegion, RatesMatchStoredBeamformers) {
  const auto net = test::three_user_network();
  RegionGrid grid;
  grid.G = 2;
  const auto set = trace_region(net, grid);
  for (const auto& p : set.points) {
    const auto cov = to_covariances(net, p.beamformers);
    const auto r = rate_vector(net, cov);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r[i], p.rates[i], 1e-12);
    EXPECT_TRUE(interference_map(net, cov).isApprox(p.realized, 1e-12));
  }
}

TEST(Project2d, TwoUserReturnsFrontier) {
  const auto net = test::two_user(vec({1, 0.3}), vec({0.5, 1}), vec({0.8, 0.2}), vec({0.2, 1}));
  RegionGrid grid;
  grid.G = 4;
  const auto set = trace_region(net, grid);
  const auto curve = project_2d(net, set, 0, {});
  EXPECT_EQ(curve.points.size(), set.points.size());
  EXPECT_TRUE(std::is_sorted(curve.points.begin(), curve.points.end()));
}

TEST(Project2d, InactiveMatchesSubNetworkAndAtMaxHitsCorner) {
  const auto net = test::three_user_network();
  RegionGrid grid;
  grid.G = 3;
  const auto set = trace_region(net, grid);
  ProjectionSpec inactive;
  inactive.mode = ProjectionMode::Inactive;
  const auto curve = project_2d(net, set, 2, inactive);
  const auto sub = trace_region(net.without_user(2), grid);
  EXPECT_EQ(curve.points.size(), sub.points.size());
  EXPECT_EQ(curve.a, 0u);
  EXPECT_EQ(curve.b, 1u);

  const auto at_max = project_2d(net, set, 0, ProjectionSpec{});
  ASSERT_FALSE(at_max.points.empty());
  EXPECT_TRUE(at_max.warning.empty());

  ProjectionSpec nowhere;
  nowhere.mode = ProjectionMode::Level;
  nowhere.level = 50.0;
  nowhere.half_width = 0.1;
  const auto empty = project_2d(net, set, 1, nowhere);
  EXPECT_TRUE(empty.points.empty());
  EXPECT_FALSE(empty.warning.empty());
}

TEST(RegionCsv, HeaderAndRowShape) {
  const auto net = test::two_user(vec({1, 0}), vec({0, 1}), vec({1, 0}), vec({0, 1}));
  RegionGrid grid;
  grid.G = 2;
  const auto set = trace_region(net, grid);
  std::ostringstream os;
  write_region_csv(os, net, set);
  std::istringstream in(os.str());
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header, "R_1,R_2,b_1_1,b_1_2,b_2_1,b_2_2,zr_1_2,zr_2_1");
  std::getline(in, row);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 7);

  std::ostringstream ps;
  write_projection_csv(ps, Curve{0, 1, {{0.5, 0.25}}, ""});
  EXPECT_EQ(ps.str(), "R_1,R_2\n0.5,0.25\n");
}
