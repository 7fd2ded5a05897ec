#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace misobf;

TEST(Suites, ShortRunsPass) {
  SuiteConfig cfg;
  cfg.trials = 10;
  for (const auto& name : suite_names()) {
    const auto r = run_suite(name, cfg);
    EXPECT_TRUE(r.passed()) << name << ": " << r.first_failure;
    EXPECT_GT(r.trials, 0) << name;
  }
}

TEST(Suites, NegativeToleranceScaleForcesFailure) {
  SuiteConfig cfg;
  cfg.trials = 3;
  cfg.tol_scale = -1.0;
  for (const auto& name : suite_names()) EXPECT_FALSE(run_suite(name, cfg).passed()) << name;
}

TEST(Suites, UnknownNameThrows) { EXPECT_THROW(run_suite("nope", SuiteConfig{}), Error); }

TEST(RandomInstance, RespectsShape) {
  Rng rng(0);
  InstanceShape shape;
  shape.force_reduction = true;
  for (int k = 0; k < 50; ++k) {
    const auto inst = random_instance(rng, shape);
    const auto m = inst.net.users();
    EXPECT_TRUE(m >= 2 && m <= 4);
    EXPECT_GT(inst.net.t[inst.user], static_cast<int>(m) - 1);
    EXPECT_TRUE(validate_network(inst.net).ok());
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) EXPECT_TRUE(std::isfinite(inst.budget.get(i, j)));
  }
}
