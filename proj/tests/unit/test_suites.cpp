#include "rkinv/suites.hpp"

#include <gtest/gtest.h>

namespace rkinv {
namespace {

TEST(Suites, SingleEdgeCouplingsGivesThreePassingReports) {
  const auto r = run_suite("single-edge-couplings", {}, 7);
  ASSERT_EQ(r.size(), 3u);
  for (const TestReport &x : r) {
    EXPECT_TRUE(x.pass) << x.name;
    EXPECT_TRUE(x.pass_adjusted) << x.name;
  }
}

TEST(Suites, UnknownSuiteThrows) {
  EXPECT_THROW(run_suite("no-such-suite", {}, 1), std::invalid_argument);
}

TEST(Suites, SameSeedGivesByteIdenticalReports) {
  SuiteParams p;
  p.sample_scale = 0.02;
  for (const char *name : {"gff-sampler", "inversion", "engine-equivalence"}) {
    const std::string a = reports_csv(run_suite(name, p, 5));
    const std::string b = reports_csv(run_suite(name, p, 5));
    EXPECT_EQ(a, b) << name;
    EXPECT_NE(a, reports_csv(run_suite(name, p, 6))) << name;
  }
}

TEST(Suites, EveryNamedSuiteIsRegistered) {
  EXPECT_EQ(suite_names().size(), 13u);
  EXPECT_EQ(suite_names().front(), "single-edge-couplings");
}

} // namespace
} // namespace rkinv
