#include <gtest/gtest.h>

#include "lresnet/bench.hpp"

using namespace lresnet;

TEST(Bench, ValidateRejectsBadConfigs) {
  BenchConfig c;
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.dim = 1;
  EXPECT_THROW(bad.validate(), dimension_error);
  bad = c;
  bad.repeats = 4;
  EXPECT_THROW(bad.validate(), error);
  bad = c;
  bad.precision = 16;
  EXPECT_THROW(bad.validate(), error);
  bad = c;
  bad.curvature = 1.0;
  EXPECT_THROW(bad.validate(), error);
  bad = c;
  bad.methods.clear();
  EXPECT_THROW(bad.validate(), error);
  EXPECT_EQ(parse_bench_method("ts"), BenchMethod::ts);
  EXPECT_THROW(parse_bench_method("none"), error);
}

TEST(Bench, BytesRequired) {
  BenchConfig c;
  c.dim = 3;
  c.batch = 10;
  EXPECT_EQ(bench_bytes_required(c), 10u * 4 * 4 * 5);
  c.methods = {BenchMethod::lresnet, BenchMethod::sa};
  c.precision = 64;
  EXPECT_EQ(bench_bytes_required(c), 10u * 4 * 8 * 3);
}

TEST(Bench, CapacityErrorBeforeAllocating) {
  BenchConfig c;
  c.dim = 4096;
  c.batch = 100000;
  EXPECT_THROW(run_bench(c, std::size_t(1) << 30), capacity_error);
}

TEST(Bench, SmallRunReportsAllMethods) {
  BenchConfig c;
  c.dim = 16;
  c.batch = 64;
  c.iterations = 3;
  c.warmup = 1;
  const auto r = run_bench(c, std::nullopt);
  ASSERT_EQ(r.timings.size(), 4u);
  EXPECT_TRUE(r.comparable);
  EXPECT_EQ(r.threads_used, 1u);
  for (const auto& t : r.timings) {
    EXPECT_EQ(t.samples.size(), 5u);
    EXPECT_GT(t.median_seconds, 0);
    EXPECT_LE(t.max_membership_residual, 1e-3);
  }
  EXPECT_EQ(r.find("lresnet")->ratio_to_lresnet, 1.0);
  EXPECT_EQ(r.find("bogus"), nullptr);
  c.threads = 0;
  EXPECT_FALSE(run_bench(c, std::nullopt).comparable);
}

TEST(Bench, LResNetScalesLinearlyInBatch) {
  BenchConfig c;
  // Both working sets (6 MiB, 62 MiB) sit above L2 and inside L3 on the test host.
  c.dim = 128;
  c.iterations = 20;
  c.methods = {BenchMethod::lresnet};
  c.batch = 4000;
  const double small = run_bench(c, std::nullopt).timings[0].per_addition_seconds;
  c.batch = 40000;
  const double large = run_bench(c, std::nullopt).timings[0].per_addition_seconds;
  const double ratio = large / small;
  EXPECT_GT(ratio, 10.0 * 0.5);
  EXPECT_LT(ratio, 10.0 * 1.5);
}
