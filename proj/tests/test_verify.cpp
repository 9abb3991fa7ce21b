#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lresnet/suites.hpp"

using namespace lresnet;

namespace {

const Curvature k1(-1.0);

LorentzPoint<double> pt(std::vector<double> c) { return LorentzPoint<double>(std::move(c), k1); }

}  // namespace

TEST(Lemma1, ExamplePair) {
  std::vector<double> u{6, 4, 0};
  EXPECT_NEAR(lorentz_norm(u), std::sqrt(20.0), 1e-15);
  EXPECT_GT(lorentz_norm(u), std::sqrt(2.0));
}

TEST(Lemma1, SmallGridPasses) {
  SuiteGrid g;
  const auto rs = run_lemma1_grid(200, g, 11);
  ASSERT_EQ(rs.size(), 27u);
  std::size_t boundary = 0;
  for (const auto& r : rs) {
    EXPECT_TRUE(r.passed()) << r.curvature << " " << r.dim << " " << r.sigma;
    EXPECT_LT(r.worst_violation, 1e-9);
    boundary += r.boundary_cases;
  }
  EXPECT_GT(boundary, 0u);
}

TEST(Lemma1, RejectsZeroTrials) { EXPECT_THROW(check_lemma1(0, 2, k1, 1.0, 1), error); }

TEST(Noncommutativity, ExamplePairIsMirrored) {
  const auto x = pt({3, 2, -2}), y = pt({3, 2, 2});
  const auto z = pt_add(x, y), zr = pt_add_reversed(x, y);
  EXPECT_NEAR(z[0], zr[0], 1e-12);
  EXPECT_NEAR(z[1], zr[1], 1e-12);
  EXPECT_NEAR(z[2], -zr[2], 1e-12);
  EXPECT_GT(std::abs(z[2] - zr[2]), 1.0);
}

TEST(Noncommutativity, MirroredSamplerAndGrid) {
  std::mt19937_64 rng(1);
  const auto [x, y] = sample_mirrored_pair(rng, 4, k1);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
  EXPECT_EQ(x[x.size() - 1], -y[y.size() - 1]);
  const auto rs = run_noncommutativity_grid(200, SuiteGrid{}, 12);
  ASSERT_EQ(rs.size(), 9u);
  for (const auto& r : rs) {
    EXPECT_TRUE(r.passed());
    EXPECT_GT(r.noncommuting_pairs, r.trials / 2);
  }
  EXPECT_THROW(check_noncommutativity(10, 1, k1, 1), dimension_error);
}

TEST(Noncommutativity, SelfMirroredPairCommutes) {
  // A pair with zero last component is its own mirror image.
  const auto x = lift_from_space(std::vector<double>{0.4, 0.0}, k1);
  const auto z = pt_add(x, x), zr = pt_add_reversed(x, x);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(z[i], zr[i], 1e-12);
}

TEST(Proposition1, PtWeightsOnExamplePair) {
  // Centroid space part is (2a + 2b, 2b - 2a); matching the direction of (8, -4) needs a = 3b.
  const auto w = proposition1_weights_pt(pt({3, 2, -2}), pt({3, 2, 2}));
  ASSERT_GT(w.w_y, 0);
  EXPECT_NEAR(w.w_x / w.w_y, 3.0, 1e-12);
}

TEST(Proposition1, TsWeightsSymmetricOnExamplePair) {
  const auto w = proposition1_weights_ts(pt({3, 2, -2}), pt({3, 2, 2}));
  EXPECT_NEAR(w.w_x, w.w_y, 1e-15);
  EXPECT_NEAR(w.w_x, std::log(3.0 + std::sqrt(8.0)) / std::sqrt(8.0), 1e-15);
}

TEST(Proposition1, AllBaselinesPass) {
  const auto rs = run_proposition1_grid({BaselineMethod::pt, BaselineMethod::ts, BaselineMethod::sa}, 100,
                                        SuiteGrid{}, 13);
  ASSERT_EQ(rs.size(), 27u);
  for (const auto& r : rs) {
    EXPECT_TRUE(r.passed()) << r.method << " " << r.dim << " " << r.worst_violation;
    EXPECT_EQ(r.construction_violations, 0u);
  }
  EXPECT_EQ(parse_baseline("ts"), BaselineMethod::ts);
  EXPECT_THROW(parse_baseline("lresnet"), error);
}

TEST(Validity, BothPrecisionsPass) {
  for (int p : {32, 64}) {
    const auto rs = run_validity_grid(p, 100, SuiteGrid{}, 14);
    ASSERT_EQ(rs.size(), 45u);
    for (const auto& r : rs) EXPECT_TRUE(r.passed()) << p << " " << r.method << " " << r.dim;
  }
  EXPECT_THROW(run_validity_grid(16, 1, SuiteGrid{}, 1), error);
}

TEST(Validity, FarInputsHitRoundingFloorExceptLResNet) {
  const auto bad = check_validity<float>(AdditionMethod::pt, 200, 128, k1, 5.0, 1, 1e-3);
  EXPECT_FALSE(bad.passed());
  EXPECT_FALSE(bad.witness.empty());
  EXPECT_TRUE(check_validity<float>(AdditionMethod::lresnet, 200, 128, k1, 5.0, 1, 1e-3).passed());
}

TEST(Stress, BothModesDemonstrated) {
  for (auto m : {InstabilityMode::poincare_boundary, InstabilityMode::lorentz_coshdomain}) {
    const auto r = demo_instability(m);
    EXPECT_TRUE(r.passed()) << to_string(m);
    EXPECT_EQ(r.trials, 4u);
  }
  EXPECT_THROW(parse_instability_mode("bogus"), error);
}

TEST(Suites, DeterministicForSeed) {
  const auto a = run_lemma1_grid(50, SuiteGrid{}, 5), b = run_lemma1_grid(50, SuiteGrid{}, 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].worst_violation, b[i].worst_violation);
    EXPECT_EQ(a[i].witness, b[i].witness);
  }
  EXPECT_NE(cell_seed(1, 0), cell_seed(1, 1));
}
