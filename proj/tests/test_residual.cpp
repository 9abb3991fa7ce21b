#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "lresnet/batch.hpp"
#include "lresnet/residual.hpp"

using namespace lresnet;
using quad = boost::multiprecision::cpp_bin_float_quad;

namespace {

const Curvature k1(-1.0);

LorentzPoint<double> pt(std::vector<double> c, Curvature k = k1) { return LorentzPoint<double>(std::move(c), k); }

void expect_near(std::span<const double> a, std::span<const double> b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "component " << i;
}

// Step-by-step evaluation of exp_o(w_x log_o(x) + w_y log_o(y)) at K = -1 in
// 113-bit arithmetic.
std::vector<double> ts_add_quad(const std::vector<double>& x, const std::vector<double>& y, double wx, double wy) {
  const std::size_t n1 = x.size();
  auto log_o = [&](const std::vector<double>& p) {
    const quad beta = quad(p[0]);
    const quad f = acosh(beta) / sqrt(beta * beta - 1);
    std::vector<quad> v(n1);
    v[0] = 0;
    for (std::size_t i = 1; i < n1; ++i) v[i] = f * quad(p[i]);
    return v;
  };
  const auto a = log_o(x), b = log_o(y);
  std::vector<quad> v(n1);
  quad vv = 0;
  for (std::size_t i = 0; i < n1; ++i) {
    v[i] = quad(wx) * a[i] + quad(wy) * b[i];
    vv += (i == 0 ? -1 : 1) * v[i] * v[i];
  }
  const quad alpha = sqrt(vv);
  std::vector<double> z(n1);
  z[0] = static_cast<double>(cosh(alpha));
  for (std::size_t i = 1; i < n1; ++i) z[i] = static_cast<double>(sinh(alpha) / alpha * v[i]);
  return z;
}

double g_centroid(const LorentzPoint<double>& x, const LorentzPoint<double>& y, const LorentzPoint<double>& p) {
  return squared_lorentz_distance(x, p) + squared_lorentz_distance(y, p);
}

}  // namespace

TEST(ResidualWeights, Invariants) {
  EXPECT_THROW((void)ResidualWeights(0.0, 1.0), invalid_weights_error);
  EXPECT_THROW((void)ResidualWeights(-1.0, 1.0), invalid_weights_error);
  EXPECT_THROW((void)ResidualWeights(std::nan(""), 1.0), invalid_weights_error);
  EXPECT_EQ(ResidualWeights(1.0, -2.0).w_y_abs(), 2.0);
  EXPECT_THROW((void)ScaleFactor(0.0), invalid_weights_error);
  EXPECT_THROW((void)ScaleFactor(std::numeric_limits<double>::infinity()), invalid_weights_error);
}

TEST(LResNetAdd, IdempotentOnEqualInputs) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto x = sample_point<double>(rng, 6, k1, 1.0);
    const auto z = lresnet_add(x, x, ResidualWeights(0.3 + t * 0.05, 1.7));
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(z[i], x[i], 1e-12 * std::max(1.0, std::abs(x[i])));
  }
}

TEST(LResNetAdd, ExamplePair) {
  const auto z = lresnet_add(pt({3, 2, -2}), pt({3, 2, 2}), ResidualWeights(1, 1));
  expect_near(z.coords(), std::vector{6 / std::sqrt(20.0), 4 / std::sqrt(20.0), 0.0}, 1e-15);
  EXPECT_NEAR(z[0], 1.341641, 1e-6);
  EXPECT_NEAR(z[1], 0.894427, 1e-6);
  EXPECT_LE(z.membership_residual(), 1e-15);
}

TEST(LResNetAdd, RatioInvarianceAndCommutativity) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int t = 0; t < 500; ++t) {
    const Curvature k(t % 3 == 0 ? -0.5 : -2.0);
    const auto x = sample_point<double>(rng, 7, k, 1.0);
    const auto y = sample_point<double>(rng, 7, k, 1.0);
    const double wy = u(rng), c = u(rng);
    const auto a = lresnet_add(x, y, ResidualWeights(1.0, wy));
    const auto b = lresnet_add(x, y, ResidualWeights(c, c * wy));
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-12 * std::max(1.0, std::abs(a[i])));
    const auto p = lresnet_add(x, y, ResidualWeights(c, c));
    const auto q = lresnet_add(y, x, ResidualWeights(c, c));
    for (std::size_t i = 0; i < p.size(); ++i) ASSERT_NEAR(p[i], q[i], 1e-14 * std::max(1.0, std::abs(p[i])));
  }
}

TEST(LResNetAdd, NegativeWyUsesMagnitude) {
  const auto x = pt({3, 2, -2}), y = pt({3, 2, 2});
  EXPECT_EQ(lresnet_add(x, y, ResidualWeights(1, -0.5)), lresnet_add(x, y, ResidualWeights(1, 0.5)));
}

TEST(LResNetAdd, DenominatorBound) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int t = 0; t < 2000; ++t) {
    const Curvature k(-0.5 - 1.5 * (t % 4) / 3.0);
    const auto x = sample_point<double>(rng, 9, k, 2.0);
    const auto y = sample_point<double>(rng, 9, k, 2.0);
    const double a = u(rng), b = u(rng);
    std::vector<double> s(x.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = a * x[i] + b * y[i];
    ASSERT_GT(k.sqrt_neg() * lorentz_norm(s), std::sqrt(a * a + b * b));
  }
}

TEST(LResNetAdd, LocalCentroidMinimum) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = sample_point<double>(rng, 4, k1, 1.0);
    const auto y = sample_point<double>(rng, 4, k1, 1.0);
    const auto z = lresnet_add(x, y, ResidualWeights(1, 1));
    const double g0 = g_centroid(x, y, z);
    for (int p = 0; p < 100; ++p) {
      std::vector<double> d(z.size());
      for (auto& v : d) v = g(rng);
      // Project d onto the tangent space at z, step 1e-3, back onto the manifold.
      const double c = lorentz_inner(z, d) / lorentz_inner(z, z);
      double nn = 0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] -= c * z[i];
        nn += d[i] * d[i];
      }
      std::vector<double> q(z.size());
      for (std::size_t i = 0; i < q.size(); ++i) q[i] = z[i] + 1e-3 * d[i] / std::sqrt(nn);
      ASSERT_GT(g_centroid(x, y, renormalize(q, k1)), g0);
    }
  }
}

TEST(PtAdd, MirroredPairCounterexample) {
  const auto x = pt({3, 2, -2}), y = pt({3, 2, 2});
  expect_near(pt_add(x, y).coords(), std::vector{9.0, 8.0, -4.0}, 1e-12);
  expect_near(pt_add(y, x).coords(), std::vector{9.0, 8.0, 4.0}, 1e-12);
  EXPECT_EQ(pt_add_reversed(x, y), pt_add(y, x));
}

TEST(PtAdd, OriginAsSecondArgument) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto x = sample_point<double>(rng, 5, k1, 1.0);
    const auto z = pt_add(x, origin<double>(k1, 5));
    expect_near(z.coords(), x.coords(), 1e-12);
  }
}

TEST(TsAdd, Examples) {
  const auto o = origin<double>(k1, 3);
  expect_near(ts_add(o, o).coords(), o.coords(), 0);
  const auto x = pt({3, 2, -2});
  expect_near(ts_add(x, x, 0.25, 0.75).coords(), x.coords(), 1e-13);
  EXPECT_THROW(ts_add(x, x, 0.0, 1.0), invalid_weights_error);
}

TEST(TsAdd, ExamplePairAgainstQuadOracle) {
  const auto oracle = ts_add_quad({3, 2, -2}, {3, 2, 2}, 1, 1);
  const auto z = ts_add(pt({3, 2, -2}), pt({3, 2, 2}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(z[i], oracle[i], 1e-13 * std::max(1.0, std::abs(oracle[i])));
  const auto o2 = ts_add_quad({3, 2, -2}, {3, 2, 2}, 0.3, 1.9);
  const auto z2 = ts_add(pt({3, 2, -2}), pt({3, 2, 2}), 0.3, 1.9);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(z2[i], o2[i], 1e-13 * std::max(1.0, std::abs(o2[i])));
}

TEST(TsAdd, CommutesUnderSwappedWeights) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 200; ++t) {
    const auto x = sample_point<double>(rng, 4, k1, 1.0);
    const auto y = sample_point<double>(rng, 4, k1, 1.0);
    const auto a = ts_add(x, y, 0.4, 1.3), b = ts_add(y, x, 1.3, 0.4);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-12 * std::max(1.0, std::abs(a[i])));
  }
}

TEST(SpaceAdd, Examples) {
  expect_near(space_add(pt({3, 2, -2}), pt({3, 2, 2})).coords(), std::vector{std::sqrt(17.0), 4.0, 0.0}, 1e-15);
  const auto o = origin<double>(k1, 2);
  expect_near(space_add(o, o).coords(), o.coords(), 0);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    const auto x = sample_point<double>(rng, 4, k1, 1.0);
    const auto y = sample_point<double>(rng, 4, k1, 1.0);
    ASSERT_EQ(space_add(x, y), space_add(y, x));
  }
}

TEST(Scale, Examples) {
  const auto m = lresnet_add(pt({3, 2, -2}), pt({3, 2, 2}), ResidualWeights(1, 1));
  expect_near(scale(m, ScaleFactor(1.0)).coords(), m.coords(), 1e-15);
  const auto s = scale(m, ScaleFactor(2.0));
  expect_near(s.coords(), std::vector{std::sqrt(4.2), 2 * 4 / std::sqrt(20.0), 0.0}, 1e-15);
  EXPECT_NEAR(s[0], 2.049390, 1e-6);
  EXPECT_NEAR(s[1], 1.788854, 1e-6);
}

TEST(Scale, KleinColinearWithPositiveFactor) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> gd(0.1, 4.0);
  for (int t = 0; t < 200; ++t) {
    const auto m = sample_point<double>(rng, 5, k1, 1.0);
    const auto s = scale(m, ScaleFactor(gd(rng)));
    const auto a = to_klein(m), b = to_klein(s);
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += a[i] * b[i];
      aa += a[i] * a[i];
      bb += b[i] * b[i];
    }
    ASSERT_GT(ab, 0);
    ASSERT_NEAR(ab / std::sqrt(aa * bb), 1.0, 1e-12);
  }
}

TEST(Centroid, MatchesPairwiseAndSinglePoint) {
  const auto x = pt({3, 2, -2}), y = pt({3, 2, 2});
  const std::vector<LorentzPoint<double>> ps{x, y};
  const std::vector<double> w{0.7, 1.9};
  expect_near(centroid<double>(ps, w).coords(), lresnet_add(x, y, ResidualWeights(0.7, 1.9)).coords(), 1e-15);
  const std::vector<LorentzPoint<double>> one{x};
  const std::vector<double> w1{2.0};
  expect_near(centroid<double>(one, w1).coords(), x.coords(), 1e-15);
  const std::vector<double> bad{1.0};
  EXPECT_THROW(centroid<double>(ps, bad), dimension_error);
}

TEST(Validity, AllMethodsStayOnManifold) {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 2000; ++t) {
    const Curvature k(t % 2 ? -1.0 : -2.0);
    const auto x = sample_point<double>(rng, 6, k, 0.5);
    const auto y = sample_point<double>(rng, 6, k, 0.5);
    for (const auto& z : {lresnet_add(x, y, ResidualWeights(1.3, 0.4)), pt_add(x, y), ts_add(x, y, 0.5, 0.8),
                          space_add(x, y), scale(x, ScaleFactor(1.7))}) {
      ASSERT_LE(z.membership_residual(), 1e-9);
      ASSERT_GT(z.time(), 0);
    }
  }
}

template <class T>
class BatchTest : public ::testing::Test {};
using Precisions = ::testing::Types<float, double>;
TYPED_TEST_SUITE(BatchTest, Precisions);

TYPED_TEST(BatchTest, MatchesPointwiseAndThreadCountInvariant) {
  using T = TypeParam;
  std::mt19937_64 rng(10);
  const Curvature k(-1.5);
  const std::size_t n = 37, m = 57;
  const auto x = sample_batch<T>(rng, k, n, m);
  const auto y = sample_batch<T>(rng, k, n, m);
  LorentzBatch<T> a(k, n, m), b(k, n, m);
  StagedWorkspace<T> ws(k, n, m);
  const double tol = std::is_same_v<T, float> ? 1e-4 : 1e-12;
  auto check_rows = [&](auto op) {
    for (std::size_t r = 0; r < m; ++r) {
      const auto z = op(x.point(r), y.point(r));
      for (std::size_t i = 0; i <= n; ++i) {
        ASSERT_NEAR(double(a.row(r)[i]), double(z[i]), tol * std::max(1.0, std::abs(double(z[i]))));
      }
    }
  };
  lresnet_add_batch(x, y, ResidualWeights(1, 2), a);
  lresnet_add_batch(x, y, ResidualWeights(1, 2), b, 3);
  EXPECT_TRUE(std::ranges::equal(a.data(), b.data()));
  check_rows([](const auto& p, const auto& q) { return lresnet_add(p, q, ResidualWeights(1, 2)); });
  pt_add_batch(x, y, a, ws);
  pt_add_batch(x, y, b, ws, 4);
  EXPECT_TRUE(std::ranges::equal(a.data(), b.data()));
  check_rows([](const auto& p, const auto& q) { return pt_add(p, q); });
  ts_add_batch(x, y, 0.5, 1.5, a, ws);
  check_rows([](const auto& p, const auto& q) { return ts_add(p, q, 0.5, 1.5); });
  space_add_batch(x, y, a);
  check_rows([](const auto& p, const auto& q) { return space_add(p, q); });
}

TEST(Batch, ShapeMismatchThrows) {
  std::mt19937_64 rng(11);
  const auto x = sample_batch<double>(rng, k1, 4, 10);
  const auto y = sample_batch<double>(rng, k1, 4, 11);
  LorentzBatch<double> out(k1, 4, 10);
  EXPECT_THROW(lresnet_add_batch(x, y, ResidualWeights(), out), dimension_error);
}
