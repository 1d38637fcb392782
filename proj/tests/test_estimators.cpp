#include <gtest/gtest.h>

#include <cmath>

#include "ddreach/complexity.hpp"
#include "ddreach/estimators.hpp"
#include "ddreach/rng.hpp"
#include "oracles/mvee_bruteforce.hpp"

namespace ddreach {
namespace {

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> data) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : data) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Eigen::MatrixXd random_cloud(RngStream& rng, Eigen::Index n, Eigen::Index dim, double lo = -1, double hi = 1) {
  Eigen::MatrixXd m(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// --- monomials ------------------------------------------------------------

TEST(Monomials, Examples) {
  EXPECT_EQ(monomials(Eigen::VectorXd::Constant(1, 3.0), 2), Eigen::Vector3d(1, 3, 9));
  EXPECT_EQ(monomials(Eigen::Vector2d(2, 5), 1), Eigen::Vector3d(1, 2, 5));
  EXPECT_EQ(monomials(Eigen::Vector2d(0.3, 0.7), 10).size(), 66);
}

TEST(Monomials, GradedLexOrder) {
  const MonomialBasis b(2, 2);
  const std::vector<std::array<unsigned, 2>> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  ASSERT_EQ(b.size(), expected.size());
  for (std::size_t t = 0; t < expected.size(); ++t) {
    EXPECT_EQ(b.exponent(t, 0), expected[t][0]);
    EXPECT_EQ(b.exponent(t, 1), expected[t][1]);
  }
  const MonomialBasis b3(3, 2);
  EXPECT_EQ(b3.size(), 10u);
  EXPECT_EQ(b3.exponent(4, 0), 2u);  // x1^2 starts degree 2
  EXPECT_EQ(b3.exponent(9, 2), 2u);  // x3^2 ends it
}

TEST(Monomials, SizeIsBinomial) {
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t k = 0; k <= 6; ++k) {
      const auto expected = static_cast<std::size_t>(binomial(static_cast<unsigned>(n + k), static_cast<unsigned>(k)));
      EXPECT_EQ(MonomialBasis(n, k).size(), expected);
    }
  }
}

// --- negative log det -----------------------------------------------------

TEST(NegativeLogDet, Examples) {
  EXPECT_EQ(negative_log_det(Eigen::Matrix3d::Identity()), 0.0);
  EXPECT_NEAR(negative_log_det(Eigen::Vector2d(2, 2).asDiagonal().toDenseMatrix()), -2 * std::log(2.0), 1e-15);
  Eigen::Matrix2d A;
  A << 2, 0.5, 0.5, 1;
  for (double c : {0.9, 0.5, 0.1}) {
    EXPECT_NEAR(negative_log_det(c * A), -2 * std::log(c) + negative_log_det(A), 1e-12);
    EXPECT_GT(negative_log_det(c * A), negative_log_det(A));
  }
  Eigen::Matrix2d indefinite;
  indefinite << 1, 2, 2, 1;
  EXPECT_THROW((void)negative_log_det(indefinite), NotPositiveDefinite);
}

// --- p-norm balls -----------------------------------------------------------

TEST(PnormBall, SquareCornersGiveCircle) {
  const auto ball = fit_pnorm_ball(rows({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}), NormKind::Two);
  EXPECT_TRUE(ball.A.isApprox(Eigen::Matrix2d::Identity() / std::sqrt(2.0), 1e-6));
  EXPECT_LT(ball.b.norm(), 1e-6);
}

TEST(PnormBall, SquareMatchesGridSearchOverCircles) {
  // Brute force over centred circles: the smallest radius enclosing the
  // corners is the largest corner distance, sqrt(2).
  const auto pts = rows({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}});
  double best_r = 1e9;
  for (int i = 0; i <= 10000; ++i) {
    const double r = 1.0 + i * 1e-4;
    bool all = true;
    for (Eigen::Index j = 0; j < 4; ++j) all = all && pts.row(j).norm() <= r;
    if (all) {
      best_r = r;
      break;
    }
  }
  const auto ball = fit_pnorm_ball(pts, NormKind::Two);
  EXPECT_NEAR(negative_log_det(ball.A), 2 * std::log(best_r), 2e-4);
}

TEST(PnormBall, OneDimensionalInterval) {
  const auto ball = fit_pnorm_ball(rows({{0}, {2}}), NormKind::Two);
  EXPECT_NEAR(ball.A(0, 0), 1.0, 1e-6);
  EXPECT_NEAR(ball.b(0), 1.0, 1e-6);
}

TEST(PnormBall, Box) {
  const auto ball = fit_pnorm_ball(rows({{0, -1}, {2, 3}, {1, 0}}), NormKind::Infinity);
  EXPECT_DOUBLE_EQ(ball.A(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(ball.A(1, 1), 0.5);
  EXPECT_EQ(ball.A(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(ball.b(0), 1.0);
  EXPECT_DOUBLE_EQ(ball.b(1), 0.5);
}

TEST(PnormBall, BoxMinimumWidthGuard) {
  const auto ball = fit_pnorm_ball(rows({{3, 1}, {3, 2}}), NormKind::Infinity);
  EXPECT_DOUBLE_EQ(ball.A(0, 0), 2.0 / kMinBoxWidth);
  EXPECT_TRUE(ball.contains(Eigen::Vector2d(3, 1.5)));
  EXPECT_FALSE(ball.contains(Eigen::Vector2d(3 + 1e-9, 1.5)));
}

TEST(PnormBall, Errors) {
  EXPECT_THROW((void)fit_pnorm_ball(Eigen::MatrixXd(0, 2), NormKind::Two), std::invalid_argument);
  EXPECT_THROW((void)fit_pnorm_ball(Eigen::MatrixXd(0, 2), NormKind::Infinity), std::invalid_argument);
  // Collinear points span only a line.
  EXPECT_THROW((void)fit_pnorm_ball(rows({{0, 0}, {1, 1}, {2, 2}, {3, 3}}), NormKind::Two), RankDeficientData);
  EXPECT_THROW((void)fit_pnorm_ball(rows({{0, 0}, {1, 1}}), NormKind::Two), RankDeficientData);
}

TEST(PnormBall, ContainsEverySample) {
  RngStream rng(4, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index dim = 1 + trial % 4;
    const auto pts = random_cloud(rng, 30 + trial * 10, dim, -3, 5);
    for (auto p : {NormKind::Two, NormKind::Infinity}) {
      const auto ball = fit_pnorm_ball(pts, p);
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        EXPECT_TRUE(ball.contains(pts.row(i).transpose()));
        if (p == NormKind::Two) {
          EXPECT_LE(ball.value(pts.row(i).transpose()), 1.0 + 10 * KhachiyanOptions{}.tol);
        }
      }
    }
  }
}

TEST(PnormBall, MatchesBruteForceOracle) {
  RngStream rng(2718, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = random_cloud(rng, 4 + trial % 5, 2, -2, 2);
    const auto ball = fit_pnorm_ball(pts, NormKind::Two);
    EXPECT_NEAR(negative_log_det(ball.A), oracle::min_enclosing_neg_log_det(pts), 1e-3) << "trial " << trial;
  }
}

TEST(PnormBall, AffineEquivariance) {
  RngStream rng(31, 0);
  Eigen::Matrix3d T;
  T << 2, 0.3, -0.1, 0.2, 0.7, 0.4, -0.5, 0.1, 1.5;
  const Eigen::Vector3d shift(1, -2, 0.5);
  const auto pts = random_cloud(rng, 40, 3);
  const Eigen::MatrixXd mapped = (pts * T.transpose()).rowwise() + shift.transpose();
  const auto ball = fit_pnorm_ball(pts, NormKind::Two);
  const auto ball_t = fit_pnorm_ball(mapped, NormKind::Two);
  // Image of the original ball under x -> T x + shift.
  const Eigen::Matrix3d Tinv = T.inverse();
  const Eigen::MatrixXd A_img = ball.A * Tinv;
  const Eigen::VectorXd b_img = ball.b + ball.A * Tinv * shift;
  int checked = 0;
  for (int q = 0; q < 2000; ++q) {
    const Eigen::Vector3d x(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    const Eigen::Vector3d y = T * x + shift;
    const double v_img = (A_img * y - b_img).norm();
    if (std::abs(v_img - 1.0) < 1e-4) continue;  // too close to call
    EXPECT_EQ(v_img <= 1.0, ball_t.contains(y));
    ++checked;
  }
  EXPECT_GT(checked, 1500);
}

// --- Christoffel ------------------------------------------------------------

TEST(Christoffel, TwoPointHandCase) {
  const auto set = fit_christoffel(rows({{-1}, {1}}), 1, 0.0, false);
  EXPECT_EQ(set.M_inv, Eigen::Matrix2d::Identity());
  EXPECT_EQ(set.level, 2.0);
  for (double x : {-2.0, -1.0, -0.3, 0.0, 0.5, 1.0, 1.5}) {
    EXPECT_DOUBLE_EQ(set.value(Eigen::VectorXd::Constant(1, x)), 1 + x * x);
  }
  EXPECT_TRUE(set.contains(Eigen::VectorXd::Constant(1, -1.0)));
  EXPECT_TRUE(set.contains(Eigen::VectorXd::Constant(1, 1.0)));
  EXPECT_FALSE(set.contains(Eigen::VectorXd::Constant(1, std::nextafter(1.0, 2.0))));
  EXPECT_FALSE(set.contains(Eigen::VectorXd::Constant(1, std::nextafter(-1.0, -2.0))));
}

TEST(Christoffel, IdentityMomentMatrixGivesFeatureNorm) {
  ChristoffelSet set;
  set.k = 3;
  set.n = 2;
  set.normalize = false;
  set.basis = MonomialBasis(2, 3);
  set.M_inv = Eigen::MatrixXd::Identity(10, 10);
  const Eigen::Vector2d x(0.4, -1.3);
  EXPECT_DOUBLE_EQ(set.value(x), set.basis.evaluate(x).squaredNorm());
}

TEST(Christoffel, ContainsEveryTrainingSample) {
  RngStream rng(8, 0);
  for (double rho : {0.0, 1e-4}) {
    for (bool normalize : {false, true}) {
      const auto pts = random_cloud(rng, 300, 2, 0, 3);
      const auto set = fit_christoffel(pts, 3, rho, normalize);
      for (Eigen::Index i = 0; i < pts.rows(); ++i) EXPECT_TRUE(set.contains(pts.row(i).transpose()));
    }
  }
}

TEST(Christoffel, NormalizationRecordsShiftAndScale) {
  const auto pts = rows({{1, 10}, {3, 10}, {5, 10}});
  const auto set = fit_christoffel(pts, 2, 1e-4, true);
  EXPECT_DOUBLE_EQ(set.shift(0), 3.0);
  EXPECT_DOUBLE_EQ(set.scale(0), std::sqrt(8.0 / 3.0));
  EXPECT_DOUBLE_EQ(set.shift(1), 10.0);
  EXPECT_EQ(set.scale(1), 1.0);
  ASSERT_EQ(set.degenerate_dims.size(), 1u);
  EXPECT_EQ(set.degenerate_dims[0], 1u);
}

TEST(Christoffel, LevelStableUnderMoreData) {
  RngStream rng(13, 0);
  const auto small = random_cloud(rng, 2000, 2);
  const auto large = random_cloud(rng, 4000, 2);
  const auto a = fit_christoffel(small, 2, 1e-4, true);
  const auto b = fit_christoffel(large, 2, 1e-4, true);
  EXPECT_GT(b.level / a.level, 0.5);
  EXPECT_LT(b.level / a.level, 2.0);
}

TEST(Serialization, RoundTripPreservesVerdicts) {
  RngStream rng(21, 0);
  const auto pts = random_cloud(rng, 200, 2);
  const auto ball = fit_pnorm_ball(pts, NormKind::Two);
  const auto box = fit_pnorm_ball(pts, NormKind::Infinity);
  const auto chr = fit_christoffel(pts, 4, 1e-4, true);
  const auto ball2 = pnorm_ball_from_json(nlohmann::json::parse(to_json(ball).dump()));
  const auto box2 = pnorm_ball_from_json(nlohmann::json::parse(to_json(box).dump()));
  const auto chr2 = christoffel_from_json(nlohmann::json::parse(to_json(chr).dump()));
  EXPECT_EQ(to_json(ball2).dump(), to_json(ball).dump());
  EXPECT_EQ(to_json(chr2).dump(), to_json(chr).dump());
  for (int q = 0; q < 5000; ++q) {
    const Eigen::Vector2d x(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    EXPECT_EQ(ball.value(x), ball2.value(x));
    EXPECT_EQ(box.contains(x), box2.contains(x));
    EXPECT_EQ(chr.value(x), chr2.value(x));
  }
}

TEST(Serialization, JsonShape) {
  const auto box = fit_pnorm_ball(rows({{0, -1}, {2, 3}}), NormKind::Infinity);
  const auto j = to_json(box);
  EXPECT_EQ(j["method"], "pnorm");
  EXPECT_EQ(j["p"], "inf");
  EXPECT_EQ(j["A"].size(), 2u);
  const auto chr = fit_christoffel(rows({{-1}, {1}}), 1, 0.0, false);
  const auto jc = to_json(chr);
  for (const char* key : {"method", "k", "rho", "normalize", "shift", "scale", "M_inv", "level"}) {
    EXPECT_TRUE(jc.contains(key)) << key;
  }
}

}  // namespace
}  // namespace ddreach
