#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "orbitpose/group.hpp"
#include "orbitpose/rng.hpp"

using namespace orbitpose;

namespace {
constexpr double kPi = kTwoPi / 2.0;
}

TEST_CASE("GroupParams validates order and derives the step") {
  CHECK_THROWS_AS(GroupParams(1), std::invalid_argument);
  CHECK_THROWS_AS(GroupParams(0), std::invalid_argument);
  CHECK_THROWS_AS(GroupParams(-4), std::invalid_argument);

  const GroupParams def;
  CHECK(def.order == 36);
  CHECK(def.delta_theta() == kTwoPi / 36.0);
  // 10 degrees.
  CHECK(def.delta_theta() * kDegPerRad == doctest::Approx(10.0));
  CHECK(GroupParams(4).delta_theta() * 4 == doctest::Approx(kTwoPi).epsilon(1e-15));
}

TEST_CASE("make_generator_3d matches the analytic rotation") {
  SUBCASE("identity at theta=0") {
    CHECK((make_generator_3d(0.0).matrix() - Eigen::Matrix3d::Identity())
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  SUBCASE("quarter turn sends x to y") {
    const Eigen::Vector3d v = make_generator_3d(kPi / 2).apply({1.0, 0.0, 0.0});
    CHECK((v - Eigen::Vector3d(0, 1, 0)).norm() < 1e-15);
  }
  SUBCASE("half turn is diag(-1,-1,1)") {
    Eigen::Matrix3d expected;
    expected << -1, 0, 0, 0, -1, 0, 0, 0, 1;
    CHECK((make_generator_3d(kPi).matrix() - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("rejects non-finite angles") {
    CHECK_THROWS_AS(make_generator_3d(std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(make_generator_3d(INFINITY), std::invalid_argument);
  }
}

TEST_CASE("Rotation3 rejects matrices outside the azimuthal subgroup") {
  Eigen::Matrix3d skew = Eigen::Matrix3d::Identity();
  skew(0, 1) = 0.5;
  CHECK_THROWS_AS(Rotation3{skew}, std::invalid_argument);

  // Rotation about x is orthogonal but not azimuthal.
  Eigen::Matrix3d about_x;
  about_x << 1, 0, 0, 0, 0, -1, 0, 1, 0;
  CHECK_THROWS_AS(Rotation3{about_x}, std::invalid_argument);

  Eigen::Matrix3d reflection = Eigen::Matrix3d::Identity();
  reflection(2, 2) = -1.0;  // det -1 and breaks the fixed column
  CHECK_THROWS_AS(Rotation3{reflection}, std::invalid_argument);
}

TEST_CASE("make_latent_generator") {
  SUBCASE("K=4 gives the quarter-turn matrix") {
    const LatentGenerator p = make_latent_generator(GroupParams(4));
    Eigen::Matrix2d expected;
    expected << 0, -1, 1, 0;
    CHECK((p.matrix() - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("K=36: p^36 = identity within 1e-9 by repeated multiplication") {
    const LatentGenerator p = make_latent_generator(GroupParams(36));
    Eigen::Matrix2d acc = Eigen::Matrix2d::Identity();
    for (int k = 0; k < 36; ++k) acc = p.matrix() * acc;
    CHECK((acc - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  }
  SUBCASE("K=36: nine steps turn (0.8, 0) into (0, 0.8)") {
    const LatentGenerator p = make_latent_generator(GroupParams(36));
    const Eigen::Vector2d v = apply_power(p, 9, {0.8, 0.0});
    CHECK((v - Eigen::Vector2d(0.0, 0.8)).norm() < 1e-9);
  }
}

TEST_CASE("apply_power identities") {
  const LatentGenerator p = make_latent_generator(GroupParams(36));
  const Eigen::Vector2d v(0.31, -0.57);
  CHECK((apply_power(p, 0, v) - v).norm() == 0.0);
  CHECK((apply_power(p, 36, v) - v).norm() < 1e-9);
  CHECK((apply_power(p, 1, apply_power(p, -1, v)) - v).norm() < 1e-12);
  // Negative powers reduce mod K.
  CHECK((apply_power(p, -1, v) - apply_power(p, 35, v)).norm() == 0.0);
}

TEST_CASE("group axioms for K in {4, 12, 36}") {
  for (int k_order : {4, 12, 36}) {
    const GroupParams params(k_order);
    const LatentGenerator p = make_latent_generator(params);
    // Closure: every product of table entries is a table entry.
    for (int a = 0; a < k_order; ++a) {
      for (int b = 0; b < k_order; ++b) {
        const Eigen::Matrix2d prod = p.power(a) * p.power(b);
        CHECK((prod - p.power(a + b)).cwiseAbs().maxCoeff() < 1e-9);
      }
    }
    // Identity and inverses.
    CHECK((p.power(0) - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() == 0.0);
    for (int a = 0; a < k_order; ++a) {
      const Eigen::Matrix2d prod = p.power(a) * p.power(k_order - a);
      CHECK((prod - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("homomorphism and norm preservation over random triples") {
  const LatentGenerator p = make_latent_generator(GroupParams(36));
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const long long a = static_cast<long long>(rng.below(144)) - 72;
    const long long b = static_cast<long long>(rng.below(144)) - 72;
    const Eigen::Vector2d v(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const Eigen::Vector2d lhs = apply_power(p, a, apply_power(p, b, v));
    const Eigen::Vector2d rhs = apply_power(p, a + b, v);
    CHECK((lhs - rhs).norm() < 1e-9);
    CHECK(std::abs(apply_power(p, a, v).norm() - v.norm()) < 1e-12);
  }
}

TEST_CASE("pose_set") {
  SUBCASE("K=4") {
    const auto angles = pose_set(GroupParams(4));
    REQUIRE(angles.size() == 4);
    CHECK(angles[0] == 0.0);
    CHECK(angles[1] == doctest::Approx(kPi / 2).epsilon(1e-15));
    CHECK(angles[2] == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(angles[3] == doctest::Approx(3 * kPi / 2).epsilon(1e-15));
  }
  SUBCASE("K=36 endpoints") {
    const auto angles = pose_set(GroupParams(36));
    REQUIRE(angles.size() == 36);
    CHECK(angles.front() == 0.0);
    CHECK(angles.back() * kDegPerRad == doctest::Approx(350.0).epsilon(1e-12));
  }
  SUBCASE("length and spacing for assorted K") {
    for (int k_order : {2, 5, 12, 36, 90}) {
      const auto angles = pose_set(GroupParams(k_order));
      REQUIRE(static_cast<int>(angles.size()) == k_order);
      const double dt = GroupParams(k_order).delta_theta();
      for (std::size_t i = 1; i < angles.size(); ++i) {
        CHECK(angles[i] > angles[i - 1]);
        CHECK(std::abs(angles[i] - angles[i - 1] - dt) < 1e-12);
      }
    }
  }
}

TEST_CASE("angle_steps") {
  const GroupParams params(36);
  const double deg = 1.0 / kDegPerRad;
  CHECK(angle_steps(10 * deg, 50 * deg, params) == 4);
  CHECK(angle_steps(1.234, 1.234, params) == 0);
  CHECK(angle_steps(350 * deg, 10 * deg, params) == 2);
  // Exactly one full turn collapses to the identity.
  CHECK(angle_steps(0.0, kTwoPi, params) == 0);

  SUBCASE("off-grid angles are rejected, not rounded") {
    CHECK_THROWS_AS(angle_steps(0.0, 14.0 * deg, params), grid_mismatch_error);
    CHECK_THROWS_AS(angle_steps(3 * deg, 0.0, params), grid_mismatch_error);
    // Within the quarter-step band rounding is allowed.
    CHECK(angle_steps(0.0, 12.0 * deg, params) == 1);
    CHECK(angle_steps(0.0, 8.0 * deg, params) == 1);
  }
  SUBCASE("non-finite input") {
    CHECK_THROWS_AS(angle_steps(std::nan(""), 0.0, params), std::invalid_argument);
  }
}
