#include "orbitpose/group.hpp"

#include <cmath>
#include <string>

namespace orbitpose {

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  // fmod can return exactly kTwoPi after the negative fixup.
  if (t >= kTwoPi) t -= kTwoPi;
  return t;
}

GroupParams::GroupParams(int order_in) : order(order_in) {
  if (order < 2) {
    throw std::invalid_argument("GroupParams: order must be at least 2, got " +
                                std::to_string(order));
  }
}

namespace {

constexpr double kOrthoTol = 1e-12;

Eigen::Matrix2d rotation2(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix2d m;
  m << c, -s, s, c;
  return m;
}

}  // namespace

Rotation3::Rotation3(const Eigen::Matrix3d& m) : m_(m) {
  if (!m_.allFinite()) throw std::invalid_argument("Rotation3: non-finite matrix");
  if (((m_.transpose() * m_) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > kOrthoTol)
    throw std::invalid_argument("Rotation3: matrix is not orthogonal");
  if (std::abs(m_.determinant() - 1.0) > kOrthoTol)
    throw std::invalid_argument("Rotation3: determinant is not 1");
  const bool azimuthal = m_(2, 2) == 1.0 && m_(2, 0) == 0.0 && m_(2, 1) == 0.0 &&
                         m_(0, 2) == 0.0 && m_(1, 2) == 0.0;
  if (!azimuthal)
    throw std::invalid_argument("Rotation3: not a rotation about the z-axis");
}

LatentGenerator::LatentGenerator(const GroupParams& params) : order_(params.order) {
  powers_.reserve(order_);
  const double dt = params.delta_theta();
  for (int k = 0; k < order_; ++k) powers_.push_back(rotation2(k * dt));

  // Cyclicity check: K sequential applications of the generator come back
  // to the identity.
  Eigen::Matrix2d acc = Eigen::Matrix2d::Identity();
  for (int k = 0; k < order_; ++k) acc = powers_[1 % order_] * acc;
  if ((acc - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    throw numerical_error("LatentGenerator: p^K deviates from the identity");
}

const Eigen::Matrix2d& LatentGenerator::power(long long k) const {
  long long r = k % order_;
  if (r < 0) r += order_;
  return powers_[static_cast<std::size_t>(r)];
}

Rotation3 make_generator_3d(double theta) {
  if (!std::isfinite(theta))
    throw std::invalid_argument("make_generator_3d: theta must be finite");
  const double t = wrap_angle(theta);
  const double c = std::cos(t);
  const double s = std::sin(t);
  Eigen::Matrix3d m;
  m << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return Rotation3(m);
}

LatentGenerator make_latent_generator(const GroupParams& params) {
  return LatentGenerator(params);
}

Eigen::Vector2d apply_power(const LatentGenerator& p, long long k,
                            const Eigen::Vector2d& v) {
  return p.power(k) * v;
}

std::vector<double> pose_set(const GroupParams& params) {
  std::vector<double> angles(static_cast<std::size_t>(params.order));
  const double dt = params.delta_theta();
  for (int k = 0; k < params.order; ++k) angles[static_cast<std::size_t>(k)] = k * dt;
  return angles;
}

int angle_steps(double theta1, double theta2, const GroupParams& params) {
  if (!std::isfinite(theta1) || !std::isfinite(theta2))
    throw std::invalid_argument("angle_steps: angles must be finite");
  const double diff = wrap_angle(theta2 - theta1);
  const double steps = diff / params.delta_theta();
  const long long n = std::llround(steps);
  if (std::abs(steps - static_cast<double>(n)) > 0.25) {
    throw grid_mismatch_error("angle_steps: angle difference " + std::to_string(diff) +
                              " rad is " + std::to_string(steps - n) +
                              " steps off the pose grid");
  }
  return static_cast<int>(n % params.order);
}

}  // namespace orbitpose
