#pragma once

#include <Eigen/Dense>
#include <vector>

#include "orbitpose/errors.hpp"

namespace orbitpose {

inline constexpr double kTwoPi = 6.28318530717958647692528676655900577;
inline constexpr double kDegPerRad = 57.2957795130823208767981548141051703;

// Wraps an angle into [0, 2*pi). Exact at multiples of 2*pi.
double wrap_angle(double theta);

// Order K of the cyclic azimuth group and the derived step 2*pi/K.
struct GroupParams {
  explicit GroupParams(int order_in = 36);
  int order;  // K
  double delta_theta() const { return kTwoPi / order; }
};

// Rotation about the z-axis. Construction validates orthogonality,
// unit determinant and the fixed third row/column.
class Rotation3 {
 public:
  explicit Rotation3(const Eigen::Matrix3d& m);
  const Eigen::Matrix3d& matrix() const { return m_; }
  Eigen::Vector3d apply(const Eigen::Vector3d& v) const { return m_ * v; }

 private:
  Eigen::Matrix3d m_;
};

// Generator of the latent group: the 2x2 rotation by delta_theta, together
// with the table of all K powers. Powers are built from cos/sin of k *
// delta_theta directly rather than by repeated multiplication, so the K-th
// power is the identity to working precision.
class LatentGenerator {
 public:
  explicit LatentGenerator(const GroupParams& params);
  int order() const { return order_; }
  const Eigen::Matrix2d& matrix() const { return powers_[1 % order_]; }
  // p^(k mod K) for any integer k.
  const Eigen::Matrix2d& power(long long k) const;

 private:
  int order_;
  std::vector<Eigen::Matrix2d> powers_;
};

// R_z(theta) acting on R^3. Rejects non-finite theta; theta outside
// [0, 2*pi) is wrapped.
Rotation3 make_generator_3d(double theta);

// The 2x2 lower-right block of the latent representation: rotation by
// delta_theta. The identity block acting on f_id is realized by slicing,
// never materialized.
LatentGenerator make_latent_generator(const GroupParams& params);

// p^(k mod K) * v. Negative k selects inverse powers.
Eigen::Vector2d apply_power(const LatentGenerator& p, long long k,
                            const Eigen::Vector2d& v);

// [0, dt, 2*dt, ..., (K-1)*dt], strictly increasing, length K.
std::vector<double> pose_set(const GroupParams& params);

// Number of grid steps from theta1 to theta2, rounded to the nearest step.
// Throws grid_mismatch_error when the difference is more than a quarter
// step off the grid.
int angle_steps(double theta1, double theta2, const GroupParams& params);

}  // namespace orbitpose
