#pragma once

#include <Eigen/Dense>
#include <vector>

#include "orbitpose/group.hpp"
#include "orbitpose/model.hpp"

namespace orbitpose {

struct LossWeights {
  double beta1 = 100.0;  // reconstruction
  double beta2 = 1.0;    // radius
  double beta3 = 3.0;    // pair
  void validate() const;
};

struct LossReport {
  double recon = 0.0;
  double radius = 0.0;
  double pair = 0.0;
  double total = 0.0;
};

// Weighted sum of the components.
LossReport total_loss(double recon, double radius, double pair, const LossWeights& w);

// Absolute deviation of the pose norm from the target radius c.
double radius_loss(const Eigen::Vector2d& f_pose, double c);

// Distance between fp2 and fp1 advanced n_steps along the orbit.
double pair_loss(const Eigen::Vector2d& fp1, const Eigen::Vector2d& fp2, int n_steps,
                 const LatentGenerator& p);

// Squared reconstruction error of both branches of one pair, normalized by
// 2*K*batch_size. Sequences are D x K, one column per orbit step. With
// normalize_pixels the squared norms are additionally divided by D so the
// loss scale does not depend on the image size.
double recon_loss(const Eigen::MatrixXd& decoded_i, const Eigen::MatrixXd& decoded_j,
                  const Eigen::MatrixXd& gt_i, const Eigen::MatrixXd& gt_j,
                  int batch_size, bool normalize_pixels = false);

// One training pair: two views of the same object plus that object's full
// K-view sequence for reconstruction targets.
struct TrainingPair {
  const Eigen::MatrixXd* views = nullptr;  // D x K, column k = view at pose k
  int pose_i = 0;
  int pose_j = 0;
  int n_steps = 0;  // angle_steps(theta_i, theta_j)
};

// pairs carries the full objective; style_pairs contribute only the radius
// and pair constraints (their reconstructions are never formed).
struct Batch {
  std::vector<TrainingPair> pairs;
  std::vector<TrainingPair> style_pairs;
};

struct ObjectiveOptions {
  bool normalize_recon_by_pixels = true;
};

// Forward pass over the whole batch; loss components only.
LossReport batch_loss(const Batch& batch, const ModelParams& params,
                      const ModelConfig& cfg, const LossWeights& w,
                      const ObjectiveOptions& opt);

// Gradient of the total loss with respect to every parameter tensor. The
// batch is processed as column-blocked matrix products, so per-sample
// contributions are summed in pair-index order and the result is
// bit-reproducible for a fixed thread count.
// Throws numerical_error naming the first non-finite gradient tensor.
struct BackwardResult {
  LossReport report;
  ModelParams grads;
};
BackwardResult backward(const Batch& batch, const ModelParams& params,
                        const ModelConfig& cfg, const LossWeights& w,
                        const ObjectiveOptions& opt);

}  // namespace orbitpose
