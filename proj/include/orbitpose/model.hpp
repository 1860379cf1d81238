#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "orbitpose/group.hpp"

namespace orbitpose {

// Architecture of the encoder-decoder. The encoder output is always
// d_id + 2 wide: d_id identity units (ReLU) and exactly 2 pose units
// (tanh), the pose pair being the 2-d block the latent group rotates.
struct ModelConfig {
  int image_size = 32;
  int channels = 3;
  int d_id = 32;
  std::vector<int> hidden_sizes = {256, 128};
  double c = 0.8;  // target orbit radius, must lie in (0, 1)
  GroupParams group{36};

  int input_dim() const { return image_size * image_size * channels; }
  int code_dim() const { return d_id + 2; }
  void validate() const;
};

struct DenseLayer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

// All trainable weights. Encoder and decoder are plain dense stacks; the
// same instance backs both branches of training.
struct ModelParams {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;

  // Visits every tensor with a stable name ("enc0.W", "dec2.b", ...).
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    for (std::size_t i = 0; i < encoder.size(); ++i) {
      fn("enc" + std::to_string(i) + ".W", encoder[i].W);
      fn("enc" + std::to_string(i) + ".b", encoder[i].b);
    }
    for (std::size_t i = 0; i < decoder.size(); ++i) {
      fn("dec" + std::to_string(i) + ".W", decoder[i].W);
      fn("dec" + std::to_string(i) + ".b", decoder[i].b);
    }
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    const_cast<ModelParams*>(this)->for_each_tensor(
        [&](const std::string& name, auto& t) { fn(name, t); });
  }
};

// Uniform init in [-s, s] with s = 1/sqrt(fan_in); biases start at zero.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

// Same shapes as `params`, every entry zero.
ModelParams zeros_like(const ModelParams& params);

// Checks that parameter shapes match the config. Throws data_error.
void check_shapes(const ModelParams& params, const ModelConfig& cfg);

struct LatentCode {
  Eigen::VectorXd f_id;
  Eigen::Vector2d f_pose;
};

// Ordered set of the K latent pose points generated by the group.
struct Orbit {
  std::vector<Eigen::Vector2d> elements;
  int size() const { return static_cast<int>(elements.size()); }
};

// Forward-pass record kept for backpropagation. post[0] is the input;
// pre[l]/post[l+1] are layer l's pre-activation and activation.
struct EncoderTrace {
  std::vector<Eigen::VectorXd> pre;
  std::vector<Eigen::VectorXd> post;
  LatentCode code;
};

// Same, for a decoder run over a whole orbit: activations carry one column
// per orbit element.
struct DecoderTrace {
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> post;
};

// Deterministic forward pass; image values are expected in [0, 1].
LatentCode encode(const Eigen::VectorXd& image, const ModelParams& params,
                  const ModelConfig& cfg);
EncoderTrace encode_traced(const Eigen::VectorXd& image, const ModelParams& params,
                           const ModelConfig& cfg);

Eigen::VectorXd decode(const LatentCode& code, const ModelParams& params,
                       const ModelConfig& cfg);

// Decodes a (d_id + 2) x K matrix of codes column-wise. `trace` may be null.
Eigen::MatrixXd decode_batch(const Eigen::MatrixXd& codes, const ModelParams& params,
                             const ModelConfig& cfg, DecoderTrace* trace);

// Element k is p^k applied to f_pose; element 0 is f_pose itself.
Orbit generate_orbit(const Eigen::Vector2d& f_pose, const GroupParams& group);
Orbit generate_orbit(const Eigen::Vector2d& f_pose, const LatentGenerator& p);

// Exchanges the pose units of two codes, leaving identities in place.
std::pair<LatentCode, LatentCode> swap_pose_units(const LatentCode& a,
                                                  const LatentCode& b);

// One decoder input per orbit element: f_id concatenated with element k.
std::vector<LatentCode> assemble_decoder_inputs(const Eigen::VectorXd& f_id,
                                                const Orbit& orbit);

// Matrix form of the above, (d_id + 2) x K, used on the training path.
Eigen::MatrixXd assemble_decoder_matrix(const Eigen::VectorXd& f_id,
                                        const Orbit& orbit);

}  // namespace orbitpose
