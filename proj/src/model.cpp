#include "orbitpose/model.hpp"

#include <cmath>

#include "orbitpose/errors.hpp"
#include "orbitpose/rng.hpp"

namespace orbitpose {

void ModelConfig::validate() const {
  if (image_size < 1) throw std::invalid_argument("ModelConfig: image_size must be positive");
  if (channels < 1) throw std::invalid_argument("ModelConfig: channels must be positive");
  if (d_id < 1) throw std::invalid_argument("ModelConfig: d_id must be at least 1");
  if (!(c > 0.0 && c < 1.0))
    throw std::invalid_argument("ModelConfig: c must lie in (0, 1), got " + std::to_string(c));
  for (int h : hidden_sizes)
    if (h < 1) throw std::invalid_argument("ModelConfig: hidden sizes must be positive");
}

namespace {

std::vector<int> encoder_widths(const ModelConfig& cfg) {
  std::vector<int> w;
  w.push_back(cfg.input_dim());
  w.insert(w.end(), cfg.hidden_sizes.begin(), cfg.hidden_sizes.end());
  w.push_back(cfg.code_dim());
  return w;
}

std::vector<int> decoder_widths(const ModelConfig& cfg) {
  std::vector<int> w;
  w.push_back(cfg.code_dim());
  w.insert(w.end(), cfg.hidden_sizes.rbegin(), cfg.hidden_sizes.rend());
  w.push_back(cfg.input_dim());
  return w;
}

std::vector<DenseLayer> init_stack(const std::vector<int>& widths, Rng& rng) {
  std::vector<DenseLayer> layers;
  layers.reserve(widths.size() - 1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    layer.W.resize(fan_out, fan_in);
    // Row-major fill order so the draw sequence is part of the format.
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) layer.W(r, c) = rng.uniform(-s, s);
    layer.b = Eigen::VectorXd::Zero(fan_out);
    layers.push_back(std::move(layer));
  }
  return layers;
}

// Splits the encoder output layer's pre-activation into the identity part
// (ReLU) and the pose pair (tanh).
LatentCode split_code(const Eigen::VectorXd& z, int d_id) {
  LatentCode code;
  code.f_id = z.head(d_id).cwiseMax(0.0);
  code.f_pose = Eigen::Vector2d(std::tanh(z(d_id)), std::tanh(z(d_id + 1)));
  return code;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  ModelParams params;
  params.encoder = init_stack(encoder_widths(cfg), rng);
  params.decoder = init_stack(decoder_widths(cfg), rng);
  return params;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z;
  for (const auto& l : params.encoder)
    z.encoder.push_back({Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()),
                         Eigen::VectorXd::Zero(l.b.size())});
  for (const auto& l : params.decoder)
    z.decoder.push_back({Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()),
                         Eigen::VectorXd::Zero(l.b.size())});
  return z;
}

void check_shapes(const ModelParams& params, const ModelConfig& cfg) {
  const auto check = [](const std::vector<DenseLayer>& layers, const std::vector<int>& widths,
                        const char* what) {
    if (layers.size() != widths.size() - 1)
      throw data_error(std::string(what) + ": wrong layer count");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].W.rows() != widths[l + 1] || layers[l].W.cols() != widths[l] ||
          layers[l].b.size() != widths[l + 1])
        throw data_error(std::string(what) + ": layer " + std::to_string(l) +
                         " shape does not match the config");
      if (!layers[l].W.allFinite() || !layers[l].b.allFinite())
        throw data_error(std::string(what) + ": layer " + std::to_string(l) +
                         " holds non-finite values");
    }
  };
  check(params.encoder, encoder_widths(cfg), "encoder");
  check(params.decoder, decoder_widths(cfg), "decoder");
}

EncoderTrace encode_traced(const Eigen::VectorXd& image, const ModelParams& params,
                           const ModelConfig& cfg) {
  if (image.size() != cfg.input_dim())
    throw std::invalid_argument("encode: image has " + std::to_string(image.size()) +
                                " values, config expects " + std::to_string(cfg.input_dim()));
  EncoderTrace trace;
  trace.post.push_back(image);
  const std::size_t last = params.encoder.size() - 1;
  for (std::size_t l = 0; l < params.encoder.size(); ++l) {
    Eigen::VectorXd z = params.encoder[l].W * trace.post.back() + params.encoder[l].b;
    if (l < last) {
      Eigen::VectorXd a = z.cwiseMax(0.0);
      trace.pre.push_back(std::move(z));
      trace.post.push_back(std::move(a));
    } else {
      trace.pre.push_back(std::move(z));
    }
  }
  trace.code = split_code(trace.pre.back(), cfg.d_id);
  return trace;
}

LatentCode encode(const Eigen::VectorXd& image, const ModelParams& params,
                  const ModelConfig& cfg) {
  if (image.size() != cfg.input_dim())
    throw std::invalid_argument("encode: image has " + std::to_string(image.size()) +
                                " values, config expects " + std::to_string(cfg.input_dim()));
  Eigen::VectorXd a = image;
  const std::size_t last = params.encoder.size() - 1;
  for (std::size_t l = 0; l < last; ++l)
    a = (params.encoder[l].W * a + params.encoder[l].b).cwiseMax(0.0);
  const Eigen::VectorXd z = params.encoder[last].W * a + params.encoder[last].b;
  return split_code(z, cfg.d_id);
}

Eigen::MatrixXd decode_batch(const Eigen::MatrixXd& codes, const ModelParams& params,
                             const ModelConfig& cfg, DecoderTrace* trace) {
  if (codes.rows() != cfg.code_dim())
    throw std::invalid_argument("decode: code has " + std::to_string(codes.rows()) +
                                " rows, config expects " + std::to_string(cfg.code_dim()));
  if (trace) trace->post.push_back(codes);
  Eigen::MatrixXd a = codes;
  const std::size_t last = params.decoder.size() - 1;
  for (std::size_t l = 0; l < params.decoder.size(); ++l) {
    Eigen::MatrixXd z = (params.decoder[l].W * a).colwise() + params.decoder[l].b;
    if (l < last) {
      a = z.cwiseMax(0.0);
    } else {
      a = ((-z).array().exp() + 1.0).inverse().matrix();
    }
    if (trace) {
      trace->pre.push_back(std::move(z));
      trace->post.push_back(a);
    }
  }
  return a;
}

Eigen::VectorXd decode(const LatentCode& code, const ModelParams& params,
                       const ModelConfig& cfg) {
  if (code.f_id.size() != cfg.d_id)
    throw std::invalid_argument("decode: f_id has " + std::to_string(code.f_id.size()) +
                                " values, config expects " + std::to_string(cfg.d_id));
  Eigen::MatrixXd codes(cfg.code_dim(), 1);
  codes.col(0).head(cfg.d_id) = code.f_id;
  codes.col(0).tail(2) = code.f_pose;
  return decode_batch(codes, params, cfg, nullptr).col(0);
}

Orbit generate_orbit(const Eigen::Vector2d& f_pose, const LatentGenerator& p) {
  if (!f_pose.allFinite())
    throw std::invalid_argument("generate_orbit: f_pose must be finite");
  Orbit orbit;
  orbit.elements.reserve(static_cast<std::size_t>(p.order()));
  for (int k = 0; k < p.order(); ++k) orbit.elements.push_back(p.power(k) * f_pose);
  return orbit;
}

Orbit generate_orbit(const Eigen::Vector2d& f_pose, const GroupParams& group) {
  return generate_orbit(f_pose, LatentGenerator(group));
}

std::pair<LatentCode, LatentCode> swap_pose_units(const LatentCode& a,
                                                  const LatentCode& b) {
  return {LatentCode{a.f_id, b.f_pose}, LatentCode{b.f_id, a.f_pose}};
}

std::vector<LatentCode> assemble_decoder_inputs(const Eigen::VectorXd& f_id,
                                                const Orbit& orbit) {
  std::vector<LatentCode> codes;
  codes.reserve(orbit.elements.size());
  for (const auto& element : orbit.elements) codes.push_back(LatentCode{f_id, element});
  return codes;
}

Eigen::MatrixXd assemble_decoder_matrix(const Eigen::VectorXd& f_id, const Orbit& orbit) {
  Eigen::MatrixXd codes(f_id.size() + 2, orbit.size());
  for (int k = 0; k < orbit.size(); ++k) {
    codes.col(k).head(f_id.size()) = f_id;
    codes.col(k).tail(2) = orbit.elements[static_cast<std::size_t>(k)];
  }
  return codes;
}

}  // namespace orbitpose
