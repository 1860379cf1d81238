#include "orbitpose/objective.hpp"

#include <cmath>

#include "orbitpose/errors.hpp"

namespace orbitpose {

void LossWeights::validate() const {
  if (!(std::isfinite(beta1) && std::isfinite(beta2) && std::isfinite(beta3)))
    throw std::invalid_argument("LossWeights: weights must be finite");
  if (beta1 < 0.0 || beta2 < 0.0 || beta3 < 0.0)
    throw std::invalid_argument("LossWeights: weights must be nonnegative");
}

LossReport total_loss(double recon, double radius, double pair, const LossWeights& w) {
  LossReport report;
  report.recon = recon;
  report.radius = radius;
  report.pair = pair;
  report.total = w.beta1 * recon + w.beta2 * radius + w.beta3 * pair;
  return report;
}

double radius_loss(const Eigen::Vector2d& f_pose, double c) {
  if (c <= 0.0) throw std::invalid_argument("radius_loss: c must be positive");
  return std::abs(c - f_pose.norm());
}

double pair_loss(const Eigen::Vector2d& fp1, const Eigen::Vector2d& fp2, int n_steps,
                 const LatentGenerator& p) {
  return (fp2 - p.power(n_steps) * fp1).norm();
}

double recon_loss(const Eigen::MatrixXd& decoded_i, const Eigen::MatrixXd& decoded_j,
                  const Eigen::MatrixXd& gt_i, const Eigen::MatrixXd& gt_j,
                  int batch_size, bool normalize_pixels) {
  if (decoded_i.rows() != gt_i.rows() || decoded_i.cols() != gt_i.cols() ||
      decoded_j.rows() != gt_j.rows() || decoded_j.cols() != gt_j.cols() ||
      decoded_i.rows() != decoded_j.rows() || decoded_i.cols() != decoded_j.cols())
    throw std::invalid_argument("recon_loss: sequence dimensions do not match");
  if (batch_size < 1) throw std::invalid_argument("recon_loss: batch_size must be positive");
  const double k_order = static_cast<double>(decoded_i.cols());
  double denom = 2.0 * k_order * batch_size;
  if (normalize_pixels) denom *= static_cast<double>(decoded_i.rows());
  return ((decoded_i - gt_i).squaredNorm() + (decoded_j - gt_j).squaredNorm()) / denom;
}

namespace {

constexpr double kDegenerateNorm = 1e-12;

// Per-term normalization constants. Gradients and loss reports computed
// from the same scales are consistent by construction.
struct LossScales {
  double recon_norm = 0.0;   // 1 / (2*K*N_b*[D])
  double radius_norm = 0.0;  // 1 / (2*(N_b + N_s))
  double pair_norm = 0.0;    // 1 / (N_b + N_s)
};

LossScales make_scales(int batch_size, int style_count, int k_order, int pixel_count,
                       const ObjectiveOptions& opt) {
  LossScales scales;
  double recon_denom = 2.0 * k_order * batch_size;
  if (opt.normalize_recon_by_pixels) recon_denom *= static_cast<double>(pixel_count);
  scales.recon_norm = batch_size > 0 ? 1.0 / recon_denom : 0.0;
  const int constrained = batch_size + style_count;
  scales.radius_norm = constrained > 0 ? 1.0 / (2.0 * constrained) : 0.0;
  scales.pair_norm = constrained > 0 ? 1.0 / constrained : 0.0;
  return scales;
}

// Raw (unnormalized) loss sums, accumulated over pairs in index order.
struct RawTerms {
  double recon = 0.0;
  double radius = 0.0;
  double pair = 0.0;
};

LossReport report_from_terms(const RawTerms& terms, const LossScales& scales,
                             const LossWeights& w) {
  return total_loss(terms.recon * scales.recon_norm, terms.radius * scales.radius_norm,
                    terms.pair * scales.pair_norm, w);
}

// d|c - ||fp||| / dfp, with the subgradient taken as zero on the circle and
// at the origin.
Eigen::Vector2d radius_grad(const Eigen::Vector2d& fp, double c) {
  const double n = fp.norm();
  if (n < kDegenerateNorm || n == c) return Eigen::Vector2d::Zero();
  const double sign = (c - n) > 0.0 ? 1.0 : -1.0;
  return (-sign / n) * fp;
}

void validate_pair(const TrainingPair& pair, const ModelConfig& cfg, int k_order) {
  if (pair.views == nullptr) throw std::invalid_argument("training pair has no views");
  if (pair.views->rows() != cfg.input_dim() || pair.views->cols() != k_order)
    throw std::invalid_argument("training pair views do not match config");
  if (pair.pose_i < 0 || pair.pose_i >= k_order || pair.pose_j < 0 ||
      pair.pose_j >= k_order)
    throw std::invalid_argument("training pair pose index out of range");
}

// Column-batched forward through a dense stack with ReLU hidden layers.
// The output layer either keeps its raw pre-activations (encoder: the
// caller applies the ReLU/tanh split) or applies the sigmoid directly
// (decoder: the derivative needs only the activation itself).
struct StackTrace {
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> post;  // post[0] is the input batch
};

enum class LastLayer { kRawPre, kSigmoid };

StackTrace stack_forward(const std::vector<DenseLayer>& layers, Eigen::MatrixXd inputs,
                         LastLayer mode) {
  StackTrace tr;
  tr.post.push_back(std::move(inputs));
  const std::size_t last = layers.size() - 1;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = (layers[l].W * tr.post.back()).colwise() + layers[l].b;
    if (l < last) {
      Eigen::MatrixXd a = z.cwiseMax(0.0);
      tr.pre.push_back(std::move(z));
      tr.post.push_back(std::move(a));
    } else if (mode == LastLayer::kRawPre) {
      tr.pre.push_back(std::move(z));
    } else {
      z = ((-z).array().exp() + 1.0).inverse().matrix();
      tr.post.push_back(std::move(z));
    }
  }
  return tr;
}

// Backpropagates a column batch through a stack traced by stack_forward.
// Each gradient tensor is written exactly once. Returns the gradient at
// the stack input.
Eigen::MatrixXd stack_backward(const std::vector<DenseLayer>& layers,
                               const StackTrace& tr, Eigen::MatrixXd dz,
                               std::vector<DenseLayer>& grads) {
  for (std::size_t l = layers.size(); l-- > 0;) {
    grads[l].W.noalias() = dz * tr.post[l].transpose();
    grads[l].b.noalias() = dz.rowwise().sum();
    Eigen::MatrixXd da = layers[l].W.transpose() * dz;
    if (l == 0) return da;
    dz = (tr.pre[l - 1].array() > 0.0).select(da, 0.0);
  }
  return {};
}

void resize_like(ModelParams& dst, const ModelParams& src) {
  if (!dst.encoder.empty()) return;
  for (const auto& l : src.encoder)
    dst.encoder.push_back(
        {Eigen::MatrixXd(l.W.rows(), l.W.cols()), Eigen::VectorXd(l.b.size())});
  for (const auto& l : src.decoder)
    dst.decoder.push_back(
        {Eigen::MatrixXd(l.W.rows(), l.W.cols()), Eigen::VectorXd(l.b.size())});
}

}  // namespace

LossReport batch_loss(const Batch& batch, const ModelParams& params,
                      const ModelConfig& cfg, const LossWeights& w,
                      const ObjectiveOptions& opt) {
  w.validate();
  const LatentGenerator gen(cfg.group);
  const int k_order = gen.order();
  RawTerms terms;

  const auto latent_terms = [&](const TrainingPair& pair, const LatentCode& ci,
                                const LatentCode& cj) {
    terms.radius += radius_loss(ci.f_pose, cfg.c) + radius_loss(cj.f_pose, cfg.c);
    terms.pair += pair_loss(ci.f_pose, cj.f_pose, pair.n_steps, gen);
  };

  for (const auto& pair : batch.pairs) {
    validate_pair(pair, cfg, k_order);
    const auto& views = *pair.views;
    const LatentCode ci = encode(views.col(pair.pose_i), params, cfg);
    const LatentCode cj = encode(views.col(pair.pose_j), params, cfg);
    latent_terms(pair, ci, cj);
    // Pose units swapped between the branches before orbit generation.
    const auto branch_raw = [&](const Eigen::VectorXd& f_id,
                                const Eigen::Vector2d& f_pose, int start_pose) {
      Eigen::MatrixXd codes(cfg.code_dim(), k_order);
      for (int k = 0; k < k_order; ++k) {
        codes.col(k).head(cfg.d_id) = f_id;
        codes.col(k).tail(2) = gen.power(k) * f_pose;
      }
      const Eigen::MatrixXd decoded = decode_batch(codes, params, cfg, nullptr);
      double raw = 0.0;
      for (int k = 0; k < k_order; ++k)
        raw += (decoded.col(k) - views.col((start_pose + k) % k_order)).squaredNorm();
      return raw;
    };
    terms.recon += branch_raw(ci.f_id, cj.f_pose, pair.pose_j) +
                   branch_raw(cj.f_id, ci.f_pose, pair.pose_i);
  }
  for (const auto& pair : batch.style_pairs) {
    validate_pair(pair, cfg, k_order);
    const auto& views = *pair.views;
    const LatentCode ci = encode(views.col(pair.pose_i), params, cfg);
    const LatentCode cj = encode(views.col(pair.pose_j), params, cfg);
    latent_terms(pair, ci, cj);
  }

  const LossScales scales =
      make_scales(static_cast<int>(batch.pairs.size()),
                  static_cast<int>(batch.style_pairs.size()), k_order, cfg.input_dim(),
                  opt);
  return report_from_terms(terms, scales, w);
}

BackwardResult backward(const Batch& batch, const ModelParams& params,
                        const ModelConfig& cfg, const LossWeights& w,
                        const ObjectiveOptions& opt) {
  w.validate();
  const LatentGenerator gen(cfg.group);
  const int k_order = gen.order();
  const int n_full = static_cast<int>(batch.pairs.size());
  const int n_style = static_cast<int>(batch.style_pairs.size());
  const int n_views = 2 * (n_full + n_style);
  if (n_views == 0) throw std::invalid_argument("backward: empty batch");

  const LossScales scales =
      make_scales(n_full, n_style, k_order, cfg.input_dim(), opt);
  RawTerms terms;

  const auto pair_at = [&](int index) -> const TrainingPair& {
    return index < n_full ? batch.pairs[static_cast<std::size_t>(index)]
                          : batch.style_pairs[static_cast<std::size_t>(index - n_full)];
  };

  // Encoder forward over every view: pair p occupies columns 2p and 2p+1.
  Eigen::MatrixXd inputs(cfg.input_dim(), n_views);
  for (int p = 0; p < n_full + n_style; ++p) {
    const TrainingPair& pair = pair_at(p);
    validate_pair(pair, cfg, k_order);
    inputs.col(2 * p) = pair.views->col(pair.pose_i);
    inputs.col(2 * p + 1) = pair.views->col(pair.pose_j);
  }
  const StackTrace enc =
      stack_forward(params.encoder, std::move(inputs), LastLayer::kRawPre);
  const Eigen::MatrixXd& z_out = enc.pre.back();
  const Eigen::MatrixXd f_id = z_out.topRows(cfg.d_id).cwiseMax(0.0);
  Eigen::MatrixXd f_pose(2, n_views);
  for (int v = 0; v < n_views; ++v) {
    f_pose(0, v) = std::tanh(z_out(cfg.d_id, v));
    f_pose(1, v) = std::tanh(z_out(cfg.d_id + 1, v));
  }

  // Latent constraints and their gradients on the pose units.
  Eigen::MatrixXd g_pose = Eigen::MatrixXd::Zero(2, n_views);
  const double radius_scale = w.beta2 * scales.radius_norm;
  const double pair_scale = w.beta3 * scales.pair_norm;
  for (int p = 0; p < n_full + n_style; ++p) {
    const Eigen::Vector2d fp_i = f_pose.col(2 * p);
    const Eigen::Vector2d fp_j = f_pose.col(2 * p + 1);
    terms.radius += radius_loss(fp_i, cfg.c) + radius_loss(fp_j, cfg.c);
    g_pose.col(2 * p) += radius_scale * radius_grad(fp_i, cfg.c);
    g_pose.col(2 * p + 1) += radius_scale * radius_grad(fp_j, cfg.c);

    const Eigen::Matrix2d& pn = gen.power(pair_at(p).n_steps);
    const Eigen::Vector2d r = fp_j - pn * fp_i;
    const double nr = r.norm();
    terms.pair += nr;
    if (nr >= kDegenerateNorm) {
      g_pose.col(2 * p + 1) += (pair_scale / nr) * r;
      g_pose.col(2 * p) -= (pair_scale / nr) * (pn.transpose() * r);
    }
  }

  BackwardResult result;
  resize_like(result.grads, params);
  Eigen::MatrixXd g_fid = Eigen::MatrixXd::Zero(cfg.d_id, n_views);

  if (n_full > 0) {
    // Decoder forward for all full pairs at once. Pair p occupies columns
    // [p*2K, (p+1)*2K): first its branch A (f_id of view i with the orbit
    // of view j's pose — the unit swap), then branch B, the mirror image.
    Eigen::MatrixXd codes(cfg.code_dim(), static_cast<Eigen::Index>(2) * k_order * n_full);
    for (int p = 0; p < n_full; ++p) {
      const Eigen::Index base = static_cast<Eigen::Index>(2) * k_order * p;
      for (int k = 0; k < k_order; ++k) {
        codes.col(base + k).head(cfg.d_id) = f_id.col(2 * p);
        codes.col(base + k).tail(2) = gen.power(k) * Eigen::Vector2d(f_pose.col(2 * p + 1));
        codes.col(base + k_order + k).head(cfg.d_id) = f_id.col(2 * p + 1);
        codes.col(base + k_order + k).tail(2) =
            gen.power(k) * Eigen::Vector2d(f_pose.col(2 * p));
      }
    }

    StackTrace dec = stack_forward(params.decoder, std::move(codes), LastLayer::kSigmoid);
    const Eigen::MatrixXd& y = dec.post.back();

    // Residual, reconstruction term and the sigmoid backward dz = dL/dy *
    // y * (1 - y), fused column by column. The per-pair accumulation keeps
    // the loss reduction in pair-index order.
    const double recon_scale = w.beta1 * scales.recon_norm;
    Eigen::MatrixXd dz(y.rows(), y.cols());
    Eigen::VectorXd r(y.rows());
    for (int p = 0; p < n_full; ++p) {
      const TrainingPair& pair = batch.pairs[static_cast<std::size_t>(p)];
      const Eigen::Index base = static_cast<Eigen::Index>(2) * k_order * p;
      double pair_recon = 0.0;
      for (int k = 0; k < 2 * k_order; ++k) {
        const int start = k < k_order ? pair.pose_j : pair.pose_i;
        const Eigen::Index col = base + k;
        r = y.col(col) - pair.views->col((start + k) % k_order);
        pair_recon += r.squaredNorm();
        dz.col(col) = (2.0 * recon_scale) *
                      (r.array() * y.col(col).array() * (1.0 - y.col(col).array()));
      }
      terms.recon += pair_recon;
    }

    dec.post.pop_back();  // y is no longer needed by the backward pass
    const Eigen::MatrixXd g_codes =
        stack_backward(params.decoder, dec, std::move(dz), result.grads.decoder);

    // Split the code gradients back onto identities and pose units. Each
    // orbit element is p^k * f_pose with p^k constant, so the pullback onto
    // f_pose applies the inverse power per column.
    for (int p = 0; p < n_full; ++p) {
      const Eigen::Index base = static_cast<Eigen::Index>(2) * k_order * p;
      g_fid.col(2 * p) =
          g_codes.topRows(cfg.d_id).middleCols(base, k_order).rowwise().sum();
      g_fid.col(2 * p + 1) =
          g_codes.topRows(cfg.d_id).middleCols(base + k_order, k_order).rowwise().sum();
      for (int k = 0; k < k_order; ++k) {
        g_pose.col(2 * p + 1) +=
            gen.power(-k) * Eigen::Vector2d(g_codes.col(base + k).tail(2));
        g_pose.col(2 * p) +=
            gen.power(-k) * Eigen::Vector2d(g_codes.col(base + k_order + k).tail(2));
      }
    }
  } else {
    for (auto& layer : result.grads.decoder) {
      layer.W.setZero();
      layer.b.setZero();
    }
  }

  // Encoder output gradients: ReLU mask on the identity part, tanh
  // derivative on the pose part.
  Eigen::MatrixXd dz_out(cfg.code_dim(), n_views);
  dz_out.topRows(cfg.d_id) =
      (z_out.topRows(cfg.d_id).array() > 0.0).select(g_fid, 0.0);
  dz_out.bottomRows(2) =
      (g_pose.array() * (1.0 - f_pose.array().square())).matrix();
  stack_backward(params.encoder, enc, std::move(dz_out), result.grads.encoder);

  result.report = report_from_terms(terms, scales, w);
  result.grads.for_each_tensor([](const std::string& name, const auto& t) {
    if (!t.allFinite())
      throw numerical_error("backward: non-finite gradient in tensor " + name);
  });
  return result;
}

}  // namespace orbitpose
