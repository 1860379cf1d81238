#include "orbitpose/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "orbitpose/checkpoint.hpp"
#include "orbitpose/errors.hpp"

namespace orbitpose {

namespace fs = std::filesystem;

void TrainerConfig::validate() const {
  if (!(lr0 > 0.0) || !std::isfinite(lr0))
    throw std::invalid_argument("TrainerConfig: lr0 must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("TrainerConfig: gamma must lie in (0, 1]");
  if (decay_every < 1) throw std::invalid_argument("TrainerConfig: decay_every must be positive");
  if (batch_size < 1) throw std::invalid_argument("TrainerConfig: batch_size must be positive");
  if (stage1_iters < 0 || stage2_iters < 0)
    throw std::invalid_argument("TrainerConfig: iteration counts must be nonnegative");
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("TrainerConfig: rho must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("TrainerConfig: epsilon must be positive");
  stage1_weights.validate();
  stage2_weights.validate();
}

double lr_at(long iter, const TrainerConfig& cfg) {
  if (iter < 0) throw std::invalid_argument("lr_at: iter must be nonnegative");
  return cfg.lr0 * std::pow(cfg.gamma, static_cast<double>(iter / cfg.decay_every));
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("history csv: cannot open " + path + " for writing");
  out << "iter,lr,recon,radius,pair,total\n";
  char line[192];
  for (const auto& row : history) {
    std::snprintf(line, sizeof(line), "%ld,%.10g,%.10g,%.10g,%.10g,%.10g\n", row.iter,
                  row.lr, row.report.recon, row.report.radius, row.report.pair,
                  row.report.total);
    out << line;
  }
}

Trainer::Trainer(const ModelConfig& model_cfg, const TrainerConfig& cfg)
    : model_cfg_(model_cfg), cfg_(cfg), gen_(model_cfg.group) {
  model_cfg_.validate();
  cfg_.validate();
#if defined(__GLIBC__)
  // The batch buffers exceed glibc's mmap threshold, which would fault in
  // fresh pages every iteration; keep them on the reusable heap instead.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
#endif
}

TrainState Trainer::init_state() const {
  // One root seed feeds both the weight init and (in train()) the sampler.
  Rng seeder(cfg_.seed);
  const std::uint64_t init_seed = seeder.next_u64();
  TrainState state;
  state.params = init_params(model_cfg_, init_seed);
  state.sq_accum = zeros_like(state.params);
  return state;
}

LossWeights Trainer::stage_weights_at(long iter) const {
  return iter < cfg_.stage1_iters ? cfg_.stage1_weights : cfg_.stage2_weights;
}

namespace {

TrainingPair draw_pair(const Dataset& data, const std::vector<std::size_t>& pool,
                       Rng& rng, const GroupParams& group) {
  const std::size_t seq_index = pool[rng.below(pool.size())];
  const ObjectViews& seq = data.sequences[seq_index];
  if (seq.views.cols() != group.order)
    throw data_error("sample_pair_batch: object " + std::to_string(seq.object_id) +
                     " lacks full K-view coverage");
  TrainingPair pair;
  pair.views = &seq.views;
  pair.pose_i = static_cast<int>(rng.below(static_cast<std::uint64_t>(group.order)));
  pair.pose_j = static_cast<int>(rng.below(static_cast<std::uint64_t>(group.order)));
  const double dt = group.delta_theta();
  pair.n_steps = angle_steps(pair.pose_i * dt, pair.pose_j * dt, group);
  return pair;
}

}  // namespace

Batch Trainer::sample_pair_batch(const Dataset& data, Rng& rng, bool with_style) const {
  if (data.train.empty()) throw data_error("sample_pair_batch: train split is empty");
  if (data.group.order != model_cfg_.group.order)
    throw data_error("sample_pair_batch: dataset group order differs from the model's");
  Batch batch;
  batch.pairs.reserve(static_cast<std::size_t>(cfg_.batch_size));
  for (int b = 0; b < cfg_.batch_size; ++b)
    batch.pairs.push_back(draw_pair(data, data.train, rng, model_cfg_.group));
  if (with_style) {
    if (data.style_shifted.empty())
      throw data_error("sample_pair_batch: style-shifted split is empty");
    for (int b = 0; b < cfg_.batch_size; ++b)
      batch.style_pairs.push_back(
          draw_pair(data, data.style_shifted, rng, model_cfg_.group));
  }
  return batch;
}

LossReport Trainer::train_step(TrainState& state, const Batch& batch,
                               const LossWeights& w) {
  if (batch.pairs.empty() && batch.style_pairs.empty())
    throw std::invalid_argument("train_step: empty batch");

  // The batch is processed as column-blocked matrix products; the thread
  // count only selects how Eigen partitions them, and results are
  // bit-identical for a fixed count.
  const int n_threads = cfg_.n_threads > 0
                            ? cfg_.n_threads
                            : static_cast<int>(std::thread::hardware_concurrency());
  Eigen::setNbThreads(std::max(1, n_threads));

  BackwardResult result;
  try {
    result = backward(batch, state.params, model_cfg_, w,
                      ObjectiveOptions{cfg_.normalize_recon_by_pixels});
  } catch (const numerical_error& e) {
    throw numerical_error(std::string(e.what()) + " at iteration " +
                          std::to_string(state.iter));
  }
  if (!std::isfinite(result.report.total))
    throw numerical_error("train_step: non-finite loss at iteration " +
                          std::to_string(state.iter));

  // Root-mean-square gradient scaling: a <- rho*a + (1-rho)*g^2, then
  // w <- w - lr * g / sqrt(a + eps).
  const double lr = lr_at(state.iter, cfg_);
  for (std::size_t part = 0; part < 2; ++part) {
    auto& players = part == 0 ? state.params.encoder : state.params.decoder;
    auto& glayers = part == 0 ? result.grads.encoder : result.grads.decoder;
    auto& alayers = part == 0 ? state.sq_accum.encoder : state.sq_accum.decoder;
    for (std::size_t l = 0; l < players.size(); ++l) {
      alayers[l].W.array() = cfg_.rho * alayers[l].W.array() +
                             (1.0 - cfg_.rho) * glayers[l].W.array().square();
      alayers[l].b.array() = cfg_.rho * alayers[l].b.array() +
                             (1.0 - cfg_.rho) * glayers[l].b.array().square();
      players[l].W.array() -=
          lr * glayers[l].W.array() / (alayers[l].W.array() + cfg_.epsilon).sqrt();
      players[l].b.array() -=
          lr * glayers[l].b.array() / (alayers[l].b.array() + cfg_.epsilon).sqrt();
    }
  }
  ++state.iter;
  return result.report;
}

TrainResult Trainer::train(const Dataset& data, const std::string& checkpoint_dir,
                           const std::function<void(const HistoryRow&)>& progress) {
  Rng seeder(cfg_.seed);
  seeder.next_u64();  // init seed, consumed by init_state()
  Rng sampler(seeder.next_u64());

  TrainState state = init_state();
  const long total_iters =
      static_cast<long>(cfg_.stage1_iters) + static_cast<long>(cfg_.stage2_iters);

  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(total_iters));

  const auto save_to = [&](const std::string& name) {
    if (checkpoint_dir.empty()) return;
    fs::create_directories(checkpoint_dir);
    save_checkpoint((fs::path(checkpoint_dir) / name).string(), model_cfg_, state.params);
  };

  for (long iter = 0; iter < total_iters; ++iter) {
    const LossWeights w = stage_weights_at(iter);
    const bool with_style = iter >= cfg_.stage1_iters;
    const Batch batch = sample_pair_batch(data, sampler, with_style);

    HistoryRow row;
    row.iter = iter;
    row.lr = lr_at(iter, cfg_);
    try {
      row.report = train_step(state, batch, w);
    } catch (const numerical_error&) {
      save_to("aborted.opose");
      throw;
    }
    result.history.push_back(row);
    if (progress) progress(row);
    if (cfg_.checkpoint_every > 0 && (iter + 1) % cfg_.checkpoint_every == 0) {
      char name[48];
      std::snprintf(name, sizeof(name), "ckpt_%07ld.opose", iter + 1);
      save_to(name);
    }
  }
  save_to("model.opose");
  result.params = std::move(state.params);
  return result;
}

}  // namespace orbitpose
