#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "orbitpose/model.hpp"
#include "orbitpose/objective.hpp"
#include "orbitpose/rng.hpp"
#include "orbitpose/toydata.hpp"

namespace orbitpose {

struct TrainerConfig {
  double lr0 = 1e-4;
  double gamma = 0.95;
  int decay_every = 2500;
  int batch_size = 16;   // N_b
  int stage1_iters = 10000;
  int stage2_iters = 5000;
  LossWeights stage1_weights{100.0, 1.0, 3.0};
  LossWeights stage2_weights{100.0, 1.0, 5.0};
  std::uint64_t seed = 1;
  double rho = 0.9;       // squared-gradient smoothing
  double epsilon = 1e-8;
  int n_threads = 0;      // 0 = hardware concurrency
  int checkpoint_every = 0;  // 0 = final checkpoint only
  bool normalize_recon_by_pixels = true;
  void validate() const;
};

// Parameters, per-tensor squared-gradient accumulators and the step count.
struct TrainState {
  ModelParams params;
  ModelParams sq_accum;
  long iter = 0;
};

// lr0 * gamma^floor(iter / decay_every).
double lr_at(long iter, const TrainerConfig& cfg);

struct HistoryRow {
  long iter = 0;
  double lr = 0.0;
  LossReport report;
};

struct TrainResult {
  ModelParams params;
  std::vector<HistoryRow> history;
};

// Columns: iter, lr, recon, radius, pair, total.
void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history);

// Two-branch shared-parameter training. The batch gradient is computed as
// column-blocked matrix products whose per-sample sums run in pair-index
// order, so checkpoints are bit-identical across runs for a fixed thread
// count.
class Trainer {
 public:
  Trainer(const ModelConfig& model_cfg, const TrainerConfig& cfg);

  // Seeded initial parameters and zeroed accumulators.
  TrainState init_state() const;

  // N_b same-object pairs at independently drawn grid poses; with_style
  // additionally draws N_b constraint-only pairs from the style split.
  Batch sample_pair_batch(const Dataset& data, Rng& rng, bool with_style) const;

  // Forward both branches, swap pose units, generate orbits, decode both
  // K-sequences, backpropagate, apply the scaled-gradient update.
  LossReport train_step(TrainState& state, const Batch& batch, const LossWeights& w);

  // Stage 1 then stage 2; the style split feeds only the latent constraints
  // of stage 2. Writes checkpoints under checkpoint_dir when nonempty.
  TrainResult train(const Dataset& data, const std::string& checkpoint_dir = "",
                    const std::function<void(const HistoryRow&)>& progress = nullptr);

  LossWeights stage_weights_at(long iter) const;
  const ModelConfig& model_config() const { return model_cfg_; }
  const TrainerConfig& config() const { return cfg_; }

 private:
  ModelConfig model_cfg_;
  TrainerConfig cfg_;
  LatentGenerator gen_;
};

}  // namespace orbitpose
