// Command-line surface: synthesize datasets, train the orbit generator,
// export and compare orbits, and run the evaluation protocol.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "orbitpose/checkpoint.hpp"
#include "orbitpose/config.hpp"
#include "orbitpose/errors.hpp"
#include "orbitpose/eval.hpp"
#include "orbitpose/orbit_metric.hpp"
#include "orbitpose/toydata.hpp"
#include "orbitpose/trainer.hpp"

namespace fs = std::filesystem;
using namespace orbitpose;

namespace {

struct CommonOpts {
  std::uint64_t seed = 7;
  std::string config_path;
};

struct Configs {
  ModelConfig model;
  TrainerConfig trainer;
  DatasetSpec data;
};

Configs load_configs(const CommonOpts& opts) {
  Configs cfg;
  if (!opts.config_path.empty())
    apply_config(parse_config_file(opts.config_path), cfg.model, cfg.trainer, cfg.data);
  cfg.trainer.seed = opts.seed;
  cfg.data.seed = opts.seed;
  return cfg;
}

int run_synth(const CommonOpts& opts, const std::string& out_dir) {
  Configs cfg = load_configs(opts);
  build_dataset(cfg.data, out_dir);
  std::printf("wrote %d objects (K=%d, %dx%dx%d) to %s\n", cfg.data.n_objects,
              cfg.data.group.order, cfg.data.image_size, cfg.data.image_size,
              cfg.data.channels, out_dir.c_str());
  return 0;
}

int run_train(const CommonOpts& opts, const std::string& data_dir,
              const std::string& out_dir) {
  Configs cfg = load_configs(opts);
  const Dataset data = load_dataset(data_dir);
  cfg.model.image_size = data.image_size;
  cfg.model.channels = data.channels;
  cfg.model.group = data.group;

  Trainer trainer(cfg.model, cfg.trainer);
  const long total = cfg.trainer.stage1_iters + cfg.trainer.stage2_iters;
  const long report_every = std::max<long>(1, total / 50);
  TrainResult result = trainer.train(data, out_dir, [&](const HistoryRow& row) {
    if (row.iter % report_every == 0 || row.iter + 1 == total)
      std::printf("iter %6ld  lr %.3e  recon %.5f  radius %.5f  pair %.5f  total %.5f\n",
                  row.iter, row.lr, row.report.recon, row.report.radius, row.report.pair,
                  row.report.total);
  });
  write_history_csv((fs::path(out_dir) / "loss_history.csv").string(), result.history);
  std::printf("checkpoint: %s\n", (fs::path(out_dir) / "model.opose").c_str());
  return 0;
}

int run_orbit(const std::string& model_path, const std::string& data_dir, int object_id,
              int view_index, const std::string& out_csv, const std::string& out_svg) {
  const Checkpoint ckpt = load_checkpoint(model_path);
  const Dataset data = load_dataset(data_dir);
  for (const auto& seq : data.sequences) {
    if (seq.object_id != object_id) continue;
    if (view_index < 0 || view_index >= data.group.order)
      throw data_error("orbit: view index out of range");
    export_orbit(ckpt.config, ckpt.params, seq.views.col(view_index), out_csv, out_svg);
    std::printf("wrote %s\n", out_csv.c_str());
    return 0;
  }
  throw data_error("orbit: object " + std::to_string(object_id) + " not in dataset");
}

int run_compare(const std::string& ref_csv, const std::string& test_csv, bool symmetric) {
  const Orbit ref = read_orbit_csv(ref_csv);
  const Orbit test = read_orbit_csv(test_csv);
  const GroupParams group(ref.size());
  const PoseDifference diff = symmetric ? estimate_shift_symmetric(ref, test, group)
                                        : estimate_shift_directed(ref, test, group);
  std::printf("delta_steps %d\ndelta_angle_deg %.6f\npeak_score %.9g\nmargin %.9g\n",
              diff.delta_steps, diff.delta_angle * kDegPerRad, diff.peak_score,
              diff.margin);
  return 0;
}

int run_eval(const CommonOpts& opts, const std::string& model_path,
             const std::string& data_dir, const std::string& split,
             const std::string& reference, const std::string& out_dir) {
  const Checkpoint ckpt = load_checkpoint(model_path);
  const Dataset data = load_dataset(data_dir);
  ReferencePolicy policy;
  policy.seed = opts.seed;
  if (reference == "fixed")
    policy.kind = ReferencePolicy::kFixedView;
  else if (reference == "per_object")
    policy.kind = ReferencePolicy::kPerObject;
  else
    throw std::invalid_argument("eval: reference must be 'fixed' or 'per_object'");

  const EvalReport report = evaluate(ckpt.config, ckpt.params, data, split, policy);
  fs::create_directories(out_dir);
  write_eval_report_json((fs::path(out_dir) / "report.json").string(), report);
  write_confusion_csv((fs::path(out_dir) / "confusion.csv").string(), report);

  const double n = std::max<long>(1, report.modes.total());
  std::printf("accuracy-%d: %.4f over %zu views\n", report.k_order, report.accuracy,
              report.records.size());
  std::printf("error modes: near_correct %.3f  nearby %.3f  opposite %.3f  others %.3f\n",
              report.modes.near_correct / n, report.modes.nearby / n,
              report.modes.opposite / n, report.modes.others / n);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orbitpose: latent orbit generation and pose-difference estimation"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string data_dir, out_path, model_path, svg_path;
  std::string split = "held_out", reference = "fixed";
  std::string ref_csv, test_csv;
  int object_id = 0, view_index = 0;
  bool symmetric = false;

  auto* synth = app.add_subcommand("synth", "build a toy multi-view dataset");
  synth->add_option("--out", out_path, "output directory")->required();
  synth->add_option("--seed", opts.seed, "master seed");
  synth->add_option("--config", opts.config_path, "key=value config file");

  auto* train = app.add_subcommand("train", "train the orbit generator");
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--out", out_path, "checkpoint/history directory")->required();
  train->add_option("--seed", opts.seed, "master seed");
  train->add_option("--config", opts.config_path, "key=value config file");

  auto* orbit = app.add_subcommand("orbit", "export the orbit of one view");
  orbit->add_option("--model", model_path, "checkpoint path")->required();
  orbit->add_option("--data", data_dir, "dataset directory")->required();
  orbit->add_option("--object", object_id, "object id")->required();
  orbit->add_option("--view", view_index, "pose index in [0, K)");
  orbit->add_option("--out", out_path, "output CSV path")->required();
  orbit->add_option("--svg", svg_path, "optional SVG plot path");

  auto* compare = app.add_subcommand("compare", "estimate the shift between two orbits");
  compare->add_option("--ref", ref_csv, "reference orbit CSV")->required();
  compare->add_option("--test", test_csv, "test orbit CSV")->required();
  compare->add_flag("--symmetric", symmetric, "use the symmetric variant");

  auto* eval = app.add_subcommand("eval", "run the evaluation protocol");
  eval->add_option("--model", model_path, "checkpoint path")->required();
  eval->add_option("--data", data_dir, "dataset directory")->required();
  eval->add_option("--split", split, "train | held_out | style_shifted");
  eval->add_option("--reference", reference, "fixed | per_object");
  eval->add_option("--out", out_path, "report directory")->required();
  eval->add_option("--seed", opts.seed, "reference draw seed");
  eval->add_option("--config", opts.config_path, "key=value config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return run_synth(opts, out_path);
    if (train->parsed()) return run_train(opts, data_dir, out_path);
    if (orbit->parsed())
      return run_orbit(model_path, data_dir, object_id, view_index, out_path, svg_path);
    if (compare->parsed()) return run_compare(ref_csv, test_csv, symmetric);
    if (eval->parsed())
      return run_eval(opts, model_path, data_dir, split, reference, out_path);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const grid_mismatch_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const data_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const numerical_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
