#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "orbitpose/model.hpp"
#include "orbitpose/orbit_metric.hpp"
#include "orbitpose/toydata.hpp"

namespace orbitpose {

// Pose-error decomposition. Boundaries: below 15 degrees near-correct,
// 15..30 inclusive nearby, above 165 opposite, everything else others.
enum class ErrorMode { kNearCorrect, kNearby, kOpposite, kOthers };
const char* to_string(ErrorMode mode);

// Minimal angular distance, degrees in [0, 180].
double angular_error_deg(double theta_pred, double theta_gt);

// Nearest of the K bins, boundaries at half steps.
int pose_bin(double theta, const GroupParams& group);

ErrorMode classify_error_mode(double err_deg);

struct SampleRecord {
  int object_id = 0;
  double theta_gt_deg = 0.0;
  double theta_pred_deg = 0.0;
  double err_deg = 0.0;
  double margin = 0.0;
};

// Fraction of records whose predicted bin equals the ground-truth bin.
double accuracy_k(const std::vector<SampleRecord>& records, const GroupParams& group);

struct ModeCounts {
  long near_correct = 0;
  long nearby = 0;
  long opposite = 0;
  long others = 0;
  long total() const { return near_correct + nearby + opposite + others; }
};

struct EvalReport {
  int k_order = 0;
  double accuracy = 0.0;
  ModeCounts modes;
  std::vector<SampleRecord> records;
  Eigen::MatrixXi confusion;  // row = ground-truth bin, column = predicted
  double theta_ref_deg = 0.0;
  int reference_object = -1;
};

struct ReferencePolicy {
  enum Kind { kFixedView, kPerObject } kind = kFixedView;
  std::uint64_t seed = 0;
};

// Maps a labeled view to its orbit. The default source encodes the image
// and generates the orbit from the pose units; tests may substitute an
// analytic source that bypasses the encoder.
using OrbitSource = std::function<Orbit(const ToyView&)>;

// For every view of the split: build its orbit, compare against the
// reference orbit, gauge the reference pose by the estimated shift, and
// aggregate the report. The fixed policy draws one labeled reference view
// from the train split; the per-object policy gauges each object with a
// seeded view of itself.
EvalReport evaluate_with(const OrbitSource& source, const Dataset& data,
                         const std::string& split, const ReferencePolicy& policy,
                         const GroupParams& group);

EvalReport evaluate(const ModelConfig& cfg, const ModelParams& params,
                    const Dataset& data, const std::string& split,
                    const ReferencePolicy& policy);

void write_eval_report_json(const std::string& path, const EvalReport& report);
void write_confusion_csv(const std::string& path, const EvalReport& report);

// SVG of the orbit: dashed circle trace, step-indexed points, the initial
// point highlighted. Exposed separately so the geometry is testable.
std::string orbit_svg(const Orbit& orbit);

// Encodes the image, writes the K-point orbit CSV and, when svg_path is
// nonempty, the plot.
void export_orbit(const ModelConfig& cfg, const ModelParams& params,
                  const Eigen::VectorXd& image, const std::string& csv_path,
                  const std::string& svg_path);

}  // namespace orbitpose
