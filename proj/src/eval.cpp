#include "orbitpose/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "orbitpose/errors.hpp"
#include "orbitpose/rng.hpp"

namespace orbitpose {

using nlohmann::json;

const char* to_string(ErrorMode mode) {
  switch (mode) {
    case ErrorMode::kNearCorrect: return "near_correct";
    case ErrorMode::kNearby: return "nearby";
    case ErrorMode::kOpposite: return "opposite";
    case ErrorMode::kOthers: return "others";
  }
  return "unknown";
}

double angular_error_deg(double theta_pred, double theta_gt) {
  if (!std::isfinite(theta_pred) || !std::isfinite(theta_gt))
    throw std::invalid_argument("angular_error_deg: angles must be finite");
  double d = std::fmod((theta_pred - theta_gt) * kDegPerRad, 360.0);
  if (d < 0.0) d += 360.0;
  return std::min(d, 360.0 - d);
}

int pose_bin(double theta, const GroupParams& group) {
  const double wrapped = wrap_angle(theta);
  return static_cast<int>(std::llround(wrapped / group.delta_theta()) % group.order);
}

ErrorMode classify_error_mode(double err_deg) {
  if (!(err_deg >= 0.0 && err_deg <= 180.0))
    throw std::invalid_argument("classify_error_mode: err must lie in [0, 180]");
  if (err_deg < 15.0) return ErrorMode::kNearCorrect;
  if (err_deg <= 30.0) return ErrorMode::kNearby;
  if (err_deg > 165.0) return ErrorMode::kOpposite;
  return ErrorMode::kOthers;
}

double accuracy_k(const std::vector<SampleRecord>& records, const GroupParams& group) {
  if (records.empty()) throw std::invalid_argument("accuracy_k: no records");
  long hits = 0;
  for (const auto& r : records) {
    const int gt = pose_bin(r.theta_gt_deg / kDegPerRad, group);
    const int pred = pose_bin(r.theta_pred_deg / kDegPerRad, group);
    if (gt == pred) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

namespace {

ToyView seeded_reference_view(const Dataset& data, const std::vector<std::size_t>& pool,
                              Rng& rng) {
  const ObjectViews& seq = data.sequences[pool[rng.below(pool.size())]];
  const int k_ref = static_cast<int>(rng.below(static_cast<std::uint64_t>(data.group.order)));
  ToyView view;
  view.image = seq.views.col(k_ref);
  view.theta = k_ref * data.group.delta_theta();
  view.elevation = seq.elevation;
  view.object_id = seq.object_id;
  view.split = seq.split;
  return view;
}

}  // namespace

EvalReport evaluate_with(const OrbitSource& source, const Dataset& data,
                         const std::string& split, const ReferencePolicy& policy,
                         const GroupParams& group) {
  const std::vector<ToyView> views = views_of_split(data, split);
  if (views.empty()) throw data_error("evaluate: split '" + split + "' is empty");
  if (group.order != data.group.order)
    throw data_error("evaluate: group order differs between model and dataset");

  EvalReport report;
  report.k_order = group.order;
  report.confusion = Eigen::MatrixXi::Zero(group.order, group.order);

  ToyView fixed_ref;
  Orbit fixed_ref_orbit;
  if (policy.kind == ReferencePolicy::kFixedView) {
    if (data.train.empty())
      throw data_error("evaluate: fixed reference policy needs a train split");
    Rng rng(policy.seed);
    fixed_ref = seeded_reference_view(data, data.train, rng);
    fixed_ref_orbit = source(fixed_ref);
    report.theta_ref_deg = fixed_ref.theta * kDegPerRad;
    report.reference_object = fixed_ref.object_id;
  }

  // Per-object references: one seeded labeled view of each test object.
  std::map<int, std::pair<double, Orbit>> per_object;
  if (policy.kind == ReferencePolicy::kPerObject) {
    Rng rng(policy.seed);
    for (std::size_t index : data.split_indices(split)) {
      const ObjectViews& seq = data.sequences[index];
      if (per_object.count(seq.object_id)) continue;
      const int k_ref =
          static_cast<int>(rng.below(static_cast<std::uint64_t>(group.order)));
      ToyView ref;
      ref.image = seq.views.col(k_ref);
      ref.theta = k_ref * group.delta_theta();
      ref.elevation = seq.elevation;
      ref.object_id = seq.object_id;
      ref.split = seq.split;
      per_object.emplace(seq.object_id, std::make_pair(ref.theta, source(ref)));
    }
    report.reference_object = -1;
  }

  for (const auto& view : views) {
    const Orbit orbit = source(view);
    double theta_ref = 0.0;
    const Orbit* ref_orbit = nullptr;
    if (policy.kind == ReferencePolicy::kFixedView) {
      theta_ref = fixed_ref.theta;
      ref_orbit = &fixed_ref_orbit;
    } else {
      const auto& entry = per_object.at(view.object_id);
      theta_ref = entry.first;
      ref_orbit = &entry.second;
    }

    // The directed profile peaks at the step count that carries the second
    // orbit onto the first, so probing with the test orbit first makes the
    // gauge land on the test pose.
    const PoseDifference diff = estimate_shift_directed(orbit, *ref_orbit, group);
    const double theta_pred = gauge_absolute_pose(theta_ref, diff, group);

    SampleRecord record;
    record.object_id = view.object_id;
    record.theta_gt_deg = view.theta * kDegPerRad;
    record.theta_pred_deg = theta_pred * kDegPerRad;
    record.err_deg = angular_error_deg(theta_pred, view.theta);
    record.margin = diff.margin;
    report.records.push_back(record);

    switch (classify_error_mode(record.err_deg)) {
      case ErrorMode::kNearCorrect: ++report.modes.near_correct; break;
      case ErrorMode::kNearby: ++report.modes.nearby; break;
      case ErrorMode::kOpposite: ++report.modes.opposite; break;
      case ErrorMode::kOthers: ++report.modes.others; break;
    }
    ++report.confusion(pose_bin(view.theta, group), pose_bin(theta_pred, group));
  }
  report.accuracy = accuracy_k(report.records, group);
  return report;
}

EvalReport evaluate(const ModelConfig& cfg, const ModelParams& params,
                    const Dataset& data, const std::string& split,
                    const ReferencePolicy& policy) {
  check_shapes(params, cfg);
  if (data.input_dim() != cfg.input_dim())
    throw data_error("evaluate: dataset image dims do not match the checkpoint");
  const LatentGenerator gen(cfg.group);
  const OrbitSource source = [&](const ToyView& view) {
    return generate_orbit(encode(view.image, params, cfg).f_pose, gen);
  };
  return evaluate_with(source, data, split, policy, cfg.group);
}

void write_eval_report_json(const std::string& path, const EvalReport& report) {
  json j;
  j["k_order"] = report.k_order;
  j["accuracy_k"] = report.accuracy;
  j["n_samples"] = report.records.size();
  j["reference"] = {{"theta_deg", report.theta_ref_deg},
                    {"object_id", report.reference_object}};
  const double n = std::max<long>(1, report.modes.total());
  j["error_modes"] = {
      {"near_correct", {{"count", report.modes.near_correct},
                        {"fraction", report.modes.near_correct / n}}},
      {"nearby", {{"count", report.modes.nearby}, {"fraction", report.modes.nearby / n}}},
      {"opposite",
       {{"count", report.modes.opposite}, {"fraction", report.modes.opposite / n}}},
      {"others", {{"count", report.modes.others}, {"fraction", report.modes.others / n}}}};
  j["records"] = json::array();
  for (const auto& r : report.records) {
    j["records"].push_back({{"object_id", r.object_id},
                            {"theta_gt_deg", r.theta_gt_deg},
                            {"theta_pred_deg", r.theta_pred_deg},
                            {"err_deg", r.err_deg},
                            {"margin", r.margin}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("eval report: cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
}

void write_confusion_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("confusion csv: cannot open " + path + " for writing");
  for (int r = 0; r < report.confusion.rows(); ++r) {
    for (int c = 0; c < report.confusion.cols(); ++c) {
      if (c) out << ',';
      out << report.confusion(r, c);
    }
    out << '\n';
  }
}

std::string orbit_svg(const Orbit& orbit) {
  constexpr double kSide = 400.0;
  constexpr double kCenter = kSide / 2.0;
  constexpr double kPlotRadius = 160.0;
  double radius = 0.0;
  for (const auto& e : orbit.elements) radius = std::max(radius, e.norm());
  const double scale = radius > 1e-12 ? kPlotRadius / radius : 0.0;

  std::string svg;
  char buf[256];
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"400\" height=\"400\" "
         "viewBox=\"0 0 400 400\">\n";
  svg += "  <rect width=\"400\" height=\"400\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "  <circle cx=\"%g\" cy=\"%g\" r=\"%g\" fill=\"none\" "
                "stroke=\"#888\" stroke-dasharray=\"6 4\"/>\n",
                kCenter, kCenter, radius > 1e-12 ? kPlotRadius : 1.0);
  svg += buf;
  for (int k = 0; k < orbit.size(); ++k) {
    const auto& e = orbit.elements[static_cast<std::size_t>(k)];
    const double cx = kCenter + scale * e.x();
    const double cy = kCenter - scale * e.y();
    std::snprintf(buf, sizeof(buf),
                  "  <circle cx=\"%.2f\" cy=\"%.2f\" r=\"%g\" fill=\"%s\"/>\n", cx, cy,
                  k == 0 ? 7.0 : 4.0, k == 0 ? "#d62728" : "#1f77b4");
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "  <text x=\"%.2f\" y=\"%.2f\" font-size=\"9\" fill=\"#333\">%d</text>\n",
                  cx + 6.0, cy - 4.0, k);
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

void export_orbit(const ModelConfig& cfg, const ModelParams& params,
                  const Eigen::VectorXd& image, const std::string& csv_path,
                  const std::string& svg_path) {
  const LatentCode code = encode(image, params, cfg);
  const Orbit orbit = generate_orbit(code.f_pose, cfg.group);
  write_orbit_csv(csv_path, orbit);
  if (!svg_path.empty()) {
    std::ofstream out(svg_path, std::ios::trunc);
    if (!out) throw data_error("orbit svg: cannot open " + svg_path + " for writing");
    out << orbit_svg(orbit);
  }
}

}  // namespace orbitpose
