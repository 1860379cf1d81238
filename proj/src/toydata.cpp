#include "orbitpose/toydata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "orbitpose/errors.hpp"
#include "orbitpose/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "dataset i/o assumes a little-endian host");

namespace orbitpose {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const Eigen::Vector3d kMarkerColorA(1.0, 0.08, 0.08);
const Eigen::Vector3d kMarkerColorB(0.08, 1.0, 0.08);
constexpr double kMinMarkerSeparation = kTwoPi / 6.0;  // 60 degrees
constexpr double kWorldHalfSpan = 1.5;                 // projection window

PointSpec make_point(double azimuth, double radial, double height, double radius,
                     const Eigen::Vector3d& color, bool marker) {
  PointSpec p;
  p.position =
      Eigen::Vector3d(radial * std::cos(azimuth), radial * std::sin(azimuth), height);
  p.color = color;
  p.radius = radius;
  p.marker = marker;
  return p;
}

}  // namespace

ToyObject synthesize_object(std::uint64_t seed, int complexity) {
  if (complexity < 3)
    throw std::invalid_argument("synthesize_object: complexity must be at least 3");
  Rng rng(seed);
  ToyObject obj;
  obj.seed = seed;
  obj.points.reserve(static_cast<std::size_t>(complexity) + 2);

  // Marker A anchors the object's zero azimuth; marker B sits at least 60
  // degrees away on either side. Both stay well off the rotation axis.
  obj.points.push_back(make_point(0.0, rng.uniform(0.6, 0.82), rng.uniform(-0.25, 0.25),
                                  rng.uniform(0.16, 0.22), kMarkerColorA, true));
  obj.points.push_back(make_point(
      rng.uniform(kMinMarkerSeparation, kTwoPi - kMinMarkerSeparation),
      rng.uniform(0.6, 0.82), rng.uniform(-0.25, 0.25), rng.uniform(0.16, 0.22),
      kMarkerColorB, true));

  for (int i = 0; i < complexity; ++i) {
    Eigen::Vector3d color;
    do {
      color = Eigen::Vector3d(rng.uniform(0.15, 0.95), rng.uniform(0.15, 0.95),
                              rng.uniform(0.15, 0.95));
    } while ((color - kMarkerColorA).norm() < 0.35 ||
             (color - kMarkerColorB).norm() < 0.35);
    obj.points.push_back(make_point(rng.uniform(0.0, kTwoPi), rng.uniform(0.1, 0.85),
                                    rng.uniform(-0.8, 0.8), rng.uniform(0.08, 0.2),
                                    color, false));
  }
  return obj;
}

ToyObject rotate_object(const ToyObject& obj, double angle) {
  if (!std::isfinite(angle))
    throw std::invalid_argument("rotate_object: angle must be finite");
  ToyObject rotated = obj;
  rotated.pose_offset = obj.pose_offset + angle;
  return rotated;
}

std::vector<double> marker_azimuths(const ToyObject& obj) {
  std::vector<double> azimuths;
  for (const auto& p : obj.points)
    if (p.marker) azimuths.push_back(wrap_angle(std::atan2(p.position.y(), p.position.x())));
  return azimuths;
}

std::vector<float> render(const ToyObject& obj, double theta, double elevation,
                          int size, int channels) {
  if (size < 1) throw std::invalid_argument("render: size must be positive");
  if (channels != 1 && channels != 3)
    throw std::invalid_argument("render: channels must be 1 or 3");

  const Rotation3 spin = make_generator_3d(theta + obj.pose_offset);
  const double ce = std::cos(elevation);
  const double se = std::sin(elevation);

  std::vector<float> pixels(static_cast<std::size_t>(size) * size * channels, 0.0f);
  std::vector<double> depth(static_cast<std::size_t>(size) * size,
                            std::numeric_limits<double>::infinity());
  const double scale = size / (2.0 * kWorldHalfSpan);

  for (const auto& point : obj.points) {
    const Eigen::Vector3d r = spin.apply(point.position);
    // Tilt about the x-axis; the camera looks along +y, smaller y is nearer.
    const Eigen::Vector3d q(r.x(), ce * r.y() - se * r.z(), se * r.y() + ce * r.z());
    const double u = (q.x() + kWorldHalfSpan) * scale;
    const double v = (kWorldHalfSpan - q.z()) * scale;
    const double pr = point.radius * scale;

    const int px_lo = std::max(0, static_cast<int>(std::floor(u - pr - 1.0)));
    const int px_hi = std::min(size - 1, static_cast<int>(std::ceil(u + pr + 1.0)));
    const int py_lo = std::max(0, static_cast<int>(std::floor(v - pr - 1.0)));
    const int py_hi = std::min(size - 1, static_cast<int>(std::ceil(v + pr + 1.0)));

    for (int py = py_lo; py <= py_hi; ++py) {
      for (int px = px_lo; px <= px_hi; ++px) {
        const double dx = (px + 0.5) - u;
        const double dy = (py + 0.5) - v;
        const double d = std::sqrt(dx * dx + dy * dy);
        // One-pixel linear edge falloff.
        double alpha = pr + 0.5 - d;
        if (alpha <= 0.0) continue;
        alpha = std::min(alpha, 1.0);

        const std::size_t cell = static_cast<std::size_t>(py) * size + px;
        if (q.y() >= depth[cell]) continue;
        if (alpha >= 0.5) depth[cell] = q.y();

        float* out = pixels.data() + cell * channels;
        if (channels == 3) {
          for (int ch = 0; ch < 3; ++ch)
            out[ch] = static_cast<float>(alpha * point.color(ch) +
                                         (1.0 - alpha) * out[ch]);
        } else {
          const double lum = point.color.mean();
          out[0] = static_cast<float>(alpha * lum + (1.0 - alpha) * out[0]);
        }
      }
    }
  }
  return pixels;
}

Eigen::MatrixXf render_views(const ToyObject& obj, const GroupParams& group,
                             double elevation, int size, int channels) {
  const int dim = size * size * channels;
  Eigen::MatrixXf views(dim, group.order);
  const std::vector<double> angles = pose_set(group);
  for (int k = 0; k < group.order; ++k) {
    const std::vector<float> img =
        render(obj, angles[static_cast<std::size_t>(k)], elevation, size, channels);
    views.col(k) = Eigen::Map<const Eigen::VectorXf>(img.data(), dim);
  }
  return views;
}

namespace {

constexpr char kViewMagic[5] = {'O', 'P', 'V', 'W', '1'};

void write_view_blob(const fs::path& path, const Eigen::MatrixXf& views, int size,
                     int channels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("dataset: cannot open " + path.string() + " for writing");
  out.write(kViewMagic, sizeof(kViewMagic));
  const std::uint32_t dims[4] = {static_cast<std::uint32_t>(views.cols()),
                                 static_cast<std::uint32_t>(size),
                                 static_cast<std::uint32_t>(size),
                                 static_cast<std::uint32_t>(channels)};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  for (Eigen::Index k = 0; k < views.cols(); ++k)
    out.write(reinterpret_cast<const char*>(views.col(k).data()),
              static_cast<std::streamsize>(views.rows() * sizeof(float)));
  if (!out) throw data_error("dataset: write to " + path.string() + " failed");
}

Eigen::MatrixXf read_view_blob(const fs::path& path, int expect_k, int expect_size,
                               int expect_channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("dataset: cannot open " + path.string());
  char magic[sizeof(kViewMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kViewMagic, sizeof(magic)) != 0)
    throw data_error("dataset: " + path.string() + " is not an OPVW1 blob");
  std::uint32_t dims[4] = {};
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw data_error("dataset: truncated header in " + path.string());
  if (static_cast<int>(dims[0]) != expect_k || static_cast<int>(dims[1]) != expect_size ||
      static_cast<int>(dims[2]) != expect_size ||
      static_cast<int>(dims[3]) != expect_channels)
    throw data_error("dataset: " + path.string() + " dims disagree with the manifest");
  const int dim = expect_size * expect_size * expect_channels;
  Eigen::MatrixXf views(dim, expect_k);
  for (int k = 0; k < expect_k; ++k) {
    in.read(reinterpret_cast<char*>(views.col(k).data()),
            static_cast<std::streamsize>(dim * sizeof(float)));
    if (!in) throw data_error("dataset: truncated pixels in " + path.string());
  }
  return views;
}

std::string split_of(int id, int n_objects) {
  const int n_held = n_objects / 10;
  const int n_style = n_objects / 10;
  const int n_train = n_objects - n_held - n_style;
  if (id < n_train) return "train";
  if (id < n_train + n_held) return "held_out";
  return "style_shifted";
}

void perturb_body_colors(ToyObject& obj, Rng& rng) {
  for (auto& p : obj.points) {
    if (p.marker) continue;
    for (int ch = 0; ch < 3; ++ch)
      p.color(ch) = std::clamp(p.color(ch) + rng.uniform(-0.3, 0.3), 0.05, 1.0);
  }
}

// The asymmetry guarantee: no two grid poses of an object may render to the
// same image.
void check_distinct_poses(const Eigen::MatrixXf& views, int object_id) {
  for (Eigen::Index a = 0; a < views.cols(); ++a)
    for (Eigen::Index b = a + 1; b < views.cols(); ++b)
      if (views.col(a) == views.col(b))
        throw numerical_error("dataset: object " + std::to_string(object_id) +
                              " renders identically at poses " + std::to_string(a) +
                              " and " + std::to_string(b));
}

}  // namespace

void build_dataset(const DatasetSpec& spec, const std::string& out_dir) {
  if (spec.n_objects < 2)
    throw std::invalid_argument("build_dataset: need at least 2 objects");
  if (spec.elevations_deg.empty())
    throw std::invalid_argument("build_dataset: need at least one elevation");

  fs::create_directories(out_dir);
  Rng master(spec.seed);

  json manifest;
  manifest["format"] = "OPVW1";
  manifest["seed"] = spec.seed;
  manifest["k_order"] = spec.group.order;
  manifest["image_size"] = spec.image_size;
  manifest["channels"] = spec.channels;
  manifest["complexity"] = spec.complexity;
  manifest["elevations_deg"] = spec.elevations_deg;
  manifest["objects"] = json::array();

  for (int id = 0; id < spec.n_objects; ++id) {
    const std::uint64_t obj_seed = master.next_u64();
    ToyObject obj = synthesize_object(obj_seed, spec.complexity);
    obj.id = id;
    const std::string split = split_of(id, spec.n_objects);
    if (split == "style_shifted") {
      Rng style_rng = Rng(obj_seed).fork(0x5749u);
      perturb_body_colors(obj, style_rng);
    }

    json entry;
    entry["id"] = id;
    entry["seed"] = obj_seed;
    entry["split"] = split;
    entry["views"] = json::array();

    for (std::size_t e = 0; e < spec.elevations_deg.size(); ++e) {
      const double elev_rad = spec.elevations_deg[e] / kDegPerRad;
      const Eigen::MatrixXf views =
          render_views(obj, spec.group, elev_rad, spec.image_size, spec.channels);
      check_distinct_poses(views, id);

      char name[64];
      std::snprintf(name, sizeof(name), "obj%04d_e%02zu.opvw", id, e);
      write_view_blob(fs::path(out_dir) / name, views, spec.image_size, spec.channels);

      json view_entry;
      view_entry["elevation_deg"] = spec.elevations_deg[e];
      view_entry["file"] = name;
      entry["views"].push_back(view_entry);
    }
    manifest["objects"].push_back(entry);
  }

  std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::trunc);
  if (!out) throw data_error("dataset: cannot write manifest in " + out_dir);
  out << manifest.dump(2) << "\n";
}

const std::vector<std::size_t>& Dataset::split_indices(const std::string& split) const {
  if (split == "train") return train;
  if (split == "held_out") return held_out;
  if (split == "style_shifted") return style_shifted;
  throw std::invalid_argument("dataset: unknown split '" + split + "'");
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw data_error("dataset: cannot open manifest in " + dir);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw data_error("dataset: malformed manifest in " + dir + ": " + e.what());
  }
  if (manifest.value("format", "") != "OPVW1")
    throw data_error("dataset: manifest in " + dir + " has an unknown format tag");

  Dataset data;
  data.group = GroupParams(manifest.at("k_order").get<int>());
  data.image_size = manifest.at("image_size").get<int>();
  data.channels = manifest.at("channels").get<int>();

  for (const auto& entry : manifest.at("objects")) {
    const int id = entry.at("id").get<int>();
    const std::string split = entry.at("split").get<std::string>();
    for (const auto& view_entry : entry.at("views")) {
      ObjectViews seq;
      seq.object_id = id;
      seq.split = split;
      seq.elevation = view_entry.at("elevation_deg").get<double>() / kDegPerRad;
      const Eigen::MatrixXf raw =
          read_view_blob(fs::path(dir) / view_entry.at("file").get<std::string>(),
                         data.group.order, data.image_size, data.channels);
      seq.views = raw.cast<double>();
      const std::size_t index = data.sequences.size();
      data.sequences.push_back(std::move(seq));
      if (split == "train")
        data.train.push_back(index);
      else if (split == "held_out")
        data.held_out.push_back(index);
      else if (split == "style_shifted")
        data.style_shifted.push_back(index);
      else
        throw data_error("dataset: object " + std::to_string(id) +
                         " has unknown split '" + split + "'");
    }
  }
  if (data.sequences.empty()) throw data_error("dataset: " + dir + " holds no objects");
  return data;
}

std::vector<ToyView> views_of_split(const Dataset& data, const std::string& split) {
  std::vector<ToyView> views;
  const std::vector<double> angles = pose_set(data.group);
  for (std::size_t index : data.split_indices(split)) {
    const ObjectViews& seq = data.sequences[index];
    for (int k = 0; k < data.group.order; ++k) {
      ToyView view;
      view.image = seq.views.col(k);
      view.theta = angles[static_cast<std::size_t>(k)];
      view.elevation = seq.elevation;
      view.object_id = seq.object_id;
      view.split = seq.split;
      views.push_back(std::move(view));
    }
  }
  return views;
}

}  // namespace orbitpose
