#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "orbitpose/group.hpp"

namespace orbitpose {

struct PointSpec {
  Eigen::Vector3d position;  // inside [-1, 1]^3
  Eigen::Vector3d color;     // rgb in [0, 1]
  double radius = 0.1;       // object units
  bool marker = false;
};

// A colored point cloud standing in for a CAD model. pose_offset carries
// accumulated group rotation so that rotating an object and rendering it
// commutes with rendering at a shifted angle, bit for bit.
struct ToyObject {
  int id = 0;
  std::uint64_t seed = 0;
  std::vector<PointSpec> points;
  double pose_offset = 0.0;
};

// Deterministic object with `complexity` body points plus two uniquely
// colored marker points placed at azimuths at least 60 degrees apart, so no
// two grid poses look alike.
ToyObject synthesize_object(std::uint64_t seed, int complexity);

// The group action on objects.
ToyObject rotate_object(const ToyObject& obj, double angle);

// Azimuths of the marker points (radians, in [0, 2*pi)), synthesis frame.
std::vector<double> marker_azimuths(const ToyObject& obj);

// Rotates by theta (plus the object's offset) about z, tilts by elevation
// about x, projects orthographically and splats each point as a filled
// disc with nearer-depth-wins occlusion. Returns H*W*C floats in [0, 1],
// row-major. channels must be 1 (luminance) or 3.
std::vector<float> render(const ToyObject& obj, double theta, double elevation,
                          int size, int channels = 3);

// All K azimuth views at one elevation, one column per pose, D = H*W*C.
Eigen::MatrixXf render_views(const ToyObject& obj, const GroupParams& group,
                             double elevation, int size, int channels);

struct DatasetSpec {
  int n_objects = 40;
  GroupParams group{36};
  std::vector<double> elevations_deg = {20.0};
  int image_size = 32;
  int channels = 3;
  int complexity = 8;
  std::uint64_t seed = 7;
};

// Renders every object at all K poses per elevation and writes one OPVW1
// blob per (object, elevation) plus manifest.json. Objects are split
// 80/10/10 by id into train / held-out / style-shifted; style objects get
// their body-point colors perturbed (same geometry).
void build_dataset(const DatasetSpec& spec, const std::string& out_dir);

// One object's full K-view sequence at one elevation, as float64 columns.
struct ObjectViews {
  int object_id = 0;
  std::string split;
  double elevation = 0.0;  // radians
  Eigen::MatrixXd views;   // D x K
};

struct Dataset {
  GroupParams group{36};
  int image_size = 0;
  int channels = 0;
  std::vector<ObjectViews> sequences;
  std::vector<std::size_t> train;          // indices into sequences
  std::vector<std::size_t> held_out;
  std::vector<std::size_t> style_shifted;

  int input_dim() const { return image_size * image_size * channels; }
  const std::vector<std::size_t>& split_indices(const std::string& split) const;
};

Dataset load_dataset(const std::string& dir);

// A single labeled view, materialized for evaluation.
struct ToyView {
  Eigen::VectorXd image;
  double theta = 0.0;
  double elevation = 0.0;
  int object_id = 0;
  std::string split;
};

std::vector<ToyView> views_of_split(const Dataset& data, const std::string& split);

}  // namespace orbitpose
