#include "orbitpose/orbit_metric.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "orbitpose/errors.hpp"

namespace orbitpose {

namespace {

constexpr double kDegenerateRadius = 1e-6;

void check_lengths(const Orbit& ref, const Orbit& test) {
  if (ref.size() == 0 || ref.size() != test.size())
    throw std::invalid_argument("orbit metric: orbit lengths differ (" +
                                std::to_string(ref.size()) + " vs " +
                                std::to_string(test.size()) + ")");
}

void check_nondegenerate(const Orbit& orbit, const char* which) {
  if (orbit.elements.front().norm() < kDegenerateRadius)
    throw numerical_error(std::string("orbit metric: ") + which +
                          " orbit has near-zero radius; shifts are meaningless");
}

// Argmax with ties broken toward the smallest index, plus the runner-up
// for the margin.
PoseDifference argmax_profile(const std::vector<double>& scores,
                              const GroupParams& group) {
  int best = 0;
  for (int d = 1; d < static_cast<int>(scores.size()); ++d)
    if (scores[static_cast<std::size_t>(d)] > scores[static_cast<std::size_t>(best)])
      best = d;
  double runner_up = -std::numeric_limits<double>::infinity();
  for (int d = 0; d < static_cast<int>(scores.size()); ++d)
    if (d != best) runner_up = std::max(runner_up, scores[static_cast<std::size_t>(d)]);

  PoseDifference diff;
  diff.delta_steps = best;
  diff.delta_angle = best * group.delta_theta();
  diff.peak_score = scores[static_cast<std::size_t>(best)];
  diff.margin = scores.size() > 1 ? diff.peak_score - runner_up : 0.0;
  return diff;
}

}  // namespace

double directed_score(const Orbit& ref, const Orbit& test, int delta) {
  check_lengths(ref, test);
  const int k_order = ref.size();
  if (delta < 0 || delta >= k_order)
    throw std::invalid_argument("directed_score: delta out of range");
  double score = 0.0;
  for (int k = 0; k < k_order; ++k)
    score += ref.elements[static_cast<std::size_t>(k)].dot(
        test.elements[static_cast<std::size_t>((k + delta) % k_order)]);
  return score;
}

ShiftProfile shift_profile(const Orbit& ref, const Orbit& test, ProfileDirection dir) {
  check_lengths(ref, test);
  const int k_order = ref.size();
  ShiftProfile profile;
  profile.direction = dir;
  profile.scores.resize(static_cast<std::size_t>(k_order));
  for (int d = 0; d < k_order; ++d) {
    const int shift = dir == ProfileDirection::kForward ? d : (k_order - d) % k_order;
    profile.scores[static_cast<std::size_t>(d)] = directed_score(ref, test, shift);
  }
  return profile;
}

PoseDifference estimate_shift_directed(const Orbit& ref, const Orbit& test,
                                       const GroupParams& group) {
  check_lengths(ref, test);
  if (ref.size() != group.order)
    throw std::invalid_argument("estimate_shift_directed: orbit length differs from K");
  check_nondegenerate(ref, "reference");
  check_nondegenerate(test, "test");
  return argmax_profile(shift_profile(ref, test, ProfileDirection::kForward).scores,
                        group);
}

PoseDifference estimate_shift_symmetric(const Orbit& ref, const Orbit& test,
                                        const GroupParams& group) {
  check_lengths(ref, test);
  if (ref.size() != group.order)
    throw std::invalid_argument("estimate_shift_symmetric: orbit length differs from K");
  check_nondegenerate(ref, "reference");
  check_nondegenerate(test, "test");
  const PoseDifference fwd = argmax_profile(
      shift_profile(ref, test, ProfileDirection::kForward).scores, group);
  const PoseDifference bwd = argmax_profile(
      shift_profile(ref, test, ProfileDirection::kBackward).scores, group);
  return fwd.delta_steps <= bwd.delta_steps ? fwd : bwd;
}

double gauge_absolute_pose(double theta_ref, const PoseDifference& diff,
                           const GroupParams& group) {
  if (!std::isfinite(theta_ref))
    throw std::invalid_argument("gauge_absolute_pose: theta_ref must be finite");
  return wrap_angle(theta_ref + diff.delta_steps * group.delta_theta());
}

void write_orbit_csv(const std::string& path, const Orbit& orbit) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw data_error("orbit csv: cannot open " + path + " for writing");
  out << "k,x,y\n";
  char line[96];
  for (int k = 0; k < orbit.size(); ++k) {
    const auto& e = orbit.elements[static_cast<std::size_t>(k)];
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g\n", k, e.x(), e.y());
    out << line;
  }
  if (!out) throw data_error("orbit csv: write to " + path + " failed");
}

Orbit read_orbit_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("orbit csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("k,x,y", 0) != 0)
    throw data_error("orbit csv: " + path + " is missing the k,x,y header");
  Orbit orbit;
  int expected_k = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    int k = 0;
    double x = 0.0, y = 0.0;
    try {
      if (!std::getline(row, field, ',')) throw data_error("");
      k = std::stoi(field);
      if (!std::getline(row, field, ',')) throw data_error("");
      x = std::stod(field);
      if (!std::getline(row, field, ',')) throw data_error("");
      y = std::stod(field);
    } catch (const std::exception&) {
      throw data_error("orbit csv: malformed row '" + line + "' in " + path);
    }
    if (k != expected_k)
      throw data_error("orbit csv: rows out of order in " + path);
    ++expected_k;
    orbit.elements.emplace_back(x, y);
  }
  if (orbit.elements.empty()) throw data_error("orbit csv: " + path + " has no rows");
  return orbit;
}

}  // namespace orbitpose
