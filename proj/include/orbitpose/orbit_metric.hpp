#pragma once

#include <string>
#include <vector>

#include "orbitpose/group.hpp"
#include "orbitpose/model.hpp"

namespace orbitpose {

enum class ProfileDirection { kForward, kBackward };

// All K directed comparison scores, one per cyclic shift.
struct ShiftProfile {
  std::vector<double> scores;
  ProfileDirection direction = ProfileDirection::kForward;
};

struct PoseDifference {
  int delta_steps = 0;      // in [0, K-1]
  double delta_angle = 0.0; // delta_steps * delta_theta
  double peak_score = 0.0;
  double margin = 0.0;      // peak minus runner-up, confidence signal
};

// Sum over k of <ref[k], test[(k + delta) mod K]>. Shifting the test orbit
// by delta positions equals rotating each of its elements by p^delta,
// because the orbit is generated by p.
double directed_score(const Orbit& ref, const Orbit& test, int delta);

// Forward profile scores[d] uses shift +d, backward uses -d mod K (the
// inverse powers).
ShiftProfile shift_profile(const Orbit& ref, const Orbit& test, ProfileDirection dir);

// Argmax of the forward profile; ties break toward the smallest shift.
// Rejects degenerate (near-zero radius) orbits.
PoseDifference estimate_shift_directed(const Orbit& ref, const Orbit& test,
                                       const GroupParams& group);

// min{argmax forward, argmax backward}; kept for completeness, the
// directed form is the default everywhere else.
PoseDifference estimate_shift_symmetric(const Orbit& ref, const Orbit& test,
                                        const GroupParams& group);

// theta_ref + delta_steps * delta_theta, wrapped into [0, 2*pi).
double gauge_absolute_pose(double theta_ref, const PoseDifference& diff,
                           const GroupParams& group);

// Orbit exchange format: CSV with header "k,x,y" and K rows.
void write_orbit_csv(const std::string& path, const Orbit& orbit);
Orbit read_orbit_csv(const std::string& path);

}  // namespace orbitpose
