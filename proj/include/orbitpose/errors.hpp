#pragma once

#include <stdexcept>
#include <string>

namespace orbitpose {

// An angle pair that does not sit on the discrete pose grid (off by more
// than a quarter step after rounding).
struct grid_mismatch_error : std::runtime_error {
  explicit grid_mismatch_error(const std::string& what) : std::runtime_error(what) {}
};

// Corrupt or inconsistent files: bad magic, truncated blobs, shape
// mismatches between a checkpoint and a dataset.
struct data_error : std::runtime_error {
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finite ones are required, or inputs on which the
// requested computation is meaningless (e.g. a collapsed orbit).
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace orbitpose
