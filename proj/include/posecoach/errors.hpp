// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace posecoach {

// Malformed input: schema violations, missing joints, bad config values.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input is well-formed but geometrically unusable (zero torso, too few
// visible joints, nothing to compare).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace posecoach
