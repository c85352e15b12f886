#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seaterra/tensor.hpp"

namespace seaterra {

// One timestamped image. Pixels live in [0,1].
struct Frame {
  int64_t id = 0;
  int64_t t = 0;
  Tensor3 pixels;
};

enum class Interest : int { Low = 0, Medium = 1, High = 2 };

std::string interest_name(Interest i);
Interest interest_from_name(const std::string& s);

// Per-frame ground-truth annotation.
struct LabelTrack {
  std::vector<int> terrain;
  std::vector<Interest> interest;

  size_t size() const { return terrain.size(); }
};

}  // namespace seaterra
