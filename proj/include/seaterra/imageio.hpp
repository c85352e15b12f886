#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "seaterra/frame.hpp"

namespace seaterra {

// Dataset-level failures (missing files, bad dimensions, undecodable
// images). The message always names the offending path.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Loads all files matching `pattern` (a glob like "img_*.png") in
// `directory`, sorted by the numeric index embedded in the filename
// (falling back to lexicographic order). Grayscale images are
// replicated to 3 channels. t is assigned 0,1,2,... in sorted order.
std::vector<Frame> load_sequence(const std::string& directory,
                                 const std::string& pattern = "*.png");

// Bilinear resize; id and t preserved, output clamped to [0,1].
Frame resize_frame(const Frame& frame, int target_h, int target_w);

// 8-bit PNG round trip for a single [0,1] tensor (1 or 3 channels on
// read, always written as RGB).
Tensor3 read_png(const std::string& path);
void write_png(const std::string& path, const Tensor3& image);

// labels CSV: header "frame_id,terrain,interest", one row per frame.
void write_labels_csv(const std::string& path, const LabelTrack& labels);
LabelTrack read_labels_csv(const std::string& path);

}  // namespace seaterra
