#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seaterra/frame.hpp"

namespace seaterra {

// StripesWarm shares the stripe geometry (and grayscale appearance) of
// Stripes but carries a warm equal-luminance tint, so the two kinds are
// only separable by color-aware features.
enum class TextureKind { Stripes, StripesWarm, Checker, Blotches, Noise };

TextureKind texture_from_name(const std::string& name);
std::string texture_name(TextureKind k);

struct SynthSpec {
  struct Segment {
    TextureKind texture;
    int frames;
  };
  enum class Blob { BrightDisk, DarkSquare };
  struct Anomaly {
    int64_t frame;
    Blob kind = Blob::BrightDisk;
  };
  std::vector<Segment> segments;
  std::vector<Anomaly> anomalies;
  int height = 64;
  int width = 64;
  double noise_level = 0.05;
  uint64_t seed = 0;
};

// Procedural mission generator standing in for recorded datasets.
// Deterministic: identical specs (seed included) give bit-identical
// frames. Anomaly frames get a high-contrast blob and interest=high.
std::pair<std::vector<Frame>, LabelTrack> generate_synthetic_mission(
    const SynthSpec& spec);

// Writes frames as img_%05d.png plus labels.csv into `directory`.
void export_mission(const std::string& directory,
                    const std::vector<Frame>& frames,
                    const LabelTrack& labels);

}  // namespace seaterra
