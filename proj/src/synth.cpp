#include "seaterra/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "seaterra/imageio.hpp"

namespace seaterra {

TextureKind texture_from_name(const std::string& name) {
  if (name == "stripes") return TextureKind::Stripes;
  if (name == "stripes-warm") return TextureKind::StripesWarm;
  if (name == "checker") return TextureKind::Checker;
  if (name == "blotches") return TextureKind::Blotches;
  if (name == "noise") return TextureKind::Noise;
  throw std::invalid_argument("unknown texture kind: " + name);
}

std::string texture_name(TextureKind k) {
  switch (k) {
    case TextureKind::Stripes: return "stripes";
    case TextureKind::StripesWarm: return "stripes-warm";
    case TextureKind::Checker: return "checker";
    case TextureKind::Blotches: return "blotches";
    case TextureKind::Noise: return "noise";
  }
  throw std::invalid_argument("bad texture kind");
}

namespace {

constexpr double kPi = 3.14159265358979;

// Per-texture tint so segments differ in color as well as pattern.
void tint(TextureKind k, double v, double* rgb) {
  switch (k) {
    case TextureKind::Stripes:
      rgb[0] = 0.4 * v; rgb[1] = 0.85 * v; rgb[2] = 1.15 * v; break;
    case TextureKind::StripesWarm:
      // Same mean luminance as Stripes (channel sum 2.4) — grayscale
      // projections of the two kinds are identical.
      rgb[0] = 1.15 * v; rgb[1] = 0.85 * v; rgb[2] = 0.4 * v; break;
    case TextureKind::Checker:
      rgb[0] = v; rgb[1] = 0.7 * v; rgb[2] = 0.6 * v; break;
    case TextureKind::Blotches:
      rgb[0] = 0.6 * v; rgb[1] = v; rgb[2] = 0.7 * v; break;
    case TextureKind::Noise:
      rgb[0] = v; rgb[1] = v; rgb[2] = v; break;
  }
}

double pattern_value(TextureKind k, int y, int x, double drift, std::mt19937_64& rng) {
  switch (k) {
    case TextureKind::Stripes:
    case TextureKind::StripesWarm: {
      const double phase = (x + drift) / 8.0;
      return (static_cast<long long>(std::floor(phase)) % 2 + 2) % 2 ? 0.85 : 0.25;
    }
    case TextureKind::Checker: {
      const long long cx = static_cast<long long>(std::floor((x + drift) / 8.0));
      const long long cy = static_cast<long long>(std::floor(y / 8.0));
      return ((cx + cy) % 2 + 2) % 2 ? 0.85 : 0.25;
    }
    case TextureKind::Blotches:
      return 0.55 + 0.3 * std::sin(2 * kPi * (x + drift) / 32.0) *
                        std::sin(2 * kPi * y / 16.0);
    case TextureKind::Noise:
      return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  }
  return 0.0;
}

void stamp_blob(Tensor3& px, SynthSpec::Blob kind) {
  const int h = px.h, w = px.w;
  const double cy = h / 2.0, cx = w / 2.0;
  const double r = std::min(h, w) / 5.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool inside;
      if (kind == SynthSpec::Blob::BrightDisk) {
        const double dy = y - cy, dx = x - cx;
        inside = dy * dy + dx * dx <= r * r;
      } else {
        inside = std::abs(y - cy) <= r && std::abs(x - cx) <= r;
      }
      if (!inside) continue;
      const double v = kind == SynthSpec::Blob::BrightDisk ? 1.0 : 0.0;
      for (int ch = 0; ch < px.c; ++ch) px.at(y, x, ch) = v;
    }
  }
}

}  // namespace

std::pair<std::vector<Frame>, LabelTrack> generate_synthetic_mission(
    const SynthSpec& spec) {
  if (spec.height <= 0 || spec.width <= 0)
    throw std::invalid_argument("generate_synthetic_mission: bad image size");
  if (spec.noise_level < 0)
    throw std::invalid_argument("generate_synthetic_mission: negative noise level");
  int64_t total = 0;
  for (const auto& seg : spec.segments) {
    if (seg.frames <= 0)
      throw std::invalid_argument("generate_synthetic_mission: non-positive segment length");
    total += seg.frames;
  }
  for (const auto& a : spec.anomalies)
    if (a.frame < 0 || a.frame >= total)
      throw std::invalid_argument("anomaly frame index out of range: " +
                                  std::to_string(a.frame));

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_level);

  std::vector<Frame> frames;
  frames.reserve(total);
  LabelTrack track;
  track.terrain.assign(total, 0);
  track.interest.assign(total, Interest::Low);

  int64_t t = 0;
  for (size_t seg_idx = 0; seg_idx < spec.segments.size(); ++seg_idx) {
    const auto& seg = spec.segments[seg_idx];
    for (int f = 0; f < seg.frames; ++f, ++t) {
      Frame frame;
      frame.id = t;
      frame.t = t;
      frame.pixels = Tensor3(spec.height, spec.width, 3);
      const double drift = 4.0 * f;  // steady scene motion within a segment
      for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
          const double v = pattern_value(seg.texture, y, x, drift, rng);
          double rgb[3];
          tint(seg.texture, v, rgb);
          for (int ch = 0; ch < 3; ++ch)
            frame.pixels.at(y, x, ch) =
                std::clamp(rgb[ch] + noise(rng), 0.0, 1.0);
        }
      }
      track.terrain[t] = static_cast<int>(seg_idx);
      frames.push_back(std::move(frame));
    }
  }

  for (const auto& a : spec.anomalies) {
    stamp_blob(frames[a.frame].pixels, a.kind);
    track.interest[a.frame] = Interest::High;
  }
  return {std::move(frames), std::move(track)};
}

void export_mission(const std::string& directory,
                    const std::vector<Frame>& frames,
                    const LabelTrack& labels) {
  namespace fs = std::filesystem;
  fs::create_directories(directory);
  char name[32];
  for (const auto& f : frames) {
    std::snprintf(name, sizeof(name), "img_%05lld.png",
                  static_cast<long long>(f.id));
    write_png((fs::path(directory) / name).string(), f.pixels);
  }
  write_labels_csv((fs::path(directory) / "labels.csv").string(), labels);
}

}  // namespace seaterra
