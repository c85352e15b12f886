#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "seaterra/imageio.hpp"
#include "seaterra/synth.hpp"

using namespace seaterra;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("seaterra_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Tensor3 constant_image(int h, int w, double v) {
  Tensor3 t(h, w, 3);
  for (auto& x : t.data) x = v;
  return t;
}

}  // namespace

TEST_CASE("load_sequence orders frames by filename index and scales bytes") {
  const fs::path dir = temp_dir("load");
  // Write out of order; indices 0..2.
  for (int i : {2, 0, 1}) {
    Tensor3 img = constant_image(8, 8, i == 0 ? 0.0 : (i == 1 ? 1.0 : 0.5));
    write_png((dir / ("img_00" + std::to_string(i) + ".png")).string(), img);
  }
  const auto frames = load_sequence(dir.string(), "img_*.png");
  REQUIRE(frames.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(frames[i].t == static_cast<int64_t>(i));
    CHECK(frames[i].id == static_cast<int64_t>(i));
  }
  // byte 0 -> 0.0, byte 255 -> 1.0
  CHECK(frames[0].pixels.at(3, 3, 0) == doctest::Approx(0.0));
  CHECK(frames[1].pixels.at(3, 3, 0) == doctest::Approx(1.0));
}

TEST_CASE("load_sequence error cases") {
  CHECK_THROWS_AS(load_sequence("/nonexistent/dir", "*.png"), DataError);

  const fs::path dir = temp_dir("load_err");
  CHECK_THROWS_AS(load_sequence(dir.string(), "*.png"), DataError);

  write_png((dir / "a_0.png").string(), constant_image(8, 8, 0.5));
  write_png((dir / "a_1.png").string(), constant_image(16, 16, 0.5));
  CHECK_THROWS_AS(load_sequence(dir.string(), "*.png"), DataError);

  // Undecodable file.
  const fs::path dir2 = temp_dir("load_bad");
  std::ofstream((dir2 / "b_0.png").string()) << "not a png";
  CHECK_THROWS_AS(load_sequence(dir2.string(), "*.png"), DataError);
}

TEST_CASE("grayscale PNGs are replicated to 3 channels") {
  const fs::path dir = temp_dir("gray");
  Tensor3 g(8, 8, 1);
  for (auto& v : g.data) v = 0.5;
  write_png((dir / "g_0.png").string(), g);
  const auto frames = load_sequence(dir.string(), "*.png");
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].pixels.c == 3);
  CHECK(frames[0].pixels.at(0, 0, 0) == frames[0].pixels.at(0, 0, 2));
}

TEST_CASE("resize_frame preserves constants") {
  Frame f;
  f.id = 7;
  f.t = 7;
  f.pixels = constant_image(6, 6, 0.42);
  const Frame r = resize_frame(f, 11, 5);
  CHECK(r.id == 7);
  CHECK(r.t == 7);
  CHECK(r.pixels.h == 11);
  CHECK(r.pixels.w == 5);
  for (double v : r.pixels.data) CHECK(v == doctest::Approx(0.42));
}

TEST_CASE("resize_frame identity when target equals source") {
  Frame f;
  f.pixels = Tensor3(4, 4, 3);
  for (size_t i = 0; i < f.pixels.data.size(); ++i)
    f.pixels.data[i] = (i % 17) / 17.0;
  const Frame r = resize_frame(f, 4, 4);
  for (size_t i = 0; i < f.pixels.data.size(); ++i)
    CHECK(r.pixels.data[i] == doctest::Approx(f.pixels.data[i]));
}

TEST_CASE("resize_frame interpolates monotonically along a gradient row") {
  Frame f;
  f.pixels = Tensor3(2, 2, 1);
  f.pixels.at(0, 0, 0) = 0;
  f.pixels.at(0, 1, 0) = 1;
  f.pixels.at(1, 0, 0) = 0;
  f.pixels.at(1, 1, 0) = 1;
  const Frame r = resize_frame(f, 2, 4);
  for (int y = 0; y < 2; ++y)
    for (int x = 1; x < 4; ++x)
      CHECK(r.pixels.at(y, x, 0) >= r.pixels.at(y, x - 1, 0));
  CHECK(r.pixels.at(0, 0, 0) == doctest::Approx(0.0));
  CHECK(r.pixels.at(0, 3, 0) == doctest::Approx(1.0));
}

TEST_CASE("resize_frame rejects zero target") {
  Frame f;
  f.pixels = constant_image(4, 4, 0.5);
  CHECK_THROWS_AS(resize_frame(f, 0, 4), std::invalid_argument);
}

TEST_CASE("synthetic mission segment bookkeeping") {
  SynthSpec spec;
  spec.segments = {{TextureKind::Stripes, 50},
                   {TextureKind::Checker, 50},
                   {TextureKind::Noise, 50}};
  spec.height = spec.width = 32;
  spec.seed = 11;
  auto [frames, labels] = generate_synthetic_mission(spec);
  REQUIRE(frames.size() == 150);
  REQUIRE(labels.size() == 150);
  for (int i = 0; i < 150; ++i) {
    CHECK(labels.terrain[i] == i / 50);
    CHECK(labels.interest[i] == Interest::Low);
  }
  for (const auto& f : frames)
    for (double v : f.pixels.data) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
}

TEST_CASE("synthetic mission is deterministic in the seed") {
  SynthSpec spec;
  spec.segments = {{TextureKind::Blotches, 5}, {TextureKind::Noise, 5}};
  spec.height = spec.width = 24;
  spec.seed = 99;
  auto [f1, l1] = generate_synthetic_mission(spec);
  auto [f2, l2] = generate_synthetic_mission(spec);
  for (size_t i = 0; i < f1.size(); ++i)
    CHECK(f1[i].pixels.data == f2[i].pixels.data);
}

TEST_CASE("anomaly frame stands out from its segment") {
  SynthSpec spec;
  spec.segments = {{TextureKind::Stripes, 50},
                   {TextureKind::Checker, 50},
                   {TextureKind::Noise, 50}};
  spec.height = spec.width = 32;
  spec.seed = 5;
  spec.anomalies = {{75, SynthSpec::Blob::BrightDisk}};
  auto [frames, labels] = generate_synthetic_mission(spec);
  CHECK(labels.interest[75] == Interest::High);

  auto mean_of = [](const Frame& f) {
    double acc = 0;
    for (double v : f.pixels.data) acc += v;
    return acc / f.pixels.data.size();
  };
  // Segment statistics over the blob-free checker frames.
  std::vector<double> means;
  for (int i = 50; i < 100; ++i)
    if (i != 75) means.push_back(mean_of(frames[i]));
  double mu = 0;
  for (double m : means) mu += m;
  mu /= means.size();
  double var = 0;
  for (double m : means) var += (m - mu) * (m - mu);
  const double sd = std::sqrt(var / means.size());
  CHECK(std::abs(mean_of(frames[75]) - mu) > 3 * sd);
}

TEST_CASE("anomaly index out of range is rejected") {
  SynthSpec spec;
  spec.segments = {{TextureKind::Noise, 10}};
  spec.anomalies = {{10, SynthSpec::Blob::BrightDisk}};
  CHECK_THROWS_AS(generate_synthetic_mission(spec), std::invalid_argument);
}

TEST_CASE("labels CSV round trip") {
  const fs::path dir = temp_dir("labels");
  LabelTrack track;
  track.terrain = {0, 0, 1, 2};
  track.interest = {Interest::Low, Interest::High, Interest::Medium, Interest::Low};
  const std::string path = (dir / "labels.csv").string();
  write_labels_csv(path, track);
  const LabelTrack back = read_labels_csv(path);
  CHECK(back.terrain == track.terrain);
  CHECK(back.interest == track.interest);
}

TEST_CASE("exported mission reloads consistently") {
  SynthSpec spec;
  spec.segments = {{TextureKind::Checker, 4}};
  spec.height = spec.width = 16;
  spec.seed = 3;
  auto [frames, labels] = generate_synthetic_mission(spec);
  const fs::path dir = temp_dir("export");
  export_mission(dir.string(), frames, labels);
  const auto loaded = load_sequence(dir.string(), "img_*.png");
  REQUIRE(loaded.size() == 4);
  // PNG quantization: equal to 8-bit precision.
  for (size_t i = 0; i < 4; ++i)
    for (size_t j = 0; j < loaded[i].pixels.data.size(); ++j)
      CHECK(std::abs(loaded[i].pixels.data[j] - frames[i].pixels.data[j]) <=
            0.5 / 255 + 1e-9);
}
