#include "seaterra/imageio.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>

namespace fs = std::filesystem;

namespace seaterra {

std::string interest_name(Interest i) {
  switch (i) {
    case Interest::Low: return "low";
    case Interest::Medium: return "medium";
    case Interest::High: return "high";
  }
  throw std::invalid_argument("bad interest value");
}

Interest interest_from_name(const std::string& s) {
  if (s == "low") return Interest::Low;
  if (s == "medium") return Interest::Medium;
  if (s == "high") return Interest::High;
  throw DataError("unknown interest label: " + s);
}

namespace {

// Sort key: last run of digits in the stem, so img_10.png follows img_9.png.
long long filename_index(const fs::path& p) {
  const std::string stem = p.stem().string();
  long long value = -1;
  size_t i = 0;
  while (i < stem.size()) {
    if (std::isdigit(static_cast<unsigned char>(stem[i]))) {
      size_t j = i;
      while (j < stem.size() && std::isdigit(static_cast<unsigned char>(stem[j]))) ++j;
      value = std::stoll(stem.substr(i, j - i));
      i = j;
    } else {
      ++i;
    }
  }
  return value;
}

Tensor3 mat_to_tensor(const cv::Mat& img, const std::string& path) {
  if (img.empty()) throw DataError("undecodable image: " + path);
  if (img.depth() != CV_8U)
    throw DataError("expected 8-bit image: " + path);
  Tensor3 out(img.rows, img.cols, 3);
  for (int y = 0; y < img.rows; ++y) {
    for (int x = 0; x < img.cols; ++x) {
      if (img.channels() == 1) {
        const double v = img.at<uchar>(y, x) / 255.0;
        out.at(y, x, 0) = out.at(y, x, 1) = out.at(y, x, 2) = v;
      } else if (img.channels() == 3) {
        const cv::Vec3b px = img.at<cv::Vec3b>(y, x);  // BGR
        out.at(y, x, 0) = px[2] / 255.0;
        out.at(y, x, 1) = px[1] / 255.0;
        out.at(y, x, 2) = px[0] / 255.0;
      } else {
        throw DataError("unsupported channel count in " + path);
      }
    }
  }
  return out;
}

}  // namespace

Tensor3 read_png(const std::string& path) {
  cv::Mat img = cv::imread(path, cv::IMREAD_UNCHANGED);
  return mat_to_tensor(img, path);
}

void write_png(const std::string& path, const Tensor3& image) {
  if (image.c != 1 && image.c != 3)
    throw DataError("write_png expects 1 or 3 channels, got " + image.shape_str());
  cv::Mat img(image.h, image.w, CV_8UC3);
  for (int y = 0; y < image.h; ++y) {
    for (int x = 0; x < image.w; ++x) {
      auto q = [&](int ch) {
        const double v = std::clamp(image.at(y, x, image.c == 1 ? 0 : ch), 0.0, 1.0);
        return static_cast<uchar>(std::lround(v * 255.0));
      };
      img.at<cv::Vec3b>(y, x) = cv::Vec3b(q(2), q(1), q(0));
    }
  }
  if (!cv::imwrite(path, img))
    throw DataError("cannot write image: " + path);
}

std::vector<Frame> load_sequence(const std::string& directory,
                                 const std::string& pattern) {
  if (!fs::is_directory(directory))
    throw DataError("missing directory: " + directory);

  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (fnmatch(pattern.c_str(), name.c_str(), 0) == 0)
      paths.push_back(entry.path());
  }
  if (paths.empty())
    throw DataError("no files matching '" + pattern + "' in " + directory);

  std::sort(paths.begin(), paths.end(), [](const fs::path& a, const fs::path& b) {
    const long long ia = filename_index(a), ib = filename_index(b);
    if (ia != ib) return ia < ib;
    return a.filename().string() < b.filename().string();
  });

  std::vector<Frame> frames;
  frames.reserve(paths.size());
  for (size_t i = 0; i < paths.size(); ++i) {
    Frame f;
    f.id = static_cast<int64_t>(i);
    f.t = static_cast<int64_t>(i);
    f.pixels = read_png(paths[i].string());
    if (i > 0 && !f.pixels.same_shape(frames[0].pixels))
      throw DataError("inconsistent dimensions: " + paths[i].string() + " is " +
                      f.pixels.shape_str() + ", expected " +
                      frames[0].pixels.shape_str());
    frames.push_back(std::move(f));
  }
  return frames;
}

Frame resize_frame(const Frame& frame, int target_h, int target_w) {
  if (target_h <= 0 || target_w <= 0)
    throw std::invalid_argument("resize_frame: non-positive target dimension");
  const Tensor3& in = frame.pixels;
  Frame out;
  out.id = frame.id;
  out.t = frame.t;
  out.pixels = Tensor3(target_h, target_w, in.c);

  const double sy = static_cast<double>(in.h) / target_h;
  const double sx = static_cast<double>(in.w) / target_w;
  for (int y = 0; y < target_h; ++y) {
    // Pixel-center alignment.
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int y0 = std::min(static_cast<int>(fy), in.h - 1);
    const int y1 = std::min(y0 + 1, in.h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < target_w; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const int x0 = std::min(static_cast<int>(fx), in.w - 1);
      const int x1 = std::min(x0 + 1, in.w - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < in.c; ++ch) {
        const double top = in.at(y0, x0, ch) * (1 - wx) + in.at(y0, x1, ch) * wx;
        const double bot = in.at(y1, x0, ch) * (1 - wx) + in.at(y1, x1, ch) * wx;
        out.pixels.at(y, x, ch) = std::clamp(top * (1 - wy) + bot * wy, 0.0, 1.0);
      }
    }
  }
  return out;
}

void write_labels_csv(const std::string& path, const LabelTrack& labels) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write: " + path);
  out << "frame_id,terrain,interest\n";
  for (size_t i = 0; i < labels.terrain.size(); ++i)
    out << i << "," << labels.terrain[i] << "," << interest_name(labels.interest[i])
        << "\n";
}

LabelTrack read_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("frame_id,terrain,interest", 0) != 0)
    throw DataError("bad labels CSV header in " + path);
  LabelTrack track;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, terrain, interest;
    if (!std::getline(ss, id, ',') || !std::getline(ss, terrain, ',') ||
        !std::getline(ss, interest, ','))
      throw DataError("bad labels CSV row in " + path + ": " + line);
    track.terrain.push_back(std::stoi(terrain));
    track.interest.push_back(interest_from_name(interest));
  }
  return track;
}

}  // namespace seaterra
