#include "seaterra/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "seaterra/imageio.hpp"

namespace seaterra {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

std::vector<FeatureVector> slice_lca(const Lca& lca, int64_t t) {
  std::vector<FeatureVector> out;
  out.reserve(static_cast<size_t>(lca.h) * lca.w);
  for (int r = 0; r < lca.h; ++r) {
    for (int c = 0; c < lca.w; ++c) {
      FeatureVector f;
      f.values.resize(lca.c);
      for (int ch = 0; ch < lca.c; ++ch) f.values[ch] = lca.at(r, c, ch);
      f.row = r;
      f.col = c;
      f.t = t;
      out.push_back(std::move(f));
    }
  }
  return out;
}

Codebook kmeans_fit(const std::vector<std::vector<double>>& features,
                    int vocab_size, uint64_t seed, int max_iters, double tol) {
  if (features.empty()) throw std::invalid_argument("kmeans_fit: empty input");
  if (vocab_size < 1) throw std::invalid_argument("kmeans_fit: |V| < 1");
  const size_t dim = features[0].size();
  for (const auto& f : features)
    if (f.size() != dim) throw std::invalid_argument("kmeans_fit: ragged features");

  std::set<std::vector<double>> distinct(features.begin(), features.end());
  if (static_cast<size_t>(vocab_size) > distinct.size())
    throw std::invalid_argument("kmeans_fit: |V|=" + std::to_string(vocab_size) +
                                " exceeds " + std::to_string(distinct.size()) +
                                " distinct points");

  std::mt19937_64 rng(seed);
  const size_t n = features.size();
  const int k = vocab_size;

  // k-means++ seeding.
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  centroids.push_back(features[std::uniform_int_distribution<size_t>(0, n - 1)(rng)]);
  std::vector<double> d2(n);
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0;
    for (size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::max();
      for (const auto& c : centroids) best = std::min(best, sq_dist(features[i], c));
      d2[i] = best;
      total += best;
    }
    size_t pick = 0;
    if (total > 0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      while (pick + 1 < n && r > d2[pick]) r -= d2[pick++];
      while (d2[pick] == 0 && pick > 0) --pick;  // land on a contributing point
      if (d2[pick] == 0)
        while (pick + 1 < n && d2[pick] == 0) ++pick;
    } else {
      // All points coincide with centroids; pick any unused distinct point.
      for (size_t i = 0; i < n; ++i)
        if (std::none_of(centroids.begin(), centroids.end(),
                         [&](const auto& c) { return c == features[i]; })) {
          pick = i;
          break;
        }
    }
    centroids.push_back(features[pick]);
  }

  std::vector<int> assign(n, 0);
  double inertia = 0;
  for (int iter = 0; iter < max_iters; ++iter) {
    inertia = 0;
    for (size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = sq_dist(features[i], centroids[0]);
      for (int j = 1; j < k; ++j) {
        const double d = sq_dist(features[i], centroids[j]);
        if (d < bd) {
          bd = d;
          best = j;
        }
      }
      assign[i] = best;
      inertia += bd;
    }

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<size_t> counts(k, 0);
    for (size_t i = 0; i < n; ++i) {
      for (size_t d = 0; d < dim; ++d) sums[assign[i]][d] += features[i][d];
      ++counts[assign[i]];
    }

    double max_move = 0;
    for (int j = 0; j < k; ++j) {
      std::vector<double> next(dim);
      if (counts[j] > 0) {
        for (size_t d = 0; d < dim; ++d) next[d] = sums[j][d] / counts[j];
      } else {
        // Reseed an empty cluster to the point farthest from its centroid.
        size_t far = 0;
        double fd = -1;
        for (size_t i = 0; i < n; ++i) {
          const double d = sq_dist(features[i], centroids[assign[i]]);
          if (d > fd) {
            fd = d;
            far = i;
          }
        }
        next = features[far];
      }
      max_move = std::max(max_move, std::sqrt(sq_dist(next, centroids[j])));
      centroids[j] = std::move(next);
    }
    if (max_move < tol) break;
  }

  // Final inertia under the final centroids.
  inertia = 0;
  for (size_t i = 0; i < n; ++i) {
    double bd = std::numeric_limits<double>::max();
    for (int j = 0; j < k; ++j) bd = std::min(bd, sq_dist(features[i], centroids[j]));
    inertia += bd;
  }

  Codebook cb;
  cb.centroids = std::move(centroids);
  cb.seed = seed;
  cb.inertia = inertia;
  return cb;
}

int quantize(const Codebook& codebook, const std::vector<double>& feature) {
  if (codebook.centroids.empty())
    throw std::invalid_argument("quantize: empty codebook");
  if (feature.size() != codebook.dim())
    throw std::invalid_argument("quantize: feature dim " +
                                std::to_string(feature.size()) + " vs codebook " +
                                std::to_string(codebook.dim()));
  int best = 0;
  double bd = sq_dist(feature, codebook.centroids[0]);
  for (size_t j = 1; j < codebook.size(); ++j) {
    const double d = sq_dist(feature, codebook.centroids[j]);
    if (d < bd) {  // strict: ties keep the lowest id
      bd = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

std::vector<WordObservation> quantize_features(
    const Codebook& codebook, const std::vector<FeatureVector>& features) {
  std::vector<WordObservation> words;
  words.reserve(features.size());
  for (const auto& f : features)
    words.push_back({quantize(codebook, f.values), f.row, f.col, f.t});
  return words;
}

std::vector<WordObservation> frame_to_words(const CaeNetwork& net,
                                            const Codebook& codebook,
                                            const Frame& frame) {
  return quantize_features(codebook, slice_lca(extract_lca(net, frame), frame.t));
}

std::vector<FeatureVector> baseline_descriptors(const Frame& frame, int grid,
                                                int patch) {
  const Tensor3& px = frame.pixels;
  if (px.h < patch || px.w < patch)
    throw std::invalid_argument("baseline_descriptors: frame " + px.shape_str() +
                                " smaller than patch " + std::to_string(patch));
  constexpr int kBins = 8;
  constexpr double kPi = 3.14159265358979;

  // Grayscale + central-difference gradients.
  Tensor3 gray(px.h, px.w, 1);
  for (int y = 0; y < px.h; ++y)
    for (int x = 0; x < px.w; ++x) {
      double v = 0;
      for (int ch = 0; ch < px.c; ++ch) v += px.at(y, x, ch);
      gray.at(y, x, 0) = v / px.c;
    }

  std::vector<FeatureVector> out;
  out.reserve(static_cast<size_t>(grid) * grid);
  for (int gr = 0; gr < grid; ++gr) {
    for (int gc = 0; gc < grid; ++gc) {
      // Keypoint centers spread uniformly, patch clamped inside the frame.
      const int cy = static_cast<int>((gr + 0.5) * px.h / grid);
      const int cx = static_cast<int>((gc + 0.5) * px.w / grid);
      const int y0 = std::clamp(cy - patch / 2, 0, px.h - patch);
      const int x0 = std::clamp(cx - patch / 2, 0, px.w - patch);

      FeatureVector f;
      f.values.assign(kBins, 0.0);
      f.row = gr;
      f.col = gc;
      f.t = frame.t;
      for (int y = y0; y < y0 + patch; ++y) {
        for (int x = x0; x < x0 + patch; ++x) {
          const double gx = gray.at(y, std::min(x + 1, px.w - 1), 0) -
                            gray.at(y, std::max(x - 1, 0), 0);
          const double gy = gray.at(std::min(y + 1, px.h - 1), x, 0) -
                            gray.at(std::max(y - 1, 0), x, 0);
          const double mag = std::sqrt(gx * gx + gy * gy);
          if (mag == 0) continue;
          const double ang = std::atan2(gy, gx);  // [-pi, pi]
          int bin = static_cast<int>((ang + kPi) / (2 * kPi) * kBins);
          bin = std::clamp(bin, 0, kBins - 1);
          f.values[bin] += mag;
        }
      }
      double norm = 0;
      for (double v : f.values) norm += v * v;
      if (norm > 0) {
        norm = std::sqrt(norm);
        for (double& v : f.values) v /= norm;
      }
      out.push_back(std::move(f));
    }
  }
  return out;
}

namespace {

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_codebook(const std::string& path, const Codebook& cb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write: " + path);
  out.write("VOC1", 4);
  put_u32(out, static_cast<uint32_t>(cb.size()));
  put_u32(out, static_cast<uint32_t>(cb.dim()));
  for (const auto& c : cb.centroids)
    for (double v : c) {
      const float f = static_cast<float>(v);
      uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  if (!out) throw DataError("write failed: " + path);
}

Codebook load_codebook(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "VOC1", 4) != 0)
    throw DataError("not a VOC1 codebook file: " + path);
  const uint32_t k = get_u32(in);
  const uint32_t dim = get_u32(in);
  Codebook cb;
  cb.centroids.assign(k, std::vector<double>(dim));
  for (auto& c : cb.centroids)
    for (auto& v : c) {
      const uint32_t bits = get_u32(in);
      float f;
      std::memcpy(&f, &bits, 4);
      v = f;
    }
  if (!in) throw DataError("truncated VOC1 codebook file: " + path);
  return cb;
}

void write_words_csv(const std::string& path,
                     const std::vector<WordObservation>& words) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write: " + path);
  out << "t,row,col,word\n";
  for (const auto& w : words)
    out << w.t << "," << w.row << "," << w.col << "," << w.v << "\n";
}

}  // namespace seaterra
