#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seaterra/cae.hpp"
#include "seaterra/frame.hpp"

namespace seaterra {

struct FeatureVector {
  std::vector<double> values;
  int row = 0, col = 0;  // grid position
  int64_t t = 0;
};

struct Codebook {
  std::vector<std::vector<double>> centroids;
  uint64_t seed = 0;
  double inertia = 0;  // final within-cluster sum of squares

  size_t size() const { return centroids.size(); }
  size_t dim() const { return centroids.empty() ? 0 : centroids[0].size(); }
};

struct WordObservation {
  int v = 0;        // word id in [0, |V|)
  int row = 0, col = 0;
  int64_t t = 0;
};

// One feature vector per LCA spatial cell (row-major), length = channels.
std::vector<FeatureVector> slice_lca(const Lca& lca, int64_t t);

// Lloyd's algorithm with k-means++ seeding. Empty clusters are reseeded
// to the point farthest from its current centroid. Deterministic given
// seed.
Codebook kmeans_fit(const std::vector<std::vector<double>>& features,
                    int vocab_size, uint64_t seed, int max_iters = 100,
                    double tol = 1e-6);

// Nearest centroid by Euclidean distance; ties break to the lowest id.
int quantize(const Codebook& codebook, const std::vector<double>& feature);

std::vector<WordObservation> frame_to_words(const CaeNetwork& net,
                                            const Codebook& codebook,
                                            const Frame& frame);

// Dense-grid gradient-orientation descriptors (8 bins over a 16x16
// patch, L2-normalized); the stand-in for off-the-shelf keypoint
// features in comparative runs.
std::vector<FeatureVector> baseline_descriptors(const Frame& frame,
                                                int grid = 25, int patch = 16);

std::vector<WordObservation> quantize_features(
    const Codebook& codebook, const std::vector<FeatureVector>& features);

// Binary codebook file: magic "VOC1", |V|, dim, centroid f32s.
void save_codebook(const std::string& path, const Codebook& cb);
Codebook load_codebook(const std::string& path);

// CSV export: header "t,row,col,word".
void write_words_csv(const std::string& path,
                     const std::vector<WordObservation>& words);

}  // namespace seaterra
