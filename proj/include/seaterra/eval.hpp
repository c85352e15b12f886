#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seaterra/frame.hpp"
#include "seaterra/rost.hpp"

namespace seaterra {

struct ContingencyTable {
  std::vector<std::vector<int64_t>> joint;  // [a][b]
  std::vector<int64_t> row_marginal;
  std::vector<int64_t> col_marginal;
  int64_t total = 0;
};

ContingencyTable contingency(const std::vector<int>& labels_a,
                             const std::vector<int>& labels_b);

// Plug-in mutual information estimate, natural log (nats).
double mutual_information(const std::vector<int>& labels_a,
                          const std::vector<int>& labels_b);

double entropy(const std::vector<int>& labels);

// I / max(H(a), H(b)); 0 when both entropies vanish.
double normalized_mi(const std::vector<int>& labels_a,
                     const std::vector<int>& labels_b);

enum class PerplexityBin : int { Low = 0, Medium = 1, High = 2 };

struct PerplexityBins {
  std::vector<PerplexityBin> bins;
  double mean = 0, stddev = 0;
  double threshold_medium = 0;  // mean + stddev
  double threshold_high = 0;    // mean + 2*stddev
};

// low: x <= mu+s; medium: mu+s < x <= mu+2s; high: x > mu+2s.
PerplexityBins bin_perplexity(const std::vector<double>& series);

struct MiReport {
  double nmi_terrain = 0;
  double nmi_interest = 0;
  int k_discovered = 0;
  double threshold_medium = 0, threshold_high = 0;
  // Confusion counts with topics matched to terrains one-to-one
  // (Hungarian assignment on the contingency table).
  std::vector<std::vector<int64_t>> confusion;  // [terrain][topic]
  std::vector<int> topic_order;                 // column topic ids after alignment
};

MiReport mi_report(const std::vector<int>& predicted_scene_labels,
                   const LabelTrack& annotation,
                   const PerplexityBins& predicted_bins);

void write_report_json(const std::string& path, const MiReport& report);

// Maximum-sum one-to-one assignment of columns to rows (pads to square).
// Returns, for each row, the matched column (-1 when unmatched).
std::vector<int> hungarian_match(const std::vector<std::vector<int64_t>>& score);

// Self-contained SVG: stacked per-topic proportion bands over t plus a
// perplexity trace with the bin-threshold guide lines.
void timeline_svg(const std::vector<TimelineRow>& timeline,
                  const std::vector<std::pair<int64_t, double>>& perplexity,
                  const std::string& out_path);

}  // namespace seaterra
