#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "seaterra/vocab.hpp"

namespace seaterra {

struct RostConfig {
  double alpha = 0.1;    // topic smoothing within a neighborhood
  double beta = 25.0;    // word smoothing per topic
  double gamma = 1e-7;   // new-topic propensity
  int vocab_size = 1000;
  int cell_size = 5;     // spatial words per cell side
  int temporal_window = 1;  // +/- time cells in a neighborhood
  double refine_recent_bias = 0.5;
  uint64_t seed = 0;
  // Test hook: when > 0, topic count is fixed at the cap once reached
  // (no new-topic outcome, no retirement). 0 = full CRP behavior.
  int topic_cap = 0;
};

struct CellIndex {
  int row = 0, col = 0;  // spatial cell
  int64_t t = 0;

  bool operator==(const CellIndex&) const = default;
};

struct CellHash {
  size_t operator()(const CellIndex& c) const {
    size_t h = std::hash<int64_t>{}(c.t);
    h = h * 1000003u + static_cast<size_t>(c.row);
    h = h * 1000003u + static_cast<size_t>(c.col);
    return h;
  }
};

// Spatio-temporal topic model over streamed word observations. Topics
// grow via a CRP term and are retired when their last word leaves.
class RostModel {
 public:
  struct StoredWord {
    int v = 0;
    int row = 0, col = 0;
    int z = -1;
  };

  explicit RostModel(const RostConfig& config);

  const RostConfig& config() const { return config_; }
  int num_topics() const { return k_; }
  size_t total_words() const { return total_words_; }
  const std::vector<int64_t>& times() const { return times_; }

  CellIndex cell_of(int row, int col, int64_t t) const;

  // Aggregated topic counts over the 3x3 spatial block around `cell`
  // across t within +/- temporal_window. Length = current K.
  std::vector<int64_t> neighborhood(const CellIndex& cell) const;

  // Unnormalized Gibbs weights over K+1 outcomes (index K = new topic)
  // given neighborhood counts. Caller handles any count exclusion.
  std::vector<double> conditional(int v, const std::vector<int64_t>& nbr) const;

  // Ingest one frame's words; t must be new. Initial assignments are
  // sampled from the conditional as words arrive.
  void add_observations(int64_t t, const std::vector<WordObservation>& words);

  // Biased Gibbs refinement: each iteration resamples every word at one
  // time index (the newest with probability refine_recent_bias, else a
  // uniformly chosen one).
  void refine(int iterations);

  // Deterministic mode-seeking sweeps: reassigns every word to the
  // argmax of its conditional (chronological order) until no assignment
  // changes or max_sweeps is reached. Transient micro-topics created by
  // sampler churn lose every argmax comparison and are retired. Returns
  // the number of sweeps performed.
  int consolidate(int max_sweeps);

  // P(v|k) with Dirichlet smoothing; sums to 1.
  std::vector<double> word_topic_dist(int k) const;

  // MAP topic per word at t (full counts, no new-topic outcome).
  std::vector<std::pair<WordObservation, int>> map_word_labels(int64_t t) const;

  // Majority MAP word label; ties to the lowest topic id.
  int scene_label(int64_t t) const;

  // exp(- mean log p(w)) with p(w) = sum_k P(w|k) P(k|cell(w)).
  double perplexity(int64_t t) const;
  std::vector<std::pair<int64_t, double>> perplexity_series() const;

  const std::vector<StoredWord>& words_at(int64_t t) const;

  // Throws std::logic_error if any count invariant is violated.
  void validate() const;

  void save(const std::string& path) const;
  static RostModel load(const std::string& path);

 private:
  int sample_assignment(int v, const CellIndex& cell);
  void increment(const StoredWord& w, const CellIndex& cell);
  void decrement(StoredWord& w, const CellIndex& cell);
  void retire_topic(int k);
  void resample_time(int64_t t);

  RostConfig config_;
  int k_ = 0;
  size_t total_words_ = 0;
  std::vector<std::vector<int64_t>> word_topic_;  // [k][v]
  std::vector<int64_t> topic_total_;              // [k]
  std::unordered_map<CellIndex, std::vector<int64_t>, CellHash> cell_topic_;
  std::unordered_map<int64_t, std::vector<StoredWord>> words_;
  std::vector<int64_t> times_;  // insertion order
  std::mt19937_64 rng_;
};

// Per-frame fraction of MAP word labels per topic; rows (t, topic,
// proportion) for every topic present at t.
struct TimelineRow {
  int64_t t;
  int topic;
  double proportion;
};
std::vector<TimelineRow> topic_timeline(const RostModel& model);
void write_timeline_csv(const std::string& path,
                        const std::vector<TimelineRow>& rows);
std::vector<TimelineRow> read_timeline_csv(const std::string& path);
void write_perplexity_csv(const std::string& path,
                          const std::vector<std::pair<int64_t, double>>& series);
std::vector<std::pair<int64_t, double>> read_perplexity_csv(
    const std::string& path);

}  // namespace seaterra
