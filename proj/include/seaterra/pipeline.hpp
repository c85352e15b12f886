#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "seaterra/cae.hpp"
#include "seaterra/rost.hpp"
#include "seaterra/synth.hpp"

namespace seaterra {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class FeaturePath { Cae, Baseline };

// Flat key-value run configuration with dotted section keys. Every key
// is optional; unset keys fall back to the defaults below.
struct PipelineConfig {
  std::string dataset_dir = "dataset";
  std::string out_dir = "out";
  bool has_synth = false;
  SynthSpec synth;
  ArchSpec arch = ArchSpec::paper_default();
  int vocab_size = 1000;
  int kmeans_max_iters = 100;
  double kmeans_tol = 1e-6;
  // k-means subsampling cap: at most this many pooled feature vectors
  // (deterministic stride subsample; 0 = no cap).
  int max_kmeans_features = 200000;
  RostConfig rost;
  FeaturePath features = FeaturePath::Cae;
  int baseline_grid = 25;
  int budget = 20;
  // Stochastic polish sweeps per frame after the stream ends, before
  // the deterministic consolidation pass extracts the final state.
  int final_passes = 200;
  uint64_t seed = 0;

  // CSV-ish file of `key = value` lines, '#' comments.
  static PipelineConfig from_file(const std::string& path);
  static PipelineConfig from_entries(const std::map<std::string, std::string>& kv);

  void apply_seed();  // propagate the global seed into every seeded component
};

// Subcommand bodies; each throws ConfigError / DataError / NumericError.
void cmd_synth(const PipelineConfig& cfg);
void cmd_train_cae(const PipelineConfig& cfg);
void cmd_fit_vocab(const PipelineConfig& cfg);
void cmd_run(const PipelineConfig& cfg);
void cmd_eval(const PipelineConfig& cfg, const std::string& annotations_csv);
void cmd_report(const PipelineConfig& cfg);

// Output file names inside cfg.out_dir.
std::string cae_model_path(const PipelineConfig& cfg);
std::string loss_csv_path(const PipelineConfig& cfg);
std::string codebook_path(const PipelineConfig& cfg);
std::string timeline_csv_path(const PipelineConfig& cfg);
std::string perplexity_csv_path(const PipelineConfig& cfg);
std::string rost_checkpoint_path(const PipelineConfig& cfg);
std::string report_json_path(const PipelineConfig& cfg);
std::string timeline_svg_path(const PipelineConfig& cfg);

}  // namespace seaterra
