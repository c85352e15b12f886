#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "seaterra/imageio.hpp"
#include "seaterra/pipeline.hpp"

using namespace seaterra;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CliOptions {
  std::string config_path;
  std::string annotations;
  std::string features;
  std::string out_dir;
  long long seed = -1;
  int budget = -1;
};

PipelineConfig build_config(const CliOptions& opt) {
  PipelineConfig cfg = opt.config_path.empty()
                           ? PipelineConfig{}
                           : PipelineConfig::from_file(opt.config_path);
  // Flags override file values.
  if (opt.seed >= 0) cfg.seed = static_cast<uint64_t>(opt.seed);
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (opt.budget >= 0) cfg.budget = opt.budget;
  if (!opt.features.empty()) {
    if (opt.features == "cae") cfg.features = FeaturePath::Cae;
    else if (opt.features == "baseline") cfg.features = FeaturePath::Baseline;
    else throw ConfigError("--features: expected cae|baseline");
  }
  cfg.apply_seed();
  return cfg;
}

int check_thread_cap() {
  const char* env = std::getenv("SEATERRA_THREADS");
  if (!env) return 0;
  try {
    const int n = std::stoi(env);
    if (n < 1) throw std::invalid_argument(env);
    return n;
  } catch (const std::exception&) {
    throw ConfigError(std::string("SEATERRA_THREADS: bad value '") + env + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised image-stream topic analysis"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  CliOptions opt;
  app.add_option("--config", opt.config_path, "Run configuration file");
  app.add_option("--seed", opt.seed, "Global seed (overrides config)");
  app.add_option("--features", opt.features, "Feature path: cae|baseline");
  app.add_option("--out", opt.out_dir, "Output directory");
  app.add_option("--budget", opt.budget, "Gibbs refinement sweeps per frame");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic mission dataset");
  auto* train = app.add_subcommand("train-cae", "Train the convolutional autoencoder");
  auto* fitv = app.add_subcommand("fit-vocab", "Fit the k-means visual vocabulary");
  auto* run = app.add_subcommand("run", "Stream the dataset through the topic model");
  auto* evalc = app.add_subcommand("eval", "Score a run against annotations");
  evalc->add_option("--annotations", opt.annotations, "labels CSV")->required();
  auto* report = app.add_subcommand("report", "Render the timeline SVG from run CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    check_thread_cap();  // serialized mode runs one worker; the cap still must parse
    const PipelineConfig cfg = build_config(opt);
    if (synth->parsed()) cmd_synth(cfg);
    else if (train->parsed()) cmd_train_cae(cfg);
    else if (fitv->parsed()) cmd_fit_vocab(cfg);
    else if (run->parsed()) cmd_run(cfg);
    else if (evalc->parsed()) cmd_eval(cfg, opt.annotations);
    else if (report->parsed()) cmd_report(cfg);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
