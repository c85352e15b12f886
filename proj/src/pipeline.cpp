#include "seaterra/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "seaterra/eval.hpp"
#include "seaterra/imageio.hpp"

namespace fs = std::filesystem;

namespace seaterra {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) out.push_back(trim(part));
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad number '" + v + "'");
  }
}

// "stripes:50,checker:50,noise:50"
std::vector<SynthSpec::Segment> parse_segments(const std::string& v) {
  std::vector<SynthSpec::Segment> segs;
  for (const auto& part : split(v, ',')) {
    const auto bits = split(part, ':');
    if (bits.size() != 2)
      throw ConfigError("synth.segments: expected kind:count, got '" + part + "'");
    try {
      segs.push_back({texture_from_name(bits[0]), to_int("synth.segments", bits[1])});
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("synth.segments: ") + e.what());
    }
  }
  return segs;
}

// "75:disk,120:square" or bare "75,120"
std::vector<SynthSpec::Anomaly> parse_anomalies(const std::string& v) {
  std::vector<SynthSpec::Anomaly> out;
  for (const auto& part : split(v, ',')) {
    const auto bits = split(part, ':');
    SynthSpec::Anomaly a;
    a.frame = to_int("synth.anomalies", bits[0]);
    if (bits.size() > 1) {
      if (bits[1] == "disk")
        a.kind = SynthSpec::Blob::BrightDisk;
      else if (bits[1] == "square")
        a.kind = SynthSpec::Blob::DarkSquare;
      else
        throw ConfigError("synth.anomalies: unknown blob kind '" + bits[1] + "'");
    }
    out.push_back(a);
  }
  return out;
}

// "5:2:3,5:2:3,3:2:5,3:2:5" as filter:stride:out_channels
std::vector<LayerSpec> parse_layers(const std::string& v) {
  std::vector<LayerSpec> layers;
  for (const auto& part : split(v, ',')) {
    const auto bits = split(part, ':');
    if (bits.size() != 3)
      throw ConfigError("arch.layers: expected filter:stride:channels, got '" +
                        part + "'");
    layers.push_back({to_int("arch.layers", bits[0]), to_int("arch.layers", bits[1]),
                      to_int("arch.layers", bits[2])});
  }
  return layers;
}

}  // namespace

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return from_entries(kv);
}

PipelineConfig PipelineConfig::from_entries(
    const std::map<std::string, std::string>& kv) {
  PipelineConfig c;
  for (const auto& [key, v] : kv) {
    if (key == "dataset.dir") c.dataset_dir = v;
    else if (key == "out") c.out_dir = v;
    else if (key == "seed") c.seed = static_cast<uint64_t>(std::stoll(v));
    else if (key == "features") {
      if (v == "cae") c.features = FeaturePath::Cae;
      else if (v == "baseline") c.features = FeaturePath::Baseline;
      else throw ConfigError("features: expected cae|baseline, got '" + v + "'");
    }
    else if (key == "budget") c.budget = to_int(key, v);
    else if (key == "final_passes") c.final_passes = to_int(key, v);
    else if (key == "synth.segments") { c.synth.segments = parse_segments(v); c.has_synth = true; }
    else if (key == "synth.anomalies") c.synth.anomalies = parse_anomalies(v);
    else if (key == "synth.height") c.synth.height = to_int(key, v);
    else if (key == "synth.width") c.synth.width = to_int(key, v);
    else if (key == "synth.noise") c.synth.noise_level = to_double(key, v);
    else if (key == "arch.height") c.arch.input_h = to_int(key, v);
    else if (key == "arch.width") c.arch.input_w = to_int(key, v);
    else if (key == "arch.channels") c.arch.input_c = to_int(key, v);
    else if (key == "arch.layers") c.arch.layers = parse_layers(v);
    else if (key == "arch.decay") c.arch.weight_decay = to_double(key, v);
    else if (key == "arch.lr") c.arch.learning_rate = to_double(key, v);
    else if (key == "arch.batch") c.arch.batch_size = to_int(key, v);
    else if (key == "arch.epochs") c.arch.epochs = to_int(key, v);
    else if (key == "vocab.size") c.vocab_size = to_int(key, v);
    else if (key == "vocab.max_iters") c.kmeans_max_iters = to_int(key, v);
    else if (key == "vocab.tol") c.kmeans_tol = to_double(key, v);
    else if (key == "vocab.max_features") c.max_kmeans_features = to_int(key, v);
    else if (key == "baseline.grid") c.baseline_grid = to_int(key, v);
    else if (key == "rost.alpha") c.rost.alpha = to_double(key, v);
    else if (key == "rost.beta") c.rost.beta = to_double(key, v);
    else if (key == "rost.gamma") c.rost.gamma = to_double(key, v);
    else if (key == "rost.cell_size") c.rost.cell_size = to_int(key, v);
    else if (key == "rost.temporal_window") c.rost.temporal_window = to_int(key, v);
    else if (key == "rost.recent_bias") c.rost.refine_recent_bias = to_double(key, v);
    else if (key == "rost.topic_cap") c.rost.topic_cap = to_int(key, v);
    else throw ConfigError("unknown config key: " + key);
  }
  c.apply_seed();
  return c;
}

void PipelineConfig::apply_seed() {
  synth.seed = seed;
  arch.seed = seed;
  rost.seed = seed;
  rost.vocab_size = vocab_size;
}

std::string cae_model_path(const PipelineConfig& c) { return c.out_dir + "/cae.bin"; }
std::string loss_csv_path(const PipelineConfig& c) { return c.out_dir + "/cae_loss.csv"; }
std::string codebook_path(const PipelineConfig& c) { return c.out_dir + "/vocab.bin"; }
std::string timeline_csv_path(const PipelineConfig& c) { return c.out_dir + "/timeline.csv"; }
std::string perplexity_csv_path(const PipelineConfig& c) { return c.out_dir + "/perplexity.csv"; }
std::string rost_checkpoint_path(const PipelineConfig& c) { return c.out_dir + "/rost.bin"; }
std::string report_json_path(const PipelineConfig& c) { return c.out_dir + "/report.json"; }
std::string timeline_svg_path(const PipelineConfig& c) { return c.out_dir + "/timeline.svg"; }

namespace {

std::vector<Frame> load_dataset(const PipelineConfig& cfg) {
  return load_sequence(cfg.dataset_dir, "*.png");
}

Frame fit_to_arch(const PipelineConfig& cfg, const Frame& f) {
  if (f.pixels.h == cfg.arch.input_h && f.pixels.w == cfg.arch.input_w) return f;
  return resize_frame(f, cfg.arch.input_h, cfg.arch.input_w);
}

std::vector<FeatureVector> frame_features(const PipelineConfig& cfg,
                                          const CaeNetwork* net, const Frame& f) {
  if (cfg.features == FeaturePath::Cae) {
    const Frame fitted = fit_to_arch(cfg, f);
    return slice_lca(extract_lca(*net, fitted), f.t);
  }
  return baseline_descriptors(f, cfg.baseline_grid);
}

}  // namespace

void cmd_synth(const PipelineConfig& cfg) {
  if (!cfg.has_synth)
    throw ConfigError("synth: no synth.segments configured");
  auto [frames, labels] = generate_synthetic_mission(cfg.synth);
  export_mission(cfg.dataset_dir, frames, labels);
  std::cout << frames.size() << " frames written to " << cfg.dataset_dir << "\n";
}

void cmd_train_cae(const PipelineConfig& cfg) {
  const std::vector<Frame> raw = load_dataset(cfg);
  std::vector<Frame> frames;
  frames.reserve(raw.size());
  for (const auto& f : raw) frames.push_back(fit_to_arch(cfg, f));

  CaeNetwork net = CaeNetwork::init(cfg.arch);
  const TrainResult result = cae_train(net, frames);
  fs::create_directories(cfg.out_dir);
  save_cae(cae_model_path(cfg), net);
  write_loss_csv(loss_csv_path(cfg), result.epoch_loss);
  std::cout << "trained " << cfg.arch.epochs << " epochs, final loss "
            << result.epoch_loss.back() << "\n";
}

void cmd_fit_vocab(const PipelineConfig& cfg) {
  const std::vector<Frame> frames = load_dataset(cfg);
  CaeNetwork net;
  if (cfg.features == FeaturePath::Cae) net = load_cae(cae_model_path(cfg));

  std::vector<std::vector<double>> pool;
  for (const auto& f : frames)
    for (auto& fv : frame_features(cfg, &net, f)) pool.push_back(std::move(fv.values));

  if (cfg.max_kmeans_features > 0 &&
      pool.size() > static_cast<size_t>(cfg.max_kmeans_features)) {
    // Deterministic stride subsample.
    std::vector<std::vector<double>> sampled;
    const double step = pool.size() / static_cast<double>(cfg.max_kmeans_features);
    sampled.reserve(cfg.max_kmeans_features);
    for (int i = 0; i < cfg.max_kmeans_features; ++i)
      sampled.push_back(std::move(pool[static_cast<size_t>(i * step)]));
    pool = std::move(sampled);
  }

  const Codebook cb = kmeans_fit(pool, cfg.vocab_size, cfg.seed,
                                 cfg.kmeans_max_iters, cfg.kmeans_tol);
  fs::create_directories(cfg.out_dir);
  save_codebook(codebook_path(cfg), cb);
  std::cout << "codebook |V|=" << cb.size() << " dim=" << cb.dim() << " inertia="
            << cb.inertia << "\n";
}

void cmd_run(const PipelineConfig& cfg) {
  const std::vector<Frame> frames = load_dataset(cfg);
  const Codebook cb = load_codebook(codebook_path(cfg));
  CaeNetwork net;
  if (cfg.features == FeaturePath::Cae) {
    net = load_cae(cae_model_path(cfg));
    if (static_cast<int>(cb.dim()) != net.arch.layers.back().out_channels)
      throw ConfigError("codebook dimension " + std::to_string(cb.dim()) +
                        " does not match CAE LCA channels");
  }

  RostModel model(cfg.rost);
  for (const auto& f : frames) {
    const auto features = frame_features(cfg, &net, f);
    model.add_observations(f.t, quantize_features(cb, features));
    model.refine(cfg.budget);
  }
  if (cfg.final_passes < 0) throw ConfigError("final_passes must be >= 0");
  model.refine(cfg.final_passes * static_cast<int>(frames.size()));
  model.consolidate(50);

  fs::create_directories(cfg.out_dir);
  write_timeline_csv(timeline_csv_path(cfg), topic_timeline(model));
  write_perplexity_csv(perplexity_csv_path(cfg), model.perplexity_series());
  model.save(rost_checkpoint_path(cfg));
  std::cout << "processed " << frames.size() << " frames, K=" << model.num_topics()
            << "\n";
}

void cmd_eval(const PipelineConfig& cfg, const std::string& annotations_csv) {
  const LabelTrack annotation = read_labels_csv(annotations_csv);
  const RostModel model = RostModel::load(rost_checkpoint_path(cfg));

  std::vector<int64_t> ts = model.times();
  std::sort(ts.begin(), ts.end());
  if (ts.size() != annotation.size())
    throw DataError("annotation rows (" + std::to_string(annotation.size()) +
                    ") do not match modeled frames (" + std::to_string(ts.size()) +
                    ")");

  std::vector<int> scene;
  scene.reserve(ts.size());
  for (int64_t t : ts) scene.push_back(model.scene_label(t));

  const auto series = read_perplexity_csv(perplexity_csv_path(cfg));
  std::vector<double> values;
  values.reserve(series.size());
  for (const auto& [t, p] : series) values.push_back(p);
  const PerplexityBins bins = bin_perplexity(values);

  MiReport report = mi_report(scene, annotation, bins);
  report.k_discovered = model.num_topics();
  write_report_json(report_json_path(cfg), report);
  timeline_svg(read_timeline_csv(timeline_csv_path(cfg)), series,
               timeline_svg_path(cfg));
  std::cout << "nmi_terrain=" << report.nmi_terrain
            << " nmi_interest=" << report.nmi_interest
            << " K=" << report.k_discovered << "\n";
}

void cmd_report(const PipelineConfig& cfg) {
  timeline_svg(read_timeline_csv(timeline_csv_path(cfg)),
               read_perplexity_csv(perplexity_csv_path(cfg)),
               timeline_svg_path(cfg));
  std::cout << "wrote " << timeline_svg_path(cfg) << "\n";
}

}  // namespace seaterra
