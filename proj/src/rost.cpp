#include "seaterra/rost.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "seaterra/imageio.hpp"

namespace seaterra {

RostModel::RostModel(const RostConfig& config) : config_(config), rng_(config.seed) {
  if (config.alpha <= 0 || config.beta <= 0 || config.gamma <= 0)
    throw std::invalid_argument("RostConfig: hyperparameters must be positive");
  if (config.vocab_size < 1 || config.cell_size < 1)
    throw std::invalid_argument("RostConfig: vocab_size and cell_size must be >= 1");
  if (config.refine_recent_bias <= 0 || config.refine_recent_bias > 1)
    throw std::invalid_argument("RostConfig: refine_recent_bias must be in (0,1]");
}

CellIndex RostModel::cell_of(int row, int col, int64_t t) const {
  return {row / config_.cell_size, col / config_.cell_size, t};
}

std::vector<int64_t> RostModel::neighborhood(const CellIndex& cell) const {
  std::vector<int64_t> counts(k_, 0);
  for (int64_t t = cell.t - config_.temporal_window;
       t <= cell.t + config_.temporal_window; ++t) {
    for (int r = cell.row - 1; r <= cell.row + 1; ++r) {
      for (int c = cell.col - 1; c <= cell.col + 1; ++c) {
        auto it = cell_topic_.find({r, c, t});
        if (it == cell_topic_.end()) continue;
        const auto& v = it->second;
        for (size_t k = 0; k < v.size() && k < counts.size(); ++k)
          counts[k] += v[k];
      }
    }
  }
  return counts;
}

std::vector<double> RostModel::conditional(int v,
                                           const std::vector<int64_t>& nbr) const {
  if (v < 0 || v >= config_.vocab_size)
    throw std::invalid_argument("conditional: word id " + std::to_string(v) +
                                " out of range");
  const double beta = config_.beta;
  const double vb = config_.vocab_size * beta;
  const bool capped = config_.topic_cap > 0 && k_ >= config_.topic_cap;
  std::vector<double> w(capped ? k_ : k_ + 1);
  for (int k = 0; k < k_; ++k) {
    const int64_t nk = k < static_cast<int>(nbr.size()) ? nbr[k] : 0;
    w[k] = (word_topic_[k][v] + beta) / (topic_total_[k] + vb) *
           (nk + config_.alpha);
  }
  // A fresh topic is scored like a live topic with zero counts: uniform
  // word term (beta / |V|beta) and the bare alpha seating mass, plus the
  // gamma propensity that controls growth beyond the data's support.
  if (!capped)
    w[k_] = (config_.alpha + config_.gamma) / config_.vocab_size;
  return w;
}

int RostModel::sample_assignment(int v, const CellIndex& cell) {
  const std::vector<double> w = conditional(v, neighborhood(cell));
  double total = 0;
  for (double x : w) total += x;
  double r = std::uniform_real_distribution<double>(0.0, total)(rng_);
  int pick = 0;
  for (; pick + 1 < static_cast<int>(w.size()); ++pick) {
    r -= w[pick];
    if (r <= 0) break;
  }
  return pick;
}

void RostModel::increment(const StoredWord& w, const CellIndex& cell) {
  if (w.z == k_) {  // new topic drawn
    word_topic_.emplace_back(config_.vocab_size, 0);
    topic_total_.push_back(0);
    ++k_;
  }
  ++word_topic_[w.z][w.v];
  ++topic_total_[w.z];
  auto& cv = cell_topic_[cell];
  if (static_cast<int>(cv.size()) <= w.z) cv.resize(w.z + 1, 0);
  ++cv[w.z];
  ++total_words_;
}

void RostModel::decrement(StoredWord& w, const CellIndex& cell) {
  --word_topic_[w.z][w.v];
  --topic_total_[w.z];
  auto& cv = cell_topic_.at(cell);
  --cv[w.z];
  --total_words_;
  const int emptied = topic_total_[w.z] == 0 ? w.z : -1;
  w.z = -1;
  if (emptied >= 0 && config_.topic_cap == 0) retire_topic(emptied);
}

void RostModel::retire_topic(int k) {
  const int last = k_ - 1;
  if (k != last) {
    // Reuse the dead id: move topic `last` into slot k everywhere.
    for (auto& [t, vec] : words_)
      for (auto& w : vec)
        if (w.z == last) w.z = k;
    word_topic_[k] = std::move(word_topic_[last]);
    topic_total_[k] = topic_total_[last];
    for (auto& [cell, cv] : cell_topic_) {
      const int64_t val = last < static_cast<int>(cv.size()) ? cv[last] : 0;
      if (val != 0 || k < static_cast<int>(cv.size())) {
        if (static_cast<int>(cv.size()) <= k) cv.resize(k + 1, 0);
        cv[k] = val;
      }
      if (last < static_cast<int>(cv.size())) cv.resize(last);
    }
  } else {
    for (auto& [cell, cv] : cell_topic_)
      if (last < static_cast<int>(cv.size())) cv.resize(last);
  }
  word_topic_.pop_back();
  topic_total_.pop_back();
  k_ = last;
}

void RostModel::add_observations(int64_t t,
                                 const std::vector<WordObservation>& words) {
  if (words_.count(t))
    throw std::invalid_argument("add_observations: t=" + std::to_string(t) +
                                " already added");
  for (const auto& obs : words)
    if (obs.v < 0 || obs.v >= config_.vocab_size)
      throw std::invalid_argument("add_observations: word id " +
                                  std::to_string(obs.v) + " out of range");
  auto& stored = words_[t];
  times_.push_back(t);
  stored.reserve(words.size());
  for (const auto& obs : words) {
    StoredWord w{obs.v, obs.row, obs.col, -1};
    const CellIndex cell = cell_of(w.row, w.col, t);
    w.z = sample_assignment(w.v, cell);
    increment(w, cell);
    stored.push_back(w);
  }
}

void RostModel::resample_time(int64_t t) {
  auto& stored = words_.at(t);
  for (auto& w : stored) {
    const CellIndex cell = cell_of(w.row, w.col, t);
    decrement(w, cell);
    w.z = sample_assignment(w.v, cell);
    increment(w, cell);
  }
}

void RostModel::refine(int iterations) {
  if (times_.empty()) return;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i < iterations; ++i) {
    int64_t t;
    if (coin(rng_) < config_.refine_recent_bias) {
      t = times_.back();
    } else {
      t = times_[std::uniform_int_distribution<size_t>(0, times_.size() - 1)(rng_)];
    }
    resample_time(t);
  }
}

int RostModel::consolidate(int max_sweeps) {
  for (int s = 0; s < max_sweeps; ++s) {
    int64_t changed = 0;
    for (int64_t t : times_) {
      for (auto& w : words_.at(t)) {
        const CellIndex cell = cell_of(w.row, w.col, t);
        const int before = w.z;
        decrement(w, cell);
        const std::vector<double> weights = conditional(w.v, neighborhood(cell));
        int best = 0;
        for (int k = 1; k < static_cast<int>(weights.size()); ++k)
          if (weights[k] > weights[best]) best = k;
        w.z = best;
        increment(w, cell);
        if (w.z != before) ++changed;
      }
    }
    if (changed == 0) return s + 1;
  }
  return max_sweeps;
}

std::vector<double> RostModel::word_topic_dist(int k) const {
  if (k < 0 || k >= k_)
    throw std::invalid_argument("word_topic_dist: dead or unknown topic " +
                                std::to_string(k));
  const double beta = config_.beta;
  const double denom = topic_total_[k] + config_.vocab_size * beta;
  std::vector<double> p(config_.vocab_size);
  for (int v = 0; v < config_.vocab_size; ++v)
    p[v] = (word_topic_[k][v] + beta) / denom;
  return p;
}

const std::vector<RostModel::StoredWord>& RostModel::words_at(int64_t t) const {
  auto it = words_.find(t);
  if (it == words_.end())
    throw std::invalid_argument("unknown time index " + std::to_string(t));
  return it->second;
}

std::vector<std::pair<WordObservation, int>> RostModel::map_word_labels(
    int64_t t) const {
  const auto& stored = words_at(t);
  std::vector<std::pair<WordObservation, int>> out;
  out.reserve(stored.size());
  for (const auto& w : stored) {
    const auto nbr = neighborhood(cell_of(w.row, w.col, t));
    const auto weights = conditional(w.v, nbr);
    int best = 0;
    for (int k = 1; k < k_; ++k)  // new-topic outcome ignored
      if (weights[k] > weights[best]) best = k;
    out.push_back({{w.v, w.row, w.col, t}, best});
  }
  return out;
}

int RostModel::scene_label(int64_t t) const {
  const auto labels = map_word_labels(t);
  if (labels.empty())
    throw std::invalid_argument("scene_label: no words at t=" + std::to_string(t));
  std::vector<int64_t> votes(k_, 0);
  for (const auto& [w, z] : labels) ++votes[z];
  int best = 0;
  for (int k = 1; k < k_; ++k)
    if (votes[k] > votes[best]) best = k;
  return best;
}

double RostModel::perplexity(int64_t t) const {
  const auto& stored = words_at(t);
  if (stored.empty())
    throw std::invalid_argument("perplexity: no words at t=" + std::to_string(t));
  const double beta = config_.beta;
  const double vb = config_.vocab_size * beta;
  double log_acc = 0;
  for (const auto& w : stored) {
    const auto nbr = neighborhood(cell_of(w.row, w.col, t));
    int64_t nbr_total = 0;
    for (int64_t x : nbr) nbr_total += x;
    const double denom = nbr_total + k_ * config_.alpha;
    double p = 0;
    for (int k = 0; k < k_; ++k)
      p += (word_topic_[k][w.v] + beta) / (topic_total_[k] + vb) *
           (nbr[k] + config_.alpha) / denom;
    log_acc += std::log(p);
  }
  return std::exp(-log_acc / stored.size());
}

std::vector<std::pair<int64_t, double>> RostModel::perplexity_series() const {
  std::vector<int64_t> ts = times_;
  std::sort(ts.begin(), ts.end());
  std::vector<std::pair<int64_t, double>> out;
  out.reserve(ts.size());
  for (int64_t t : ts) out.push_back({t, perplexity(t)});
  return out;
}

void RostModel::validate() const {
  if (static_cast<int>(word_topic_.size()) != k_ ||
      static_cast<int>(topic_total_.size()) != k_)
    throw std::logic_error("K inconsistent with count structures");
  size_t stored = 0;
  std::vector<int64_t> per_topic(k_, 0);
  for (const auto& [t, vec] : words_) {
    stored += vec.size();
    for (const auto& w : vec) {
      if (w.z < 0 || w.z >= k_) throw std::logic_error("assignment out of range");
      ++per_topic[w.z];
    }
  }
  if (stored != total_words_) throw std::logic_error("total word count mismatch");
  for (int k = 0; k < k_; ++k) {
    int64_t row = 0;
    for (int v = 0; v < config_.vocab_size; ++v) {
      if (word_topic_[k][v] < 0) throw std::logic_error("negative word-topic count");
      row += word_topic_[k][v];
    }
    if (row != topic_total_[k]) throw std::logic_error("n[k] != sum_v n[k][v]");
    if (topic_total_[k] != per_topic[k])
      throw std::logic_error("n[k] disagrees with assignments");
    if (config_.topic_cap == 0 && topic_total_[k] < 1)
      throw std::logic_error("live topic with no words");
  }
  int64_t cell_sum = 0;
  for (const auto& [cell, cv] : cell_topic_) {
    for (size_t k = 0; k < cv.size(); ++k) {
      if (cv[k] < 0) throw std::logic_error("negative cell-topic count");
      if (static_cast<int>(k) >= k_ && cv[k] != 0)
        throw std::logic_error("cell count for dead topic");
      cell_sum += cv[k];
    }
  }
  if (cell_sum != static_cast<int64_t>(total_words_))
    throw std::logic_error("cell counts do not partition stored words");
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

void put_u64(std::ostream& out, uint64_t v) {
  put_u32(out, static_cast<uint32_t>(v));
  put_u32(out, static_cast<uint32_t>(v >> 32));
}

uint64_t get_u64(std::istream& in) {
  const uint64_t lo = get_u32(in);
  const uint64_t hi = get_u32(in);
  return lo | (hi << 32);
}

void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

double get_f64(std::istream& in) {
  const uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void RostModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write: " + path);
  out.write("ROST", 4);
  put_f64(out, config_.alpha);
  put_f64(out, config_.beta);
  put_f64(out, config_.gamma);
  put_u32(out, config_.vocab_size);
  put_u32(out, config_.cell_size);
  put_u32(out, config_.temporal_window);
  put_f64(out, config_.refine_recent_bias);
  put_u64(out, config_.seed);
  put_u32(out, config_.topic_cap);
  put_u32(out, k_);
  put_u32(out, static_cast<uint32_t>(times_.size()));
  for (int64_t t : times_) {
    put_u64(out, static_cast<uint64_t>(t));
    const auto& vec = words_.at(t);
    put_u32(out, static_cast<uint32_t>(vec.size()));
    for (const auto& w : vec) {
      put_u32(out, w.v);
      put_u32(out, w.row);
      put_u32(out, w.col);
      put_u32(out, w.z);
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

RostModel RostModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "ROST", 4) != 0)
    throw DataError("not a ROST checkpoint: " + path);
  RostConfig cfg;
  cfg.alpha = get_f64(in);
  cfg.beta = get_f64(in);
  cfg.gamma = get_f64(in);
  cfg.vocab_size = get_u32(in);
  cfg.cell_size = get_u32(in);
  cfg.temporal_window = get_u32(in);
  cfg.refine_recent_bias = get_f64(in);
  cfg.seed = get_u64(in);
  cfg.topic_cap = get_u32(in);

  RostModel m(cfg);
  const int k = get_u32(in);
  m.word_topic_.assign(k, std::vector<int64_t>(cfg.vocab_size, 0));
  m.topic_total_.assign(k, 0);
  m.k_ = k;
  const uint32_t n_times = get_u32(in);
  for (uint32_t i = 0; i < n_times; ++i) {
    const int64_t t = static_cast<int64_t>(get_u64(in));
    m.times_.push_back(t);
    auto& vec = m.words_[t];
    const uint32_t n = get_u32(in);
    vec.reserve(n);
    for (uint32_t j = 0; j < n; ++j) {
      StoredWord w;
      w.v = get_u32(in);
      w.row = get_u32(in);
      w.col = get_u32(in);
      w.z = get_u32(in);
      if (w.z < 0 || w.z >= k) throw DataError("corrupt assignment in " + path);
      ++m.word_topic_[w.z][w.v];
      ++m.topic_total_[w.z];
      auto& cv = m.cell_topic_[m.cell_of(w.row, w.col, t)];
      if (static_cast<int>(cv.size()) <= w.z) cv.resize(w.z + 1, 0);
      ++cv[w.z];
      ++m.total_words_;
      vec.push_back(w);
    }
  }
  if (!in) throw DataError("truncated ROST checkpoint: " + path);
  return m;
}

std::vector<TimelineRow> topic_timeline(const RostModel& model) {
  std::vector<int64_t> ts = model.times();
  std::sort(ts.begin(), ts.end());
  std::vector<TimelineRow> rows;
  for (int64_t t : ts) {
    const auto labels = model.map_word_labels(t);
    if (labels.empty()) continue;
    std::vector<int64_t> votes(model.num_topics(), 0);
    for (const auto& [w, z] : labels) ++votes[z];
    for (int k = 0; k < model.num_topics(); ++k)
      if (votes[k] > 0)
        rows.push_back({t, k, static_cast<double>(votes[k]) / labels.size()});
  }
  return rows;
}

void write_timeline_csv(const std::string& path,
                        const std::vector<TimelineRow>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write: " + path);
  out << "t,topic,proportion\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.t << "," << r.topic << "," << r.proportion << "\n";
}

void write_perplexity_csv(const std::string& path,
                          const std::vector<std::pair<int64_t, double>>& series) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write: " + path);
  out << "t,perplexity\n";
  out.precision(17);
  for (const auto& [t, p] : series) out << t << "," << p << "\n";
}

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::string& header,
                                               size_t fields) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind(header, 0) != 0)
    throw DataError("bad CSV header in " + path + " (expected '" + header + "')");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    size_t start = 0;
    while (true) {
      const size_t comma = line.find(',', start);
      row.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != fields)
      throw DataError("bad CSV row in " + path + ": " + line);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<TimelineRow> read_timeline_csv(const std::string& path) {
  std::vector<TimelineRow> out;
  for (const auto& row : read_csv(path, "t,topic,proportion", 3))
    out.push_back({std::stoll(row[0]), std::stoi(row[1]), std::stod(row[2])});
  return out;
}

std::vector<std::pair<int64_t, double>> read_perplexity_csv(
    const std::string& path) {
  std::vector<std::pair<int64_t, double>> out;
  for (const auto& row : read_csv(path, "t,perplexity", 2))
    out.push_back({std::stoll(row[0]), std::stod(row[1])});
  return out;
}

}  // namespace seaterra
