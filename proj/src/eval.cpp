#include "seaterra/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "seaterra/imageio.hpp"

namespace seaterra {

ContingencyTable contingency(const std::vector<int>& labels_a,
                             const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size())
    throw std::invalid_argument("contingency: length mismatch (" +
                                std::to_string(labels_a.size()) + " vs " +
                                std::to_string(labels_b.size()) + ")");
  if (labels_a.empty()) throw std::invalid_argument("contingency: empty labelings");

  const int ka = *std::max_element(labels_a.begin(), labels_a.end()) + 1;
  const int kb = *std::max_element(labels_b.begin(), labels_b.end()) + 1;
  for (int v : labels_a)
    if (v < 0) throw std::invalid_argument("contingency: negative label");
  for (int v : labels_b)
    if (v < 0) throw std::invalid_argument("contingency: negative label");

  ContingencyTable t;
  t.joint.assign(ka, std::vector<int64_t>(kb, 0));
  t.row_marginal.assign(ka, 0);
  t.col_marginal.assign(kb, 0);
  for (size_t i = 0; i < labels_a.size(); ++i) {
    ++t.joint[labels_a[i]][labels_b[i]];
    ++t.row_marginal[labels_a[i]];
    ++t.col_marginal[labels_b[i]];
    ++t.total;
  }
  return t;
}

double mutual_information(const std::vector<int>& labels_a,
                          const std::vector<int>& labels_b) {
  const ContingencyTable t = contingency(labels_a, labels_b);
  const double n = static_cast<double>(t.total);
  double mi = 0;
  for (size_t a = 0; a < t.joint.size(); ++a) {
    for (size_t b = 0; b < t.joint[a].size(); ++b) {
      const int64_t c = t.joint[a][b];
      if (c == 0) continue;  // 0 log 0 = 0
      const double pxy = c / n;
      mi += pxy * std::log(pxy * n * n /
                           (static_cast<double>(t.row_marginal[a]) *
                            static_cast<double>(t.col_marginal[b])));
    }
  }
  return mi;
}

double entropy(const std::vector<int>& labels) {
  if (labels.empty()) throw std::invalid_argument("entropy: empty labeling");
  std::map<int, int64_t> counts;
  for (int v : labels) ++counts[v];
  const double n = static_cast<double>(labels.size());
  double h = 0;
  for (const auto& [v, c] : counts) {
    const double p = c / n;
    h -= p * std::log(p);
  }
  return h;
}

double normalized_mi(const std::vector<int>& labels_a,
                     const std::vector<int>& labels_b) {
  const double mi = mutual_information(labels_a, labels_b);
  const double hmax = std::max(entropy(labels_a), entropy(labels_b));
  if (hmax == 0) return 0.0;
  return std::clamp(mi / hmax, 0.0, 1.0);
}

PerplexityBins bin_perplexity(const std::vector<double>& series) {
  if (series.empty()) throw std::invalid_argument("bin_perplexity: empty series");
  for (double v : series)
    if (!std::isfinite(v))
      throw std::invalid_argument("bin_perplexity: non-finite value");

  PerplexityBins out;
  const double n = static_cast<double>(series.size());
  double mean = 0;
  for (double v : series) mean += v;
  mean /= n;
  double var = 0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= n;
  out.mean = mean;
  out.stddev = std::sqrt(var);
  out.threshold_medium = mean + out.stddev;
  out.threshold_high = mean + 2 * out.stddev;

  out.bins.reserve(series.size());
  for (double v : series) {
    if (v <= out.threshold_medium)
      out.bins.push_back(PerplexityBin::Low);
    else if (v <= out.threshold_high)
      out.bins.push_back(PerplexityBin::Medium);
    else
      out.bins.push_back(PerplexityBin::High);
  }
  return out;
}

std::vector<int> hungarian_match(const std::vector<std::vector<int64_t>>& score) {
  if (score.empty()) return {};
  const int rows = static_cast<int>(score.size());
  const int cols = static_cast<int>(score[0].size());
  const int n = std::max(rows, cols);

  // Minimization on (max - score), padded square.
  int64_t maxv = 0;
  for (const auto& r : score)
    for (int64_t v : r) maxv = std::max(maxv, v);
  std::vector<std::vector<double>> cost(n + 1, std::vector<double>(n + 1, 0.0));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      cost[i][j] = (i <= rows && j <= cols)
                       ? static_cast<double>(maxv - score[i - 1][j - 1])
                       : static_cast<double>(maxv);

  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::max());
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = std::numeric_limits<double>::max();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0][j] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> match(rows, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] >= 1 && p[j] <= rows && j <= cols) match[p[j] - 1] = j - 1;
  return match;
}

MiReport mi_report(const std::vector<int>& predicted_scene_labels,
                   const LabelTrack& annotation,
                   const PerplexityBins& predicted_bins) {
  if (predicted_scene_labels.size() != annotation.size() ||
      predicted_bins.bins.size() != annotation.size())
    throw std::invalid_argument(
        "mi_report: misaligned inputs (predictions " +
        std::to_string(predicted_scene_labels.size()) + ", bins " +
        std::to_string(predicted_bins.bins.size()) + ", annotations " +
        std::to_string(annotation.size()) + ")");

  MiReport r;
  r.nmi_terrain = normalized_mi(predicted_scene_labels, annotation.terrain);

  std::vector<int> interest(annotation.size()), bins(annotation.size());
  for (size_t i = 0; i < annotation.size(); ++i) {
    interest[i] = static_cast<int>(annotation.interest[i]);
    bins[i] = static_cast<int>(predicted_bins.bins[i]);
  }
  r.nmi_interest = normalized_mi(bins, interest);
  r.threshold_medium = predicted_bins.threshold_medium;
  r.threshold_high = predicted_bins.threshold_high;

  std::set<int> distinct(predicted_scene_labels.begin(), predicted_scene_labels.end());
  r.k_discovered = static_cast<int>(distinct.size());

  // Confusion with columns reordered so the Hungarian-matched topic sits
  // on each terrain's diagonal; unmatched topics follow in id order.
  const ContingencyTable ct = contingency(annotation.terrain, predicted_scene_labels);
  const std::vector<int> match = hungarian_match(ct.joint);
  const int n_topics = static_cast<int>(ct.joint[0].size());
  std::vector<char> taken(n_topics, 0);
  for (int m : match)
    if (m >= 0) taken[m] = 1;
  r.topic_order.clear();
  for (int m : match)
    if (m >= 0) r.topic_order.push_back(m);
  for (int j = 0; j < n_topics; ++j)
    if (!taken[j]) r.topic_order.push_back(j);

  r.confusion.assign(ct.joint.size(), std::vector<int64_t>(n_topics, 0));
  for (size_t a = 0; a < ct.joint.size(); ++a)
    for (int j = 0; j < n_topics; ++j)
      r.confusion[a][j] = ct.joint[a][r.topic_order[j]];
  return r;
}

void write_report_json(const std::string& path, const MiReport& report) {
  nlohmann::json j;
  j["nmi_terrain"] = report.nmi_terrain;
  j["nmi_interest"] = report.nmi_interest;
  j["K_discovered"] = report.k_discovered;
  j["thresholds"] = {{"medium", report.threshold_medium},
                     {"high", report.threshold_high}};
  j["confusion"] = report.confusion;
  j["topic_order"] = report.topic_order;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write: " + path);
  out << j.dump(2) << "\n";
}

namespace {

const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                          "#8172b3", "#937860", "#da8bc3", "#8c8c8c",
                          "#ccb974", "#64b5cd"};
constexpr int kPaletteSize = 10;

}  // namespace

void timeline_svg(const std::vector<TimelineRow>& timeline,
                  const std::vector<std::pair<int64_t, double>>& perplexity,
                  const std::string& out_path) {
  if (timeline.empty()) throw std::invalid_argument("timeline_svg: empty timeline");
  if (perplexity.empty())
    throw std::invalid_argument("timeline_svg: empty perplexity series");

  std::set<int64_t> tset;
  std::set<int> topics;
  std::map<std::pair<int64_t, int>, double> prop;
  for (const auto& r : timeline) {
    tset.insert(r.t);
    topics.insert(r.topic);
    prop[{r.t, r.topic}] = r.proportion;
  }
  const std::vector<int64_t> ts(tset.begin(), tset.end());

  constexpr int W = 900, H1 = 260, H2 = 200, PAD = 50, GAP = 40;
  const int height = H1 + H2 + GAP + 2 * PAD;
  const double x0 = PAD, x1 = W - PAD;
  auto xmap = [&](size_t i) {
    return ts.size() == 1 ? (x0 + x1) / 2
                          : x0 + (x1 - x0) * i / static_cast<double>(ts.size() - 1);
  };

  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write: " + out_path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << PAD << "\" y=\"" << PAD - 20
      << "\" font-family=\"sans-serif\" font-size=\"14\">Topic proportions</text>\n";

  // Stacked bands, lowest topic id at the bottom.
  std::vector<double> base(ts.size(), 0.0);
  const double y_top = PAD, y_bot = PAD + H1;
  auto ymap1 = [&](double frac) { return y_bot - frac * (y_bot - y_top); };
  for (int k : topics) {
    std::string upper, lower;
    std::vector<double> next = base;
    for (size_t i = 0; i < ts.size(); ++i) {
      auto it = prop.find({ts[i], k});
      next[i] = base[i] + (it == prop.end() ? 0.0 : it->second);
    }
    for (size_t i = 0; i < ts.size(); ++i)
      upper += (i ? " " : "") + std::to_string(xmap(i)) + "," +
               std::to_string(ymap1(next[i]));
    for (size_t i = ts.size(); i-- > 0;)
      lower += " " + std::to_string(xmap(i)) + "," + std::to_string(ymap1(base[i]));
    out << "<polygon points=\"" << upper << lower << "\" fill=\""
        << kPalette[k % kPaletteSize] << "\" stroke=\"none\"/>\n";
    base = std::move(next);
  }

  // Perplexity trace with threshold guides.
  std::vector<double> series;
  series.reserve(perplexity.size());
  for (const auto& [t, p] : perplexity) series.push_back(p);
  const PerplexityBins pb = bin_perplexity(series);
  double lo = series[0], hi = series[0];
  for (double v : series) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  hi = std::max({hi, pb.threshold_high});
  if (hi <= lo) hi = lo + 1;
  const double py_top = PAD + H1 + GAP, py_bot = py_top + H2;
  auto ymap2 = [&](double v) {
    return py_bot - (v - lo) / (hi - lo) * (py_bot - py_top);
  };
  auto pxmap = [&](size_t i) {
    return perplexity.size() == 1
               ? (x0 + x1) / 2
               : x0 + (x1 - x0) * i / static_cast<double>(perplexity.size() - 1);
  };
  out << "<text x=\"" << PAD << "\" y=\"" << py_top - 10
      << "\" font-family=\"sans-serif\" font-size=\"14\">Perplexity</text>\n";
  for (double thr : {pb.threshold_medium, pb.threshold_high})
    out << "<line x1=\"" << x0 << "\" y1=\"" << ymap2(thr) << "\" x2=\"" << x1
        << "\" y2=\"" << ymap2(thr)
        << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";
  std::string pts;
  for (size_t i = 0; i < perplexity.size(); ++i)
    pts += (i ? " " : "") + std::to_string(pxmap(i)) + "," +
           std::to_string(ymap2(perplexity[i].second));
  out << "<polyline points=\"" << pts
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n";
  out << "</svg>\n";
  if (!out) throw DataError("write failed: " + out_path);
}

}  // namespace seaterra
