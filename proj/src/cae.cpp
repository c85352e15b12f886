#include "seaterra/cae.hpp"

#include "seaterra/imageio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

namespace seaterra {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Same-padding offsets: pad_total = max((out-1)*stride + k - in, 0),
// split with the smaller half on top/left.
int pad_before(int in, int out, int k, int stride) {
  const int total = std::max((out - 1) * stride + k - in, 0);
  return total / 2;
}

size_t widx(int ky, int kx, int ic, int oc, int k, int in_c, int out_c) {
  return ((static_cast<size_t>(ky) * k + kx) * in_c + ic) * out_c + oc;
}

}  // namespace

ArchSpec ArchSpec::paper_default() {
  ArchSpec a;
  a.input_h = 400;
  a.input_w = 400;
  a.input_c = 3;
  a.layers = {{10, 2, 3}, {10, 2, 3}, {3, 2, 5}, {3, 2, 5}};
  a.epochs = 400;
  return a;
}

ArchSpec ArchSpec::test_scale() {
  ArchSpec a;
  a.input_h = 64;
  a.input_w = 64;
  a.input_c = 3;
  a.layers = {{5, 2, 3}, {5, 2, 3}, {3, 2, 5}, {3, 2, 5}};
  a.epochs = 40;
  return a;
}

int ArchSpec::spatial_h(int l) const {
  int d = input_h;
  for (int i = 0; i < l; ++i) d = ceil_div(d, layers[i].stride);
  return d;
}

int ArchSpec::spatial_w(int l) const {
  int d = input_w;
  for (int i = 0; i < l; ++i) d = ceil_div(d, layers[i].stride);
  return d;
}

int ArchSpec::channels(int l) const {
  return l == 0 ? input_c : layers[l - 1].out_channels;
}

CaeNetwork CaeNetwork::init(const ArchSpec& arch) {
  if (arch.layers.empty())
    throw std::invalid_argument("ArchSpec: no layers");
  for (const auto& l : arch.layers)
    if (l.filter <= 0 || l.stride <= 0 || l.out_channels <= 0)
      throw std::invalid_argument("ArchSpec: non-positive layer parameter");

  CaeNetwork net;
  net.arch = arch;
  std::mt19937_64 rng(arch.seed);
  for (int l = 0; l < arch.num_layers(); ++l) {
    const int k = arch.layers[l].filter;
    const int ic = arch.channels(l);
    const int oc = arch.layers[l].out_channels;
    const int fan_in = k * k * ic;
    const int fan_out = k * k * oc;
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-s, s);
    std::vector<double> w(static_cast<size_t>(k) * k * ic * oc);
    for (auto& v : w) v = u(rng);
    net.filters.push_back(std::move(w));
    net.enc_bias.emplace_back(oc, 0.0);
    net.dec_bias.emplace_back(ic, 0.0);
  }
  return net;
}

size_t CaeNetwork::param_count() const {
  size_t n = 0;
  for (const auto& w : filters) n += w.size();
  for (const auto& b : enc_bias) n += b.size();
  for (const auto& b : dec_bias) n += b.size();
  return n;
}

Tensor3 conv_forward(const Tensor3& input, const std::vector<double>& filters,
                     const std::vector<double>& bias, int filter, int stride,
                     int out_channels, bool relu) {
  const int ic = input.c;
  if (filters.size() != static_cast<size_t>(filter) * filter * ic * out_channels)
    throw std::invalid_argument("conv_forward: filter tensor size mismatch (in=" +
                                input.shape_str() + ")");
  const int oh = ceil_div(input.h, stride);
  const int ow = ceil_div(input.w, stride);
  const int pt = pad_before(input.h, oh, filter, stride);
  const int pl = pad_before(input.w, ow, filter, stride);

  Tensor3 out(oh, ow, out_channels);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int o = 0; o < out_channels; ++o) {
        double acc = bias.empty() ? 0.0 : bias[o];
        for (int ky = 0; ky < filter; ++ky) {
          const int iy = oy * stride - pt + ky;
          if (iy < 0 || iy >= input.h) continue;
          for (int kx = 0; kx < filter; ++kx) {
            const int ix = ox * stride - pl + kx;
            if (ix < 0 || ix >= input.w) continue;
            for (int i = 0; i < ic; ++i)
              acc += input.at(iy, ix, i) *
                     filters[widx(ky, kx, i, o, filter, ic, out_channels)];
          }
        }
        out.at(oy, ox, o) = relu ? std::max(0.0, acc) : acc;
      }
    }
  }
  return out;
}

Tensor3 deconv_forward(const Tensor3& latent, const std::vector<double>& filters,
                       const std::vector<double>& bias, int filter, int stride,
                       int out_h, int out_w, int out_channels, bool relu) {
  const int lc = latent.c;
  if (filters.size() != static_cast<size_t>(filter) * filter * out_channels * lc)
    throw std::invalid_argument("deconv_forward: filter tensor size mismatch");
  if (ceil_div(out_h, stride) != latent.h || ceil_div(out_w, stride) != latent.w)
    throw std::invalid_argument("deconv_forward: latent " + latent.shape_str() +
                                " does not mirror output " +
                                std::to_string(out_h) + "x" + std::to_string(out_w));
  const int pt = pad_before(out_h, latent.h, filter, stride);
  const int pl = pad_before(out_w, latent.w, filter, stride);

  Tensor3 out(out_h, out_w, out_channels);
  if (!bias.empty())
    for (int y = 0; y < out_h; ++y)
      for (int x = 0; x < out_w; ++x)
        for (int i = 0; i < out_channels; ++i) out.at(y, x, i) = bias[i];

  // Scatter: the transpose of conv_forward's gather with the same filters.
  for (int oy = 0; oy < latent.h; ++oy) {
    for (int ox = 0; ox < latent.w; ++ox) {
      for (int o = 0; o < lc; ++o) {
        const double z = latent.at(oy, ox, o);
        if (z == 0.0) continue;
        for (int ky = 0; ky < filter; ++ky) {
          const int iy = oy * stride - pt + ky;
          if (iy < 0 || iy >= out_h) continue;
          for (int kx = 0; kx < filter; ++kx) {
            const int ix = ox * stride - pl + kx;
            if (ix < 0 || ix >= out_w) continue;
            for (int i = 0; i < out_channels; ++i)
              out.at(iy, ix, i) +=
                  z * filters[widx(ky, kx, i, o, filter, out_channels, lc)];
          }
        }
      }
    }
  }
  if (relu)
    for (auto& v : out.data) v = std::max(0.0, v);
  return out;
}

namespace {

struct SampleTrace {
  std::vector<Tensor3> enc_act;  // enc_act[0]=input .. enc_act[L]=LCA
  std::vector<Tensor3> dec_pre;  // pre-activation decoder outputs, by layer id
  std::vector<Tensor3> dec_in;   // dec_in[l]: tensor fed into decoder layer l
  Tensor3 recon;
};

SampleTrace run_sample(const CaeNetwork& net, const Tensor3& input) {
  const ArchSpec& a = net.arch;
  if (input.h != a.input_h || input.w != a.input_w || input.c != a.input_c)
    throw std::invalid_argument("cae: input " + input.shape_str() +
                                " does not match arch input");
  const int L = a.num_layers();
  SampleTrace tr;
  tr.enc_act.reserve(L + 1);
  tr.enc_act.push_back(input);
  for (int l = 0; l < L; ++l)
    tr.enc_act.push_back(conv_forward(tr.enc_act[l], net.filters[l],
                                      net.enc_bias[l], a.layers[l].filter,
                                      a.layers[l].stride,
                                      a.layers[l].out_channels, true));
  tr.dec_pre.resize(L);
  tr.dec_in.resize(L);
  Tensor3 z = tr.enc_act[L];
  for (int l = L - 1; l >= 0; --l) {
    tr.dec_in[l] = z;
    tr.dec_pre[l] = deconv_forward(z, net.filters[l], net.dec_bias[l],
                                   a.layers[l].filter, a.layers[l].stride,
                                   a.spatial_h(l), a.spatial_w(l),
                                   a.channels(l), false);
    if (l > 0) {
      z = tr.dec_pre[l];
      for (auto& v : z.data) v = std::max(0.0, v);
    }
  }
  tr.recon = tr.dec_pre[0];
  return tr;
}

double recon_mse(const Tensor3& recon, const Tensor3& target) {
  double acc = 0;
  for (size_t i = 0; i < recon.data.size(); ++i) {
    const double d = recon.data[i] - target.data[i];
    acc += d * d;
  }
  return acc / recon.data.size();
}

double decay_term(const CaeNetwork& net) {
  double acc = 0;
  for (const auto& w : net.filters)
    for (double v : w) acc += v * v;
  return net.arch.weight_decay * acc;
}

// dW for a conv whose gather pairing is out[oy,ox,o] += in[iy,ix,i]*W;
// `grad_out` sits on the strided side, `in` on the dense side.
void accumulate_filter_grad(const Tensor3& in, const Tensor3& grad_out,
                            std::vector<double>& dw, int filter, int stride) {
  const int pt = pad_before(in.h, grad_out.h, filter, stride);
  const int pl = pad_before(in.w, grad_out.w, filter, stride);
  for (int oy = 0; oy < grad_out.h; ++oy) {
    for (int ox = 0; ox < grad_out.w; ++ox) {
      for (int o = 0; o < grad_out.c; ++o) {
        const double g = grad_out.at(oy, ox, o);
        if (g == 0.0) continue;
        for (int ky = 0; ky < filter; ++ky) {
          const int iy = oy * stride - pt + ky;
          if (iy < 0 || iy >= in.h) continue;
          for (int kx = 0; kx < filter; ++kx) {
            const int ix = ox * stride - pl + kx;
            if (ix < 0 || ix >= in.w) continue;
            for (int i = 0; i < in.c; ++i)
              dw[widx(ky, kx, i, o, filter, in.c, grad_out.c)] +=
                  in.at(iy, ix, i) * g;
          }
        }
      }
    }
  }
}

CaeGradients zero_grads(const CaeNetwork& net) {
  CaeGradients g;
  for (const auto& w : net.filters) g.filters.emplace_back(w.size(), 0.0);
  for (const auto& b : net.enc_bias) g.enc_bias.emplace_back(b.size(), 0.0);
  for (const auto& b : net.dec_bias) g.dec_bias.emplace_back(b.size(), 0.0);
  return g;
}

// Backprop one sample; per-sample gradients are scaled by `scale`
// (1/batch) and accumulated into g.
double backprop_sample(const CaeNetwork& net, const Tensor3& input,
                       CaeGradients& g, double scale) {
  const ArchSpec& a = net.arch;
  const int L = a.num_layers();
  SampleTrace tr = run_sample(net, input);
  const double loss = recon_mse(tr.recon, input);

  // d(mse)/d(recon)
  Tensor3 grad = tr.recon;
  const double k = 2.0 * scale / grad.data.size();
  for (size_t i = 0; i < grad.data.size(); ++i)
    grad.data[i] = k * (tr.recon.data[i] - input.data[i]);

  // Decoder, output layer upward. Decoder layer l maps dec_in[l] (strided
  // grid) to the dense grid of encoder layer l's input.
  for (int l = 0; l < L; ++l) {
    if (l > 0)  // ReLU on all decoder layers except the output one
      for (size_t i = 0; i < grad.data.size(); ++i)
        if (tr.dec_pre[l].data[i] <= 0.0) grad.data[i] = 0.0;

    accumulate_filter_grad(grad, tr.dec_in[l], g.filters[l],
                           a.layers[l].filter, a.layers[l].stride);
    for (int y = 0; y < grad.h; ++y)
      for (int x = 0; x < grad.w; ++x)
        for (int i = 0; i < grad.c; ++i) g.dec_bias[l][i] += grad.at(y, x, i);

    // Adjoint of the scatter is the gather.
    grad = conv_forward(grad, net.filters[l], {}, a.layers[l].filter,
                        a.layers[l].stride, a.layers[l].out_channels, false);
  }

  // grad now sits on the LCA; walk the encoder back down.
  for (int l = L - 1; l >= 0; --l) {
    for (size_t i = 0; i < grad.data.size(); ++i)
      if (tr.enc_act[l + 1].data[i] <= 0.0) grad.data[i] = 0.0;

    accumulate_filter_grad(tr.enc_act[l], grad, g.filters[l],
                           a.layers[l].filter, a.layers[l].stride);
    for (int y = 0; y < grad.h; ++y)
      for (int x = 0; x < grad.w; ++x)
        for (int o = 0; o < grad.c; ++o) g.enc_bias[l][o] += grad.at(y, x, o);

    if (l > 0)
      grad = deconv_forward(grad, net.filters[l], {}, a.layers[l].filter,
                            a.layers[l].stride, a.spatial_h(l), a.spatial_w(l),
                            a.channels(l), false);
  }
  return loss;
}

}  // namespace

ForwardResult cae_forward(const CaeNetwork& net, const Tensor3& input) {
  SampleTrace tr = run_sample(net, input);
  return {tr.enc_act.back(), tr.recon};
}

double cae_loss(const CaeNetwork& net, const std::vector<Tensor3>& batch) {
  if (batch.empty()) throw std::invalid_argument("cae_loss: empty batch");
  double acc = 0;
  for (const auto& x : batch) acc += recon_mse(run_sample(net, x).recon, x);
  return acc / batch.size() + decay_term(net);
}

CaeGradients cae_gradients(const CaeNetwork& net, const std::vector<Tensor3>& batch) {
  if (batch.empty()) throw std::invalid_argument("cae_gradients: empty batch");
  CaeGradients g = zero_grads(net);
  const double scale = 1.0 / batch.size();
  for (const auto& x : batch) backprop_sample(net, x, g, scale);
  const double lam = net.arch.weight_decay;
  for (int l = 0; l < net.arch.num_layers(); ++l)
    for (size_t i = 0; i < net.filters[l].size(); ++i)
      g.filters[l][i] += 2.0 * lam * net.filters[l][i];
  return g;
}

TrainResult cae_train(CaeNetwork& net, const std::vector<Frame>& frames) {
  if (frames.empty()) throw std::invalid_argument("cae_train: no frames");
  const ArchSpec& a = net.arch;
  std::mt19937_64 rng(a.seed + 0x9e3779b97f4a7c15ULL);

  std::vector<size_t> order(frames.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainResult result;
  result.epoch_loss.reserve(a.epochs);
  for (int epoch = 0; epoch < a.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_acc = 0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += a.batch_size) {
      const size_t end = std::min(order.size(), start + a.batch_size);
      CaeGradients g = zero_grads(net);
      const double scale = 1.0 / (end - start);
      double batch_loss = 0;
      for (size_t i = start; i < end; ++i)
        batch_loss += backprop_sample(net, frames[order[i]].pixels, g, scale);
      batch_loss = batch_loss * scale + decay_term(net);
      if (!std::isfinite(batch_loss))
        throw NumericError("cae_train diverged at epoch " + std::to_string(epoch));
      const double lam = a.weight_decay;
      const double eta = a.learning_rate;
      for (int l = 0; l < a.num_layers(); ++l) {
        for (size_t i = 0; i < net.filters[l].size(); ++i)
          net.filters[l][i] -=
              eta * (g.filters[l][i] + 2.0 * lam * net.filters[l][i]);
        for (size_t i = 0; i < net.enc_bias[l].size(); ++i)
          net.enc_bias[l][i] -= eta * g.enc_bias[l][i];
        for (size_t i = 0; i < net.dec_bias[l].size(); ++i)
          net.dec_bias[l][i] -= eta * g.dec_bias[l][i];
      }
      epoch_acc += batch_loss * (end - start);
      seen += end - start;
    }
    result.epoch_loss.push_back(epoch_acc / seen);
  }
  return result;
}

Lca extract_lca(const CaeNetwork& net, const Frame& frame) {
  const ArchSpec& a = net.arch;
  Tensor3 act = frame.pixels;
  if (act.h != a.input_h || act.w != a.input_w || act.c != a.input_c)
    throw std::invalid_argument("extract_lca: frame " + act.shape_str() +
                                " does not match arch input");
  for (int l = 0; l < a.num_layers(); ++l)
    act = conv_forward(act, net.filters[l], net.enc_bias[l], a.layers[l].filter,
                       a.layers[l].stride, a.layers[l].out_channels, true);
  return act;
}

double reconstruction_error(const CaeNetwork& net, const Frame& frame) {
  SampleTrace tr = run_sample(net, frame.pixels);
  return recon_mse(tr.recon, frame.pixels);
}

DominanceMap channel_dominance(const Lca& lca) {
  DominanceMap dm;
  dm.h = lca.h;
  dm.w = lca.w;
  dm.argmax_channel.resize(static_cast<size_t>(lca.h) * lca.w);
  dm.magnitudes.assign(lca.c, 0);

  for (int y = 0; y < lca.h; ++y) {
    for (int x = 0; x < lca.w; ++x) {
      int best = 0;
      for (int ch = 1; ch < lca.c; ++ch)
        if (lca.at(y, x, ch) > lca.at(y, x, best)) best = ch;  // ties: lowest
      dm.argmax_channel[static_cast<size_t>(y) * lca.w + x] = best;
      ++dm.magnitudes[best];
    }
  }

  for (int ch = 0; ch < lca.c; ++ch) {
    double lo = lca.at(0, 0, ch), hi = lo;
    for (int y = 0; y < lca.h; ++y)
      for (int x = 0; x < lca.w; ++x) {
        lo = std::min(lo, lca.at(y, x, ch));
        hi = std::max(hi, lca.at(y, x, ch));
      }
    Tensor3 norm(lca.h, lca.w, 1);
    if (hi > lo)
      for (int y = 0; y < lca.h; ++y)
        for (int x = 0; x < lca.w; ++x)
          norm.at(y, x, 0) = (lca.at(y, x, ch) - lo) / (hi - lo);
    dm.normalized.push_back(std::move(norm));
  }
  return dm;
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

void put_f32(std::ostream& out, double v) {
  float f = static_cast<float>(v);
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

double get_f32(std::istream& in) {
  uint32_t bits = get_u32(in);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void save_cae(const std::string& path, const CaeNetwork& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write: " + path);
  out.write("CAE1", 4);
  const ArchSpec& a = net.arch;
  put_u32(out, a.input_h);
  put_u32(out, a.input_w);
  put_u32(out, a.input_c);
  put_u32(out, a.num_layers());
  for (const auto& l : a.layers) {
    put_u32(out, l.filter);
    put_u32(out, l.stride);
    put_u32(out, l.out_channels);
  }
  put_f32(out, a.weight_decay);
  put_f32(out, a.learning_rate);
  put_u32(out, a.batch_size);
  put_u32(out, a.epochs);
  put_u32(out, static_cast<uint32_t>(a.seed));
  for (int l = 0; l < a.num_layers(); ++l) {
    for (double v : net.filters[l]) put_f32(out, v);
    for (double v : net.enc_bias[l]) put_f32(out, v);
  }
  for (int l = 0; l < a.num_layers(); ++l)
    for (double v : net.dec_bias[l]) put_f32(out, v);
  if (!out) throw DataError("write failed: " + path);
}

CaeNetwork load_cae(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "CAE1", 4) != 0)
    throw DataError("not a CAE1 model file: " + path);
  ArchSpec a;
  a.input_h = get_u32(in);
  a.input_w = get_u32(in);
  a.input_c = get_u32(in);
  const uint32_t n_layers = get_u32(in);
  a.layers.resize(n_layers);
  for (auto& l : a.layers) {
    l.filter = get_u32(in);
    l.stride = get_u32(in);
    l.out_channels = get_u32(in);
  }
  a.weight_decay = get_f32(in);
  a.learning_rate = get_f32(in);
  a.batch_size = get_u32(in);
  a.epochs = get_u32(in);
  a.seed = get_u32(in);

  CaeNetwork net = CaeNetwork::init(a);
  for (int l = 0; l < a.num_layers(); ++l) {
    for (auto& v : net.filters[l]) v = get_f32(in);
    for (auto& v : net.enc_bias[l]) v = get_f32(in);
  }
  for (int l = 0; l < a.num_layers(); ++l)
    for (auto& v : net.dec_bias[l]) v = get_f32(in);
  if (!in) throw DataError("truncated CAE1 model file: " + path);
  return net;
}

void write_loss_csv(const std::string& path, const std::vector<double>& losses) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write: " + path);
  out << "epoch,loss\n";
  out.precision(17);
  for (size_t i = 0; i < losses.size(); ++i) out << i << "," << losses[i] << "\n";
}

}  // namespace seaterra
