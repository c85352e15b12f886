#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seaterra/frame.hpp"
#include "seaterra/tensor.hpp"

namespace seaterra {

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LayerSpec {
  int filter = 3;        // square kernel side, pixels
  int stride = 2;
  int out_channels = 1;
};

struct ArchSpec {
  int input_h = 400, input_w = 400, input_c = 3;
  std::vector<LayerSpec> layers;
  double weight_decay = 1e-4;
  double learning_rate = 1e-3;
  int batch_size = 8;
  int epochs = 400;
  uint64_t seed = 0;

  // Strided same-padding convolutions; no pooling anywhere.
  static ArchSpec paper_default();
  // Same structure at 64x64 input, 4x4x5 bottleneck; tractable on a desktop.
  static ArchSpec test_scale();

  int num_layers() const { return static_cast<int>(layers.size()); }
  // Spatial dim after layer l (0 = input): ceil-divide by each stride.
  int spatial_h(int l) const;
  int spatial_w(int l) const;
  int channels(int l) const;  // channel count entering layer l (l = num_layers: LCA)
};

// Latent channel activations: the bottleneck tensor, one feature vector
// per spatial cell.
using Lca = Tensor3;

struct DominanceMap {
  std::vector<int> argmax_channel;        // latent h*w, row-major
  std::vector<int> magnitudes;            // per channel: pixels won
  std::vector<Tensor3> normalized;        // per channel: h x w x 1 in [0,1]
  int h = 0, w = 0;
};

// Filter tensor layout: [ky][kx][in_c][out_c], row-major floats.
struct CaeNetwork {
  ArchSpec arch;
  std::vector<std::vector<double>> filters;       // per layer
  std::vector<std::vector<double>> enc_bias;      // per layer, size out_channels
  std::vector<std::vector<double>> dec_bias;      // per layer, size = that layer's in-channels

  static CaeNetwork init(const ArchSpec& arch);  // seeded uniform fan-in/out init

  size_t param_count() const;
};

// Gradients mirror the parameter layout of CaeNetwork.
struct CaeGradients {
  std::vector<std::vector<double>> filters;
  std::vector<std::vector<double>> enc_bias;
  std::vector<std::vector<double>> dec_bias;
};

// One strided same-padding convolution + optional ReLU.
Tensor3 conv_forward(const Tensor3& input, const std::vector<double>& filters,
                     const std::vector<double>& bias, int filter, int stride,
                     int out_channels, bool relu = true);

// Exact adjoint of conv_forward's linear map (encoder filters reused
// transposed), so shapes invert: latent -> the mirrored layer's input.
Tensor3 deconv_forward(const Tensor3& latent, const std::vector<double>& filters,
                       const std::vector<double>& bias, int filter, int stride,
                       int out_h, int out_w, int out_channels, bool relu);

struct ForwardResult {
  Lca lca;
  Tensor3 reconstruction;
};

ForwardResult cae_forward(const CaeNetwork& net, const Tensor3& input);

// Mean-per-element squared reconstruction error averaged over the batch,
// plus weight_decay * sum ||W_l||^2 (biases undecayed).
double cae_loss(const CaeNetwork& net, const std::vector<Tensor3>& batch);

CaeGradients cae_gradients(const CaeNetwork& net, const std::vector<Tensor3>& batch);

struct TrainResult {
  std::vector<double> epoch_loss;
};

// Plain SGD over seeded-shuffled minibatches. Throws NumericError naming
// the epoch if the loss goes non-finite.
TrainResult cae_train(CaeNetwork& net, const std::vector<Frame>& frames);

Lca extract_lca(const CaeNetwork& net, const Frame& frame);

double reconstruction_error(const CaeNetwork& net, const Frame& frame);

DominanceMap channel_dominance(const Lca& lca);

// Binary model file: magic "CAE1", arch header, then f32 parameters.
void save_cae(const std::string& path, const CaeNetwork& net);
CaeNetwork load_cae(const std::string& path);

void write_loss_csv(const std::string& path, const std::vector<double>& losses);

}  // namespace seaterra
