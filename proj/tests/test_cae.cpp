#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "seaterra/cae.hpp"
#include "seaterra/imageio.hpp"
#include "seaterra/synth.hpp"

using namespace seaterra;

namespace {

ArchSpec tiny_arch() {
  ArchSpec a;
  a.input_h = a.input_w = 8;
  a.input_c = 1;
  a.layers = {{3, 2, 2}, {3, 2, 2}};
  a.weight_decay = 1e-3;
  a.seed = 42;
  return a;
}

Tensor3 random_tensor(int h, int w, int c, std::mt19937_64& rng) {
  Tensor3 t(h, w, c);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : t.data) v = u(rng);
  return t;
}

}  // namespace

TEST_CASE("encoder shape chain matches the default arch") {
  const ArchSpec a = ArchSpec::paper_default();
  CHECK(a.spatial_h(0) == 400);
  CHECK(a.spatial_h(1) == 200);
  CHECK(a.spatial_h(2) == 100);
  CHECK(a.spatial_h(3) == 50);
  CHECK(a.spatial_h(4) == 25);
  CHECK(a.channels(4) == 5);
}

TEST_CASE("conv_forward shape arithmetic") {
  std::mt19937_64 rng(0);
  const Tensor3 in = random_tensor(16, 16, 3, rng);
  std::vector<double> w(10 * 10 * 3 * 3, 0.01);
  std::vector<double> b(3, 0.0);
  const Tensor3 out = conv_forward(in, w, b, 10, 2, 3);
  CHECK(out.h == 8);
  CHECK(out.w == 8);
  CHECK(out.c == 3);
}

TEST_CASE("conv_forward: zero input, zero bias gives zero output") {
  Tensor3 in(6, 6, 2);
  std::vector<double> w(3 * 3 * 2 * 4, 0.5);
  std::vector<double> b(4, 0.0);
  const Tensor3 out = conv_forward(in, w, b, 3, 2, 4);
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("1x1 identity kernel with stride 1 is ReLU") {
  std::mt19937_64 rng(1);
  Tensor3 in = random_tensor(5, 5, 1, rng);
  for (auto& v : in.data) v -= 0.5;  // force some negatives
  std::vector<double> w = {1.0};
  std::vector<double> b = {0.0};
  const Tensor3 out = conv_forward(in, w, b, 1, 1, 1);
  for (size_t i = 0; i < in.data.size(); ++i)
    CHECK(out.data[i] == doctest::Approx(std::max(0.0, in.data[i])));
}

TEST_CASE("conv rejects channel mismatch") {
  Tensor3 in(6, 6, 2);
  std::vector<double> w(3 * 3 * 3 * 4, 0.5);  // 3 in-channels, input has 2
  CHECK_THROWS_AS(conv_forward(in, w, {}, 3, 2, 4), std::invalid_argument);
}

TEST_CASE("adjoint identity: <conv(x),y> == <x,deconv(y)>") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int ic = 1 + trial % 3, oc = 1 + (trial / 3) % 3;
    const int k = 2 + trial % 3, stride = 1 + trial % 2;
    Tensor3 x = random_tensor(6, 6, ic, rng);
    std::vector<double> w(static_cast<size_t>(k) * k * ic * oc);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : w) v = u(rng);

    const Tensor3 cx = conv_forward(x, w, {}, k, stride, oc, /*relu=*/false);
    Tensor3 y = random_tensor(cx.h, cx.w, oc, rng);
    const Tensor3 dy = deconv_forward(y, w, {}, k, stride, 6, 6, ic, /*relu=*/false);

    double lhs = 0, rhs = 0;
    for (size_t i = 0; i < cx.data.size(); ++i) lhs += cx.data[i] * y.data[i];
    for (size_t i = 0; i < x.data.size(); ++i) rhs += x.data[i] * dy.data[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("deconv shape mirrors the encoder and zero latent maps to zero") {
  Tensor3 latent(3, 3, 2);
  std::vector<double> w(3 * 3 * 1 * 2, 0.3);
  const Tensor3 out = deconv_forward(latent, w, {}, 3, 2, 6, 6, 1, false);
  CHECK(out.h == 6);
  CHECK(out.w == 6);
  CHECK(out.c == 1);
  for (double v : out.data) CHECK(v == 0.0);

  CHECK_THROWS_AS(deconv_forward(latent, w, {}, 3, 2, 20, 20, 1, false),
                  std::invalid_argument);
}

TEST_CASE("forward produces LCA and reconstruction of the right shapes") {
  ArchSpec a = tiny_arch();
  const CaeNetwork net = CaeNetwork::init(a);
  std::mt19937_64 rng(3);
  const Tensor3 in = random_tensor(8, 8, 1, rng);
  const ForwardResult r = cae_forward(net, in);
  CHECK(r.lca.h == 2);
  CHECK(r.lca.w == 2);
  CHECK(r.lca.c == 2);
  CHECK(r.reconstruction.h == 8);
  CHECK(r.reconstruction.c == 1);
  for (double v : r.lca.data) CHECK(v >= 0.0);
}

TEST_CASE("zero network: reconstruction zero, loss is mean squared input") {
  ArchSpec a = tiny_arch();
  a.weight_decay = 0;
  CaeNetwork net = CaeNetwork::init(a);
  for (auto& w : net.filters) std::fill(w.begin(), w.end(), 0.0);

  Tensor3 in(8, 8, 1, 0.5);
  const ForwardResult r = cae_forward(net, in);
  for (double v : r.reconstruction.data) CHECK(v == 0.0);
  CHECK(cae_loss(net, {in}) == doctest::Approx(0.25));
}

TEST_CASE("loss decay term counts filters only") {
  ArchSpec a;
  a.input_h = a.input_w = 1;
  a.input_c = 1;
  a.layers = {{1, 1, 1}};
  a.weight_decay = 1.0;
  CaeNetwork net = CaeNetwork::init(a);
  net.filters[0] = {2.0};
  net.enc_bias[0] = {0.0};
  net.dec_bias[0] = {0.0};
  Tensor3 zero(1, 1, 1, 0.0);
  // reconstruction term 0 + decay ||W||^2 = 4
  CHECK(cae_loss(net, {zero}) == doctest::Approx(4.0));
}

TEST_CASE("analytic gradients match central finite differences") {
  ArchSpec a = tiny_arch();
  CaeNetwork net = CaeNetwork::init(a);
  std::mt19937_64 rng(5);
  // Nonzero random biases keep every unit off the ReLU kink, where the
  // subgradient and a central difference legitimately disagree.
  std::uniform_real_distribution<double> jiggle(-0.1, 0.1);
  for (auto& layer : net.enc_bias)
    for (auto& b : layer) b = jiggle(rng);
  for (auto& layer : net.dec_bias)
    for (auto& b : layer) b = jiggle(rng);
  std::vector<Tensor3> batch = {random_tensor(8, 8, 1, rng),
                                random_tensor(8, 8, 1, rng)};
  const CaeGradients g = cae_gradients(net, batch);

  const double h = 1e-4;
  double max_rel = 0;
  auto check_param = [&](double& p, double analytic) {
    const double saved = p;
    p = saved + h;
    const double lp = cae_loss(net, batch);
    p = saved - h;
    const double lm = cae_loss(net, batch);
    p = saved;
    const double fd = (lp - lm) / (2 * h);
    const double rel = std::abs(fd - analytic) / std::max(1e-8, std::abs(fd));
    max_rel = std::max(max_rel, std::abs(fd) < 1e-10 && std::abs(analytic) < 1e-10
                                    ? 0.0
                                    : rel);
  };
  for (int l = 0; l < a.num_layers(); ++l) {
    for (size_t i = 0; i < net.filters[l].size(); ++i)
      check_param(net.filters[l][i], g.filters[l][i]);
    for (size_t i = 0; i < net.enc_bias[l].size(); ++i)
      check_param(net.enc_bias[l][i], g.enc_bias[l][i]);
    for (size_t i = 0; i < net.dec_bias[l].size(); ++i)
      check_param(net.dec_bias[l][i], g.dec_bias[l][i]);
  }
  CHECK(max_rel < 1e-3);
}

TEST_CASE("zero input with zero biases is a stationary point") {
  ArchSpec a = tiny_arch();
  a.weight_decay = 0;
  const CaeNetwork net = CaeNetwork::init(a);
  Tensor3 zero(8, 8, 1, 0.0);
  const CaeGradients g = cae_gradients(net, {zero});
  for (const auto& w : g.filters)
    for (double v : w) CHECK(v == 0.0);
  for (const auto& b : g.enc_bias)
    for (double v : b) CHECK(v == 0.0);
}

TEST_CASE("decay-only gradient is 2*lambda*W") {
  ArchSpec a = tiny_arch();
  a.weight_decay = 0.5;
  const CaeNetwork net = CaeNetwork::init(a);
  Tensor3 zero(8, 8, 1, 0.0);  // reconstruction term contributes nothing
  const CaeGradients g = cae_gradients(net, {zero});
  for (int l = 0; l < a.num_layers(); ++l)
    for (size_t i = 0; i < net.filters[l].size(); ++i)
      CHECK(g.filters[l][i] == doctest::Approx(2 * 0.5 * net.filters[l][i]));
}

TEST_CASE("training reduces the loss and is seed-deterministic") {
  SynthSpec spec;
  spec.segments = {{TextureKind::Stripes, 10}, {TextureKind::Checker, 10}};
  spec.height = spec.width = 8;
  spec.seed = 1;
  auto [frames, labels] = generate_synthetic_mission(spec);
  // Grayscale the synthetic frames down to the tiny arch's single channel.
  for (auto& f : frames) {
    Tensor3 g(8, 8, 1);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        g.at(y, x, 0) = (f.pixels.at(y, x, 0) + f.pixels.at(y, x, 1) +
                         f.pixels.at(y, x, 2)) / 3.0;
    f.pixels = g;
  }

  ArchSpec a = tiny_arch();
  a.epochs = 50;
  a.learning_rate = 0.05;
  a.batch_size = 4;
  CaeNetwork net = CaeNetwork::init(a);
  const TrainResult r1 = cae_train(net, frames);
  REQUIRE(r1.epoch_loss.size() == 50);
  CHECK(r1.epoch_loss.back() < r1.epoch_loss.front());

  CaeNetwork net2 = CaeNetwork::init(a);
  const TrainResult r2 = cae_train(net2, frames);
  CHECK(r1.epoch_loss == r2.epoch_loss);

  // Zero learning rate leaves the loss flat.
  ArchSpec a0 = tiny_arch();
  a0.epochs = 5;
  a0.learning_rate = 0.0;
  CaeNetwork net3 = CaeNetwork::init(a0);
  const TrainResult r3 = cae_train(net3, frames);
  for (double l : r3.epoch_loss) CHECK(l == doctest::Approx(r3.epoch_loss[0]));
}

TEST_CASE("extract_lca equals the forward pass LCA") {
  ArchSpec a = tiny_arch();
  const CaeNetwork net = CaeNetwork::init(a);
  std::mt19937_64 rng(9);
  Frame f;
  f.pixels = random_tensor(8, 8, 1, rng);
  const Lca lca = extract_lca(net, f);
  const ForwardResult r = cae_forward(net, f.pixels);
  CHECK(lca.data == r.lca.data);
}

TEST_CASE("reconstruction_error of the zero net on constant input") {
  ArchSpec a = tiny_arch();
  CaeNetwork net = CaeNetwork::init(a);
  for (auto& w : net.filters) std::fill(w.begin(), w.end(), 0.0);
  Frame f;
  f.pixels = Tensor3(8, 8, 1, 0.5);
  CHECK(reconstruction_error(net, f) == doctest::Approx(0.25));
}

TEST_CASE("channel dominance counts and tie rule") {
  Lca lca(5, 5, 5);
  SUBCASE("one channel dominates everywhere") {
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 5; ++x) {
        lca.at(y, x, 0) = 2.0;
        for (int c = 1; c < 5; ++c) lca.at(y, x, c) = 1.0;
      }
    const DominanceMap dm = channel_dominance(lca);
    CHECK(dm.magnitudes == std::vector<int>{25, 0, 0, 0, 0});
  }
  SUBCASE("all channels tied goes to channel 0") {
    for (auto& v : lca.data) v = 1.0;
    const DominanceMap dm = channel_dominance(lca);
    CHECK(dm.magnitudes == std::vector<int>{25, 0, 0, 0, 0});
    // constant channels min-max normalize to zero
    for (const auto& n : dm.normalized)
      for (double v : n.data) CHECK(v == 0.0);
  }
  SUBCASE("magnitudes always partition the grid") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& v : lca.data) v = u(rng);
    const DominanceMap dm = channel_dominance(lca);
    int total = 0;
    for (int m : dm.magnitudes) total += m;
    CHECK(total == 25);
  }
}

TEST_CASE("CAE model file round trip") {
  ArchSpec a = tiny_arch();
  const CaeNetwork net = CaeNetwork::init(a);
  const auto path =
      (std::filesystem::temp_directory_path() / "seaterra_cae_roundtrip.bin").string();
  save_cae(path, net);
  const CaeNetwork back = load_cae(path);
  REQUIRE(back.arch.layers.size() == a.layers.size());
  CHECK(back.arch.input_h == a.input_h);
  for (int l = 0; l < a.num_layers(); ++l)
    for (size_t i = 0; i < net.filters[l].size(); ++i)
      CHECK(back.filters[l][i] ==
            doctest::Approx(static_cast<float>(net.filters[l][i])));
  CHECK_THROWS_AS(load_cae("/nonexistent/model.bin"), DataError);
}
