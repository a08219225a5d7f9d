#include <doctest.h>

#include <cmath>

#include "mv3d/render.hpp"
#include "mv3d/threads.hpp"
#include "mv3d/train.hpp"
#include "mv3d/viewnet.hpp"
#include "mv3d/weights_io.hpp"

using namespace mv3d;
namespace ops = mv3d::ops;

namespace {

// Smallest legal configuration: the five stride-2 layers pin S >= 32, widths
// shrink everything else.
NetConfig tiny_config() {
  NetConfig cfg;
  cfg.image_size = 32;
  cfg.enc_widths = {1, 1, 1, 1, 1};
  cfg.latent_size = 2;
  cfg.angle_width = 2;
  cfg.dec_fc_widths = {2, 2, 1};
  return cfg;
}

NetConfig small_config() {
  NetConfig cfg;
  cfg.enc_widths = {4, 4, 8, 8, 8};
  cfg.latent_size = 16;
  cfg.angle_width = 8;
  cfg.dec_fc_widths = {16, 16, 8};
  return cfg;
}

template <typename T>
TensorT<T> random_image(int s, SplitMix64& rng) {
  TensorT<T> t({3, s, s});
  for (auto& v : t.data) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  return t;
}

}  // namespace

TEST_CASE("viewpoint encoding values and continuity") {
  const ViewpointEncoding a = encode_viewpoint({0, 0, 2.0f});
  CHECK(a[0] == doctest::Approx(0.0f));
  CHECK(a[1] == doctest::Approx(1.0f));
  CHECK(a[2] == doctest::Approx(0.0f));
  CHECK(a[3] == doctest::Approx(1.0f));
  CHECK(a[4] == doctest::Approx(0.0f));

  const ViewpointEncoding b = encode_viewpoint({90, 0, 2.3f});
  CHECK(b[0] == doctest::Approx(1.0f));
  CHECK(b[1] == doctest::Approx(0.0f).epsilon(1e-6));
  CHECK(b[4] == doctest::Approx(1.0f));

  // sin/cos pairs stay on the unit circle
  for (float az = 0; az < 360; az += 37) {
    const ViewpointEncoding e = encode_viewpoint({az, 21, 1.8f});
    CHECK(e[0] * e[0] + e[1] * e[1] == doctest::Approx(1.0f).epsilon(1e-6));
    CHECK(e[2] * e[2] + e[3] * e[3] == doctest::Approx(1.0f).epsilon(1e-6));
  }

  // no wrap discontinuity
  const float eps = 0.01f;
  const ViewpointEncoding lo = encode_viewpoint({eps, 0, 2.0f});
  const ViewpointEncoding hi = encode_viewpoint({360 - eps, 0, 2.0f});
  CHECK(std::abs(lo[0] - hi[0]) < 1e-3f);
  CHECK(std::abs(lo[1] - hi[1]) < 1e-3f);
}

TEST_CASE("net config validation") {
  CHECK_THROWS_AS(
      [] {
        NetConfig cfg = tiny_config();
        cfg.image_size = 8;  // five stride-2 halvings do not fit
        cfg.validate();
      }(),
      ConfigError);
  CHECK_THROWS_AS(
      [] {
        NetConfig cfg = tiny_config();
        cfg.image_size = 48;  // not a power of two
        cfg.validate();
      }(),
      ConfigError);
  CHECK_THROWS_AS(
      [] {
        NetConfig cfg = tiny_config();
        cfg.dec_fc_widths[2] = 7;  // reshape mismatch
        cfg.validate();
      }(),
      ConfigError);
  CHECK_NOTHROW(NetConfig::desk().validate());
  CHECK_NOTHROW(NetConfig::paper_scale().validate());
}

TEST_CASE("encode shape contract, zero propagation, input validation") {
  ViewNet net(small_config());  // zero weights
  Graph g;
  auto z = net.encode(g, g.leaf(Tensor({3, 32, 32})));
  CHECK(g.value(z).shape == std::vector<int>{16});
  for (float v : g.value(z).data) CHECK(v == 0.0f);  // zero image, zero weights

  CHECK_THROWS_WITH_AS(net.encode(g, g.leaf(Tensor({3, 16, 16}))),
                       doctest::Contains("expected image shape"), std::invalid_argument);
}

TEST_CASE("decode output range, spatial size, determinism") {
  ViewNet net(small_config());
  net.init_he(7);
  SplitMix64 rng(1);
  const Tensor image = random_image<float>(32, rng);
  const Tensor theta = tensor_from_encoding(encode_viewpoint({123, 17, 2.1f}));

  auto run = [&] {
    Graph g;
    auto z = net.encode(g, g.leaf(image));
    auto out = net.decode(g, z, g.leaf(theta));
    return std::make_pair(g.value(out.rgb), g.value(out.depth));
  };
  const auto [rgb, depth] = run();
  CHECK(rgb.shape == std::vector<int>{3, 32, 32});
  CHECK(depth.shape == std::vector<int>{1, 32, 32});
  for (float v : rgb.data) {
    CHECK(v > -1.0f);
    CHECK(v < 1.0f);
  }
  const auto [rgb2, depth2] = run();
  CHECK(rgb.data == rgb2.data);  // bit-identical
  CHECK(depth.data == depth2.data);

  // full forward stays finite with He weights on [-1,1] inputs
  ViewNet desk(NetConfig::desk());
  desk.init_he(3);
  Graph g;
  auto z = desk.encode(g, g.leaf(random_image<float>(32, rng)));
  auto out = desk.decode(g, z, g.leaf(theta));
  auto loss = loss_eq1(g, out.rgb, out.depth, g.leaf(random_image<float>(32, rng)),
                       g.leaf(Tensor({1, 32, 32})), 0.1f);
  desk.params().zero_grads();
  g.backward(loss);
  CHECK(std::isfinite(g.value(loss).data[0]));
  for (const auto& p : desk.params()) {
    for (float v : p.grad.data) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("viewpoint continuity smoke check on an untrained net") {
  ViewNet net(small_config());
  net.init_he(11);
  SplitMix64 rng(2);
  const Tensor image = random_image<float>(32, rng);
  const LatentCode z = [&] {
    Graph g;
    return g.value(net.encode(g, g.leaf(image))).data;
  }();
  const Prediction a = decode_latent(net, z, {100, 10, 2.0f});
  const Prediction b = decode_latent(net, z, {101, 10, 2.0f});
  int max_delta = 0;
  for (std::size_t i = 0; i < a.rgb.px.size(); ++i) {
    max_delta = std::max(max_delta, std::abs(static_cast<int>(a.rgb.px[i]) - b.rgb.px[i]));
  }
  CHECK(max_delta < 128);  // one degree never flips the image wholesale
}

TEST_CASE("loss arithmetic") {
  SUBCASE("zero for identical prediction") {
    Graph g;
    SplitMix64 rng(3);
    const Tensor rgb = random_image<float>(32, rng);
    Tensor depth({1, 32, 32});
    for (auto& v : depth.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    auto loss = loss_eq1(g, g.leaf(rgb), g.leaf(depth), g.leaf(rgb), g.leaf(depth), 0.1f);
    CHECK(g.value(loss).data[0] == 0.0f);
  }

  SUBCASE("single pixel rgb error (1,0,0) and depth error 0.5 at lambda 0.1") {
    Graph g;
    auto pr = g.leaf(Tensor({3, 1, 1}, {1.0f, 0.0f, 0.0f}));
    auto tr = g.leaf(Tensor({3, 1, 1}, {0.0f, 0.0f, 0.0f}));
    auto pd = g.leaf(Tensor({1, 1, 1}, {0.5f}));
    auto td = g.leaf(Tensor({1, 1, 1}, {0.0f}));
    auto loss = loss_eq1(g, pr, pd, tr, td, 0.1f);
    CHECK(g.value(loss).data[0] == doctest::Approx(1.05f).epsilon(1e-7));
  }

  SUBCASE("doubling lambda doubles only the depth term") {
    SplitMix64 rng(4);
    const Tensor pr = random_image<float>(32, rng), tr = random_image<float>(32, rng);
    Tensor pd({1, 32, 32}), td({1, 32, 32});
    for (auto& v : pd.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& v : td.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    auto eval = [&](float lambda) {
      Graph g;
      return static_cast<double>(g.value(loss_eq1(g, g.leaf(pr), g.leaf(pd), g.leaf(tr),
                                                  g.leaf(td), lambda)).data[0]);
    };
    const double l0 = eval(0.0f), l1 = eval(0.1f), l2 = eval(0.2f);
    CHECK(l2 - l0 == doctest::Approx(2.0 * (l1 - l0)).epsilon(1e-5));
  }

  SUBCASE("shape mismatch is rejected") {
    Graph g;
    auto a = g.leaf(Tensor({3, 2, 2}));
    auto d = g.leaf(Tensor({1, 2, 2}));
    auto tr = g.leaf(Tensor({3, 4, 4}));
    CHECK_THROWS_AS(loss_eq1(g, a, d, tr, d, 0.1f), std::invalid_argument);
    CHECK_THROWS_AS(loss_eq1(g, a, d, a, d, -0.5f), std::invalid_argument);
  }
}

TEST_CASE("adversarial losses at D == 0.5 and alpha = 0") {
  NetConfig cfg = small_config();
  cfg.adversarial = true;
  DiscrNet discr(cfg);  // zero weights: logits are exactly 0, D outputs 0.5
  SplitMix64 rng(5);

  Graph g;
  auto input = g.leaf(random_image<float>(32, rng));
  auto real = g.leaf(random_image<float>(32, rng));
  auto fake = g.leaf(random_image<float>(32, rng));
  const auto losses = adversarial_losses(g, discr, input, real, fake);
  CHECK(g.value(losses.discr).data[0] == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-6));
  CHECK(g.value(losses.adv).data[0] == doctest::Approx(std::log(2.0)).epsilon(1e-6));

  // generator total with alpha = 0 equals the plain reconstruction loss
  auto eq1 = loss_eq1(g, fake, g.leaf(Tensor({1, 32, 32})), real, g.leaf(Tensor({1, 32, 32})),
                      0.1f);
  auto total = ops::add(g, eq1, ops::scale(g, losses.adv, 0.0f));
  CHECK(g.value(total).data[0] == g.value(eq1).data[0]);

  // with symmetric zero weights the real/fake bias gradients cancel exactly
  discr.params().zero_grads();
  g.backward(losses.discr);
  double gnorm = 0;
  for (const auto& p : discr.params()) {
    for (float v : p.grad.data) gnorm += std::abs(v);
  }
  CHECK(gnorm == 0.0);

  // a non-degenerate discriminator receives gradient end to end
  DiscrNet live(cfg);
  live.init_he(99);
  Graph g2;
  auto input2 = g2.leaf(random_image<float>(32, rng));
  auto real2 = g2.leaf(random_image<float>(32, rng));
  auto fake2 = g2.leaf(random_image<float>(32, rng));
  const auto live_losses = adversarial_losses(g2, live, input2, real2, fake2);
  live.params().zero_grads();
  g2.backward(live_losses.discr);
  double live_gnorm = 0;
  for (const auto& p : live.params()) {
    for (float v : p.grad.data) live_gnorm += std::abs(v);
  }
  CHECK(live_gnorm > 0.0);
}

TEST_CASE("end-to-end gradients match 64-bit finite differences") {
  ViewNetT<double> net(tiny_config());
  net.init_he(21);
  SplitMix64 rng(6);
  Tensor64 image({3, 32, 32});
  for (auto& v : image.data) v = rng.uniform(-1.0, 1.0);
  Tensor64 target_rgb({3, 32, 32});
  for (auto& v : target_rgb.data) v = rng.uniform(-1.0, 1.0);
  Tensor64 target_depth({1, 32, 32});
  for (auto& v : target_depth.data) v = rng.uniform(-1.0, 1.0);
  const ViewpointEncoding enc = encode_viewpoint({200, 25, 2.2f});
  Tensor64 theta({5});
  for (int i = 0; i < 5; ++i) theta.data[i] = enc[i];

  auto loss_value = [&] {
    GraphT<double> g;
    auto z = net.encode(g, g.leaf(image));
    auto out = net.decode(g, z, g.leaf(theta));
    return g.value(loss_eq1(g, out.rgb, out.depth, g.leaf(target_rgb), g.leaf(target_depth),
                            0.1)).data[0];
  };

  net.params().zero_grads();
  {
    GraphT<double> g;
    auto z = net.encode(g, g.leaf(image));
    auto out = net.decode(g, z, g.leaf(theta));
    g.backward(loss_eq1(g, out.rgb, out.depth, g.leaf(target_rgb), g.leaf(target_depth), 0.1));
  }

  // The end-to-end surface is piecewise smooth: a parameter step of h shifts
  // every downstream pre-activation, so h must be small enough that no
  // leaky-relu kink is crossed. 1e-5 keeps the crossing probability
  // negligible while 64-bit arithmetic keeps roundoff far below tolerance.
  const double h = 1e-5;
  for (auto& p : net.params()) {
    for (std::int64_t j = 0; j < p.value.numel(); ++j) {
      const double keep = p.value.data[j];
      p.value.data[j] = keep + h;
      const double fp = loss_value();
      p.value.data[j] = keep - h;
      const double fm = loss_value();
      p.value.data[j] = keep;
      const double fd = (fp - fm) / (2.0 * h);
      const double a = p.grad.data[j];
      const double scale = std::max({std::abs(a), std::abs(fd), 1e-6});
      INFO(p.name, "[", j, "]: analytic ", a, " fd ", fd);
      REQUIRE(std::abs(a - fd) / scale < 1e-4);
    }
  }
}

TEST_CASE("train sample content depends only on (seed, index)") {
  const auto objects = generate_object_set(ObjectFamily::Vehicle, 4, 9);
  RenderConfig cfg;
  const TrainSample a = make_train_sample(objects, derive_seed(42, 17), cfg, 32, nullptr);
  const TrainSample b = make_train_sample(objects, derive_seed(42, 17), cfg, 32, nullptr);
  CHECK(a.input_rgb.data == b.input_rgb.data);
  CHECK(a.target_rgb.data == b.target_rgb.data);
  CHECK(a.target_depth.data == b.target_depth.data);
  CHECK(a.output_encoding == b.output_encoding);

  const TrainSample c = make_train_sample(objects, derive_seed(42, 18), cfg, 32, nullptr);
  CHECK(a.input_rgb.data != c.input_rgb.data);

  // normalization: pixels in [-1,1], background depth exactly +1
  for (float v : a.input_rgb.data) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
  float depth_max = -2;
  for (float v : a.target_depth.data) depth_max = std::max(depth_max, v);
  CHECK(depth_max == 1.0f);
}

TEST_CASE("identically seeded training runs are bit-identical") {
  const auto objects = generate_object_set(ObjectFamily::Vehicle, 3, 12);
  RenderConfig rcfg;
  TrainOptions opts;
  opts.seed = 5;
  opts.steps = 8;
  opts.batch = 2;
  opts.lr = 1e-3f;

  auto run = [&] {
    ViewNet net(small_config());
    net.init_he(5);
    Trainer trainer(net, nullptr, objects, rcfg, opts);
    const TrainResult r = trainer.run();
    return std::make_pair(r.loss_log, snapshot(net.params()));
  };
  const auto [log_a, params_a] = run();
  const auto [log_b, params_b] = run();
  REQUIRE(log_a.size() == 8);
  for (std::size_t i = 0; i < log_a.size(); ++i) {
    CHECK(log_a[i].step == log_b[i].step);
    CHECK(log_a[i].loss == log_b[i].loss);
  }
  for (std::size_t i = 0; i < params_a.size(); ++i) {
    CHECK(params_a[i].value.data == params_b[i].value.data);
  }
}

TEST_CASE("training is invariant to the render worker count") {
  const auto objects = generate_object_set(ObjectFamily::Vehicle, 3, 13);
  RenderConfig rcfg;
  TrainOptions opts;
  opts.seed = 6;
  opts.steps = 3;
  opts.batch = 4;

  auto run = [&] {
    ViewNet net(small_config());
    net.init_he(6);
    Trainer trainer(net, nullptr, objects, rcfg, opts);
    trainer.run();
    return snapshot(net.params());
  };
  set_thread_count(1);
  const auto seq = run();
  set_thread_count(3);
  const auto par = run();
  set_thread_count(1);
  for (std::size_t i = 0; i < seq.size(); ++i) CHECK(seq[i].value.data == par[i].value.data);
}

TEST_CASE("lambda = 0 silences the depth head but color still trains") {
  ViewNet net(small_config());
  net.init_he(8);
  const auto objects = generate_object_set(ObjectFamily::Vehicle, 2, 14);
  RenderConfig rcfg;

  // depth-only weights in the output layer get zero gradient at lambda 0
  {
    Graph g;
    const TrainSample s = make_train_sample(objects, derive_seed(1, 0), rcfg, 32, nullptr);
    auto z = net.encode(g, g.leaf(s.input_rgb));
    auto out = net.decode(g, z, g.leaf(tensor_from_encoding(s.output_encoding)));
    auto loss = loss_eq1(g, out.rgb, out.depth, g.leaf(s.target_rgb), g.leaf(s.target_depth),
                         0.0f);
    net.params().zero_grads();
    g.backward(loss);
    Parameter* up4 = net.params().find("dec.up4.w");
    REQUIRE(up4 != nullptr);
    const int cin = up4->value.shape[1];
    double depth_channel = 0, rgb_channels = 0;
    for (int ic = 0; ic < cin; ++ic) {
      for (int ky = 0; ky < 5; ++ky) {
        for (int kx = 0; kx < 5; ++kx) {
          depth_channel += std::abs(up4->grad.at(3, ic, ky, kx));
          rgb_channels += std::abs(up4->grad.at(0, ic, ky, kx));
        }
      }
    }
    CHECK(depth_channel == 0.0);
    CHECK(rgb_channels > 0.0);
  }

  // color loss still decreases over a short lambda = 0 run
  TrainOptions opts;
  opts.seed = 77;
  opts.steps = 150;
  opts.batch = 4;
  opts.lr = 1e-3f;
  NetConfig cfg = small_config();
  cfg.lambda = 0.0f;
  ViewNet net2(cfg);
  net2.init_he(9);
  Trainer trainer(net2, nullptr, objects, rcfg, opts);
  const TrainResult r = trainer.run();
  double head = 0, tail = 0;
  for (int i = 0; i < 20; ++i) head += r.loss_log[i].loss;
  for (int i = 0; i < 20; ++i) tail += r.loss_log[r.loss_log.size() - 1 - i].loss;
  CHECK(tail < head);
}

TEST_CASE("checkpoint resume reproduces an uninterrupted run") {
  const auto objects = generate_object_set(ObjectFamily::Vehicle, 3, 15);
  RenderConfig rcfg;
  const std::string ckpt = "resume_test_checkpoint.mv3d";

  TrainOptions full;
  full.seed = 30;
  full.steps = 10;
  full.batch = 2;
  ViewNet net_a(small_config());
  net_a.init_he(30);
  Trainer tr_a(net_a, nullptr, objects, rcfg, full);
  const TrainResult ra = tr_a.run();

  TrainOptions half = full;
  half.steps = 5;
  ViewNet net_b(small_config());
  net_b.init_he(30);
  Trainer tr_b(net_b, nullptr, objects, rcfg, half);
  tr_b.run();
  tr_b.save_checkpoint(ckpt);

  ViewNet net_c(small_config());
  Trainer tr_c(net_c, nullptr, objects, rcfg, full);
  tr_c.load_checkpoint(ckpt);
  CHECK(tr_c.current_step() == 5);
  const TrainResult rc = tr_c.run();

  REQUIRE(!rc.loss_log.empty());
  CHECK(rc.loss_log.front().step == 6);
  CHECK(rc.loss_log.back().loss == ra.loss_log.back().loss);
  const auto pa = snapshot(net_a.params());
  const auto pc = snapshot(net_c.params());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].value.data == pc[i].value.data);
  std::remove(ckpt.c_str());
}

TEST_CASE("adversarial smoke training stays finite") {
  NetConfig cfg = small_config();
  cfg.adversarial = true;
  ViewNet net(cfg);
  net.init_he(40);
  DiscrNet discr(cfg);
  discr.init_he(41);
  const auto objects = generate_object_set(ObjectFamily::Vehicle, 2, 16);
  RenderConfig rcfg;
  TrainOptions opts;
  opts.seed = 50;
  opts.steps = 6;
  opts.batch = 2;
  Trainer trainer(net, &discr, objects, rcfg, opts);
  const TrainResult r = trainer.run();
  REQUIRE(r.loss_log.size() == 6);
  for (const auto& e : r.loss_log) CHECK(std::isfinite(e.loss));
}
