#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "mv3d/camera.hpp"
#include "mv3d/errors.hpp"
#include "mv3d/graph.hpp"
#include "mv3d/image.hpp"
#include "mv3d/init.hpp"
#include "mv3d/ops.hpp"

namespace mv3d {

// Encoder-decoder layout. Five stride-2 convolutions (5x5 filters on the two
// outer layers, 3x3 on the three deeper ones) shrink the image to S/32, one
// fully connected layer produces the latent code; the decoder processes the
// viewpoint encoding in three FC layers, concatenates it with the latent,
// runs three joint FC layers and five up-convolutions (zero-insertion 2x
// upsampling + convolution) back to S, with a 4-channel tanh head split into
// RGB and depth.
struct NetConfig {
  int image_size = 32;
  std::array<int, 5> enc_widths{16, 32, 64, 128, 128};
  int latent_size = 256;
  int angle_width = 64;
  std::array<int, 3> dec_fc_widths{256, 256, 128};
  float lambda = 0.1f;
  float leaky_slope = 0.2f;
  bool adversarial = false;
  float alpha = 0.01f;

  int spatial_base() const { return image_size / 32; }

  void validate() const {
    if (image_size < 32 || (image_size & (image_size - 1)) != 0) {
      throw ConfigError("image_size " + std::to_string(image_size) +
                        " must be a power of two >= 32 (five stride-2 layers)");
    }
    for (int w : enc_widths) {
      if (w < 1) throw ConfigError("encoder widths must be positive");
    }
    if (latent_size < 1 || angle_width < 1) {
      throw ConfigError("latent/angle widths must be positive");
    }
    const int base = spatial_base();
    if (dec_fc_widths[0] < 1 || dec_fc_widths[1] < 1) {
      throw ConfigError("decoder FC widths must be positive");
    }
    if (dec_fc_widths[2] != enc_widths[4] * base * base) {
      throw ConfigError("dec_fc_widths[2] = " + std::to_string(dec_fc_widths[2]) +
                        " must equal enc_widths[4]*(S/32)^2 = " +
                        std::to_string(enc_widths[4] * base * base));
    }
  }

  static NetConfig desk() { return NetConfig{}; }

  static NetConfig paper_scale() {
    NetConfig c;
    c.image_size = 128;
    c.enc_widths = {64, 128, 256, 512, 512};
    c.latent_size = 1024;
    c.angle_width = 64;
    c.dec_fc_widths = {1024, 1024, 512 * 4 * 4};
    return c;
  }
};

inline constexpr std::array<int, 5> kEncoderFilter{5, 5, 3, 3, 3};
inline constexpr std::array<int, 5> kDecoderFilter{3, 3, 3, 5, 5};  // mirrored

// (sin az, cos az, sin el, cos el, (r - 2.0)/0.3): angles via sine/cosine to
// stay continuous across the 360-degree wrap, distance centered on the
// sampling midpoint so all five inputs live in [-1,1].
using ViewpointEncoding = std::array<float, 5>;
ViewpointEncoding encode_viewpoint(const Viewpoint& vp);

using LatentCode = std::vector<float>;

namespace detail {

// Named layers over a ParamSet with a per-graph leaf cache, so each
// parameter appears as exactly one leaf per graph no matter how often the
// net is applied in it.
template <typename T>
class LayerStack {
 public:
  using NodeId = typename GraphT<T>::NodeId;

  void add_layer(ParamSetT<T>& set, const std::string& name, std::vector<int> weight_shape) {
    const int out = weight_shape[0];
    set.add(name + ".w", TensorT<T>(std::move(weight_shape)));
    set.add(name + ".b", TensorT<T>({out}));
  }

  NodeId leaf(GraphT<T>& g, ParamSetT<T>& set, const std::string& name) {
    if (graph_id_ != g.id()) {
      cache_.clear();
      graph_id_ = g.id();
    }
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    ParameterT<T>* p = set.find(name);
    const NodeId id = g.param(*p);
    cache_.emplace(name, id);
    return id;
  }

 private:
  std::unordered_map<std::string, NodeId> cache_;
  std::uint64_t graph_id_ = 0;
};

}  // namespace detail

template <typename T>
class ViewNetT {
 public:
  using NodeId = typename GraphT<T>::NodeId;

  explicit ViewNetT(NetConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const int base = cfg_.spatial_base();
    int ch = 3;
    for (int i = 0; i < 5; ++i) {
      const int k = kEncoderFilter[i];
      stack_.add_layer(params_, "enc.conv" + std::to_string(i), {cfg_.enc_widths[i], ch, k, k});
      ch = cfg_.enc_widths[i];
    }
    stack_.add_layer(params_, "enc.fc", {cfg_.latent_size, ch * base * base});

    int aw = 5;
    for (int i = 0; i < 3; ++i) {
      stack_.add_layer(params_, "dec.angle" + std::to_string(i), {cfg_.angle_width, aw});
      aw = cfg_.angle_width;
    }
    int jw = cfg_.latent_size + cfg_.angle_width;
    for (int i = 0; i < 3; ++i) {
      stack_.add_layer(params_, "dec.joint" + std::to_string(i), {cfg_.dec_fc_widths[i], jw});
      jw = cfg_.dec_fc_widths[i];
    }
    const std::array<int, 6> dec_ch{cfg_.enc_widths[4], cfg_.enc_widths[3], cfg_.enc_widths[2],
                                    cfg_.enc_widths[1], cfg_.enc_widths[0], 4};
    for (int i = 0; i < 5; ++i) {
      const int k = kDecoderFilter[i];
      stack_.add_layer(params_, "dec.up" + std::to_string(i), {dec_ch[i + 1], dec_ch[i], k, k});
    }
  }

  // He-initialized weights, zero biases; one derived seed per parameter.
  void init_he(std::uint64_t seed) {
    std::uint64_t idx = 0;
    for (auto& p : params_) {
      if (p.name.ends_with(".w")) p.value = he_init<T>(p.value.shape, derive_seed(seed, idx));
      ++idx;
    }
  }

  NodeId encode(GraphT<T>& g, NodeId image) {
    const auto& shape = g.value(image).shape;
    if (shape != std::vector<int>{3, cfg_.image_size, cfg_.image_size}) {
      throw std::invalid_argument("encode: expected image shape [3," +
                                  std::to_string(cfg_.image_size) + "," +
                                  std::to_string(cfg_.image_size) + "], got " + shape_str(shape));
    }
    NodeId h = image;
    for (int i = 0; i < 5; ++i) {
      const int k = kEncoderFilter[i];
      const std::string layer = "enc.conv" + std::to_string(i);
      h = ops::conv2d(g, h, w(g, layer), b(g, layer), 2, (k - 1) / 2);
      h = ops::leaky_relu(g, h, T(cfg_.leaky_slope));
    }
    h = ops::reshape(g, h, {static_cast<int>(g.value(h).numel())});
    h = ops::fully_connected(g, h, w(g, "enc.fc"), b(g, "enc.fc"));
    return ops::leaky_relu(g, h, T(cfg_.leaky_slope));
  }

  struct Decoded {
    NodeId rgb;
    NodeId depth;
  };

  Decoded decode(GraphT<T>& g, NodeId latent, NodeId theta) {
    NodeId a = theta;
    for (int i = 0; i < 3; ++i) {
      const std::string layer = "dec.angle" + std::to_string(i);
      a = ops::fully_connected(g, a, w(g, layer), b(g, layer));
      a = ops::leaky_relu(g, a, T(cfg_.leaky_slope));
    }
    NodeId h = ops::concat(g, latent, a);
    for (int i = 0; i < 3; ++i) {
      const std::string layer = "dec.joint" + std::to_string(i);
      h = ops::fully_connected(g, h, w(g, layer), b(g, layer));
      h = ops::leaky_relu(g, h, T(cfg_.leaky_slope));
    }
    const int base = cfg_.spatial_base();
    h = ops::reshape(g, h, {cfg_.enc_widths[4], base, base});
    for (int i = 0; i < 5; ++i) {
      const int k = kDecoderFilter[i];
      const std::string layer = "dec.up" + std::to_string(i);
      h = ops::up_conv2d(g, h, w(g, layer), b(g, layer), (k - 1) / 2);
      if (i < 4) {
        h = ops::leaky_relu(g, h, T(cfg_.leaky_slope));
      } else {
        h = ops::tanh_act(g, h);
      }
    }
    return {ops::slice_channels(g, h, 0, 3), ops::slice_channels(g, h, 3, 4)};
  }

  const NetConfig& config() const { return cfg_; }
  ParamSetT<T>& params() { return params_; }
  const ParamSetT<T>& params() const { return params_; }

 private:
  NodeId w(GraphT<T>& g, const std::string& layer) { return stack_.leaf(g, params_, layer + ".w"); }
  NodeId b(GraphT<T>& g, const std::string& layer) { return stack_.leaf(g, params_, layer + ".b"); }

  NetConfig cfg_;
  ParamSetT<T> params_;
  detail::LayerStack<T> stack_;
};

using ViewNet = ViewNetT<float>;

// Discriminator for the adversarial mode: the encoder's conv schedule on a
// 6-channel (input view ++ candidate view) stack, with a scalar logit head.
template <typename T>
class DiscrNetT {
 public:
  using NodeId = typename GraphT<T>::NodeId;

  explicit DiscrNetT(NetConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const int base = cfg_.spatial_base();
    int ch = 6;
    for (int i = 0; i < 5; ++i) {
      const int k = kEncoderFilter[i];
      stack_.add_layer(params_, "disc.conv" + std::to_string(i), {cfg_.enc_widths[i], ch, k, k});
      ch = cfg_.enc_widths[i];
    }
    stack_.add_layer(params_, "disc.fc", {1, ch * base * base});
  }

  void init_he(std::uint64_t seed) {
    std::uint64_t idx = 0;
    for (auto& p : params_) {
      if (p.name.ends_with(".w")) p.value = he_init<T>(p.value.shape, derive_seed(seed, idx));
      ++idx;
    }
  }

  // Raw logit; the losses apply the sigmoid, so D's output is in (0,1) by
  // construction.
  NodeId logit(GraphT<T>& g, NodeId stacked) {
    const auto& shape = g.value(stacked).shape;
    if (shape != std::vector<int>{6, cfg_.image_size, cfg_.image_size}) {
      throw std::invalid_argument("discriminator: expected [6,S,S] input, got " +
                                  shape_str(shape));
    }
    NodeId h = stacked;
    for (int i = 0; i < 5; ++i) {
      const int k = kEncoderFilter[i];
      const std::string layer = "disc.conv" + std::to_string(i);
      h = ops::conv2d(g, h, stack_.leaf(g, params_, layer + ".w"),
                      stack_.leaf(g, params_, layer + ".b"), 2, (k - 1) / 2);
      h = ops::leaky_relu(g, h, T(cfg_.leaky_slope));
    }
    h = ops::reshape(g, h, {static_cast<int>(g.value(h).numel())});
    return ops::fully_connected(g, h, stack_.leaf(g, params_, "disc.fc.w"),
                                stack_.leaf(g, params_, "disc.fc.b"));
  }

  const NetConfig& config() const { return cfg_; }
  ParamSetT<T>& params() { return params_; }

 private:
  NetConfig cfg_;
  ParamSetT<T> params_;
  detail::LayerStack<T> stack_;
};

using DiscrNet = DiscrNetT<float>;

// Sum of the squared-L2 RGB term and lambda times the L1 depth term for one
// prediction/target pair; batch losses are sums of these scalars.
template <typename T>
typename GraphT<T>::NodeId loss_eq1(GraphT<T>& g, typename GraphT<T>::NodeId pred_rgb,
                                    typename GraphT<T>::NodeId pred_depth,
                                    typename GraphT<T>::NodeId target_rgb,
                                    typename GraphT<T>::NodeId target_depth, T lambda) {
  if (lambda < T(0)) throw std::invalid_argument("loss: lambda must be >= 0");
  auto rgb_term = ops::sum_squares(g, ops::subtract(g, pred_rgb, target_rgb));
  auto depth_term = ops::scale(g, ops::sum_abs(g, ops::subtract(g, pred_depth, target_depth)),
                               lambda);
  return ops::add(g, rgb_term, depth_term);
}

template <typename T>
struct AdvLosses {
  typename GraphT<T>::NodeId discr;  // -log D(real) - log(1 - D(fake))
  typename GraphT<T>::NodeId adv;    // -log D(fake)
};

// Both terms are computed from logits through softplus for stability:
// -log sigmoid(x) = softplus(-x) and -log(1 - sigmoid(x)) = softplus(x).
template <typename T>
AdvLosses<T> adversarial_losses(GraphT<T>& g, DiscrNetT<T>& discr,
                                typename GraphT<T>::NodeId input_view,
                                typename GraphT<T>::NodeId real_target,
                                typename GraphT<T>::NodeId fake_target) {
  auto real_logit = discr.logit(g, ops::concat_channels(g, input_view, real_target));
  auto fake_logit = discr.logit(g, ops::concat_channels(g, input_view, fake_target));
  auto l_real = ops::softplus(g, ops::scale(g, real_logit, T(-1)));
  auto l_fake = ops::softplus(g, fake_logit);
  AdvLosses<T> out;
  out.discr = ops::add(g, l_real, l_fake);
  out.adv = ops::softplus(g, ops::scale(g, fake_logit, T(-1)));
  return out;
}

// ---- tensor <-> image conversions (production float path) ----

// Bytes [0,255] map to [-1,1]; depth uses the 16-bit scale, so the 65535
// background sentinel lands exactly on +1.
Tensor tensor_from_rgb(const ImageU8& img);
Tensor tensor_from_depth(const DepthImage& img);
Tensor tensor_from_encoding(const ViewpointEncoding& enc);
ImageU8 rgb_from_tensor(const Tensor& t);
DepthImage depth_from_tensor(const Tensor& t);

struct Prediction {
  ImageU8 rgb;
  DepthImage depth;
};

// Forward pass helpers on the float net.
LatentCode encode_image(ViewNet& net, const ImageU8& input);
Prediction decode_latent(ViewNet& net, const LatentCode& latent, const Viewpoint& vp);
Prediction predict_view(ViewNet& net, const ImageU8& input, const Viewpoint& vp);

}  // namespace mv3d
