#include "mv3d/viewnet.hpp"

#include <cmath>

namespace mv3d {

ViewpointEncoding encode_viewpoint(const Viewpoint& vp) {
  const float az = deg_to_rad(vp.azimuth_deg);
  const float el = deg_to_rad(vp.elevation_deg);
  return {std::sin(az), std::cos(az), std::sin(el), std::cos(el),
          (vp.distance - 2.0f) / 0.3f};
}

Tensor tensor_from_rgb(const ImageU8& img) {
  Tensor t({3, img.height, img.width});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        t.at(c, y, x) = static_cast<float>(img.at(x, y, c)) / 127.5f - 1.0f;
      }
    }
  }
  return t;
}

Tensor tensor_from_depth(const DepthImage& img) {
  Tensor t({1, img.height, img.width});
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      t.at(0, y, x) = static_cast<float>(img.at(x, y)) / 32767.5f - 1.0f;
    }
  }
  return t;
}

Tensor tensor_from_encoding(const ViewpointEncoding& enc) {
  return Tensor({5}, {enc[0], enc[1], enc[2], enc[3], enc[4]});
}

ImageU8 rgb_from_tensor(const Tensor& t) {
  const int h = t.shape[1], w = t.shape[2];
  ImageU8 img(w, h, 3);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        float v = (t.at(c, y, x) + 1.0f) * 127.5f + 0.5f;
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0f, 255.0f));
      }
    }
  }
  return img;
}

DepthImage depth_from_tensor(const Tensor& t) {
  const int h = t.shape[1], w = t.shape[2];
  DepthImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float v = (t.at(0, y, x) + 1.0f) * 32767.5f + 0.5f;
      img.at(x, y) = static_cast<std::uint16_t>(std::clamp(v, 0.0f, 65535.0f));
    }
  }
  return img;
}

LatentCode encode_image(ViewNet& net, const ImageU8& input) {
  Graph g;
  const auto z = net.encode(g, g.leaf(tensor_from_rgb(input)));
  return g.value(z).data;
}

Prediction decode_latent(ViewNet& net, const LatentCode& latent, const Viewpoint& vp) {
  Graph g;
  const auto z = g.leaf(Tensor({static_cast<int>(latent.size())}, latent));
  const auto theta = g.leaf(tensor_from_encoding(encode_viewpoint(vp)));
  const auto out = net.decode(g, z, theta);
  return {rgb_from_tensor(g.value(out.rgb)), depth_from_tensor(g.value(out.depth))};
}

Prediction predict_view(ViewNet& net, const ImageU8& input, const Viewpoint& vp) {
  Graph g;
  const auto z = net.encode(g, g.leaf(tensor_from_rgb(input)));
  const auto theta = g.leaf(tensor_from_encoding(encode_viewpoint(vp)));
  const auto out = net.decode(g, z, theta);
  return {rgb_from_tensor(g.value(out.rgb)), depth_from_tensor(g.value(out.depth))};
}

}  // namespace mv3d
