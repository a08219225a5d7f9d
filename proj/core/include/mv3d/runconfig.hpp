#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "mv3d/mesh.hpp"
#include "mv3d/render.hpp"
#include "mv3d/viewnet.hpp"

namespace mv3d {

// Plain key=value run configuration. Every key has a default, unknown keys
// are rejected, and the fully resolved config is echoed into the output
// directory by the CLI commands.
struct RunConfig {
  std::uint64_t seed = 42;
  int image_size = 32;
  std::array<int, 5> enc_widths{16, 32, 64, 128, 128};
  int latent = 256;
  int angle_width = 64;
  std::array<int, 3> dec_fc{256, 256, 128};
  double lambda = 0.1;
  double alpha = 0.01;
  bool adversarial = false;
  int steps = 5000;
  int batch = 16;
  double lr = 1e-4;
  std::string mode = "realistic";
  std::string family = "vehicle";
  int object_count = 200;
  int gen_count = 64;
  double test_fraction = 0.15;
  int k_difficult = 5;
  std::string out_dir = "out";
  std::string background_dir;
  int eval_input_views = 4;
  int eval_output_views = 4;
  int checkpoint_every = 500;
  double fuse_voxel = 0.01;
  double fuse_outlier = 0.0;  // 0 disables isolated-point rejection

  static RunConfig load(const std::string& path);
  static RunConfig parse(const std::string& text);

  void apply(const std::string& key, const std::string& value);  // ConfigError on unknown key
  std::string resolved() const;

  NetConfig net_config() const;
  RenderConfig render_config() const;
  ObjectFamily object_family() const;
};

}  // namespace mv3d
