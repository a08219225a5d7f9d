#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mv3d/adam.hpp"
#include "mv3d/render.hpp"
#include "mv3d/viewnet.hpp"

namespace mv3d {

// One training datum: a composited input view, the gray-background target
// view with its depth map, and the encoding of the output viewpoint. The
// input viewpoint is deliberately absent. Pixels live in [-1,1]; depth is on
// the 16-bit scale with background at exactly +1.
struct TrainSample {
  Tensor input_rgb;     // [3,S,S]
  Tensor target_rgb;    // [3,S,S]
  Tensor target_depth;  // [1,S,S]
  ViewpointEncoding output_encoding;
};

// Renders the sample for one global index. Everything (object choice, input
// scene, output viewpoint, background, smoothing draws) comes from the
// derived seed, so content depends only on (seed, index).
TrainSample make_train_sample(const std::vector<TriMesh>& objects, std::uint64_t sample_seed,
                              const RenderConfig& cfg, int image_size,
                              const std::vector<ImageU8>* backgrounds);

struct TrainOptions {
  std::uint64_t seed = 42;
  int steps = 5000;
  int batch = 16;
  float lr = 1e-4f;
  int checkpoint_every = 500;
  std::string checkpoint_path;  // empty: no periodic checkpoints
  std::function<void(int step, float loss)> on_step;
};

struct LossEntry {
  int step;  // 1-based
  float loss;
};

struct TrainResult {
  std::vector<LossEntry> loss_log;
  int final_step = 0;
};

// Owns the optimizer state for a run. Rendering of a batch is parallel;
// parameters and moments are touched only by the calling thread, and samples
// enter the loss in index order.
class Trainer {
 public:
  Trainer(ViewNet& net, DiscrNet* discr, std::vector<TriMesh> objects, RenderConfig render_cfg,
          TrainOptions opts, std::vector<ImageU8> backgrounds = {});

  // Runs steps [current+1, opts.steps]. On a non-finite loss or gradient the
  // last good state is checkpointed (if a path is set) and NumericalError is
  // thrown with the step number.
  TrainResult run();

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);  // params, moments, step counter

  int current_step() const { return step_; }

 private:
  void step_plain(int step_index, float& loss_out);
  void step_adversarial(int step_index, float& loss_out);

  ViewNet& net_;
  DiscrNet* discr_;
  std::vector<TriMesh> objects_;
  RenderConfig render_cfg_;
  TrainOptions opts_;
  std::vector<ImageU8> backgrounds_;
  AdamState adam_g_;
  std::unique_ptr<AdamState> adam_d_;
  int step_ = 0;
};

}  // namespace mv3d
