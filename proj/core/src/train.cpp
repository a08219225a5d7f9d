#include "mv3d/train.hpp"

#include <cmath>

#include "mv3d/errors.hpp"
#include "mv3d/threads.hpp"
#include "mv3d/weights_io.hpp"

namespace mv3d {

TrainSample make_train_sample(const std::vector<TriMesh>& objects, std::uint64_t sample_seed,
                              const RenderConfig& cfg, int image_size,
                              const std::vector<ImageU8>* backgrounds) {
  SplitMix64 rng(sample_seed);
  const TriMesh& object = objects[rng.uniform_int(objects.size())];
  const SceneSample scene = sample_scene(rng, cfg);
  Viewpoint out_vp;
  out_vp.azimuth_deg = static_cast<float>(rng.uniform(0.0, 360.0));
  out_vp.elevation_deg = static_cast<float>(rng.uniform(-10.0, 40.0));
  out_vp.distance = static_cast<float>(rng.uniform(1.7, 2.3));

  const RenderedSample input_render =
      render_view(object, scene.viewpoint, scene.lights, cfg, image_size, image_size);
  const RenderedSample target_render =
      render_view(object, out_vp, scene.lights, cfg, image_size, image_size);

  ImageU8 background;
  if (backgrounds && !backgrounds->empty()) {
    background = (*backgrounds)[rng.uniform_int(backgrounds->size())];
  } else {
    background = procedural_background(image_size, image_size, rng);
  }
  const ImageU8 input_img = composite(input_render, background, rng, cfg);

  TrainSample s;
  s.input_rgb = tensor_from_rgb(input_img);
  s.target_rgb = tensor_from_rgb(flatten_on_gray(target_render));
  s.target_depth = tensor_from_depth(target_render.depth);
  s.output_encoding = encode_viewpoint(out_vp);
  return s;
}

namespace {

AdamConfig adam_config(float lr) {
  AdamConfig cfg;
  cfg.lr = lr;
  return cfg;
}

}  // namespace

Trainer::Trainer(ViewNet& net, DiscrNet* discr, std::vector<TriMesh> objects,
                 RenderConfig render_cfg, TrainOptions opts, std::vector<ImageU8> backgrounds)
    : net_(net),
      discr_(discr),
      objects_(std::move(objects)),
      render_cfg_(std::move(render_cfg)),
      opts_(std::move(opts)),
      backgrounds_(std::move(backgrounds)),
      adam_g_(net.params().pointers(), adam_config(opts_.lr)) {
  if (objects_.empty()) throw std::invalid_argument("train: need at least one training object");
  if (net_.config().adversarial && !discr_) {
    throw std::invalid_argument("train: adversarial mode needs a discriminator");
  }
  if (discr_) {
    adam_d_ = std::make_unique<AdamState>(discr_->params().pointers(), adam_config(opts_.lr));
  }
  if (backgrounds_.empty()) {
    // built-in stand-in for a directory of background photos
    backgrounds_ = procedural_background_pool(net_.config().image_size, 64,
                                              derive_seed(opts_.seed, 0xb9));
  }
}

void Trainer::step_plain(int step_index, float& loss_out) {
  const int batch = opts_.batch;
  std::vector<TrainSample> samples(batch);
  parallel_for(batch, [&](std::int64_t b0, std::int64_t b1) {
    for (std::int64_t b = b0; b < b1; ++b) {
      const std::uint64_t idx = static_cast<std::uint64_t>(step_index) * batch + b;
      samples[b] = make_train_sample(objects_, derive_seed(opts_.seed, idx), render_cfg_,
                                     net_.config().image_size, &backgrounds_);
    }
  });

  Graph g;
  Graph::NodeId total = 0;
  for (int b = 0; b < batch; ++b) {
    const auto z = net_.encode(g, g.leaf(samples[b].input_rgb));
    const auto theta = g.leaf(tensor_from_encoding(samples[b].output_encoding));
    const auto out = net_.decode(g, z, theta);
    const auto loss = loss_eq1(g, out.rgb, out.depth, g.leaf(samples[b].target_rgb),
                               g.leaf(samples[b].target_depth), net_.config().lambda);
    total = b == 0 ? loss : ops::add(g, total, loss);
  }
  loss_out = g.value(total).data[0];
  if (!std::isfinite(loss_out)) {
    if (!opts_.checkpoint_path.empty()) save_checkpoint(opts_.checkpoint_path);
    throw NumericalError("train: non-finite loss at step " + std::to_string(step_index + 1));
  }
  net_.params().zero_grads();
  g.backward(total);
  adam_g_.step();
}

void Trainer::step_adversarial(int step_index, float& loss_out) {
  const int batch = opts_.batch;
  std::vector<TrainSample> samples(batch);
  parallel_for(batch, [&](std::int64_t b0, std::int64_t b1) {
    for (std::int64_t b = b0; b < b1; ++b) {
      const std::uint64_t idx = static_cast<std::uint64_t>(step_index) * batch + b;
      samples[b] = make_train_sample(objects_, derive_seed(opts_.seed, idx), render_cfg_,
                                     net_.config().image_size, &backgrounds_);
    }
  });

  const bool d_step = (step_index % 2) == 0;  // discriminator and generator alternate
  Graph g;
  Graph::NodeId total = 0;
  Graph::NodeId eq1_total = 0;
  for (int b = 0; b < batch; ++b) {
    const auto input = g.leaf(samples[b].input_rgb);
    const auto target_rgb = g.leaf(samples[b].target_rgb);
    Graph::NodeId loss;
    Graph::NodeId eq1;
    if (d_step) {
      // fakes are constants on discriminator steps
      Graph fwd;
      const auto z = net_.encode(fwd, fwd.leaf(samples[b].input_rgb));
      const auto theta = fwd.leaf(tensor_from_encoding(samples[b].output_encoding));
      const auto out = net_.decode(fwd, z, theta);
      eq1 = loss_eq1(g, g.leaf(fwd.value(out.rgb)), g.leaf(fwd.value(out.depth)), target_rgb,
                     g.leaf(samples[b].target_depth), net_.config().lambda);
      const auto fake = g.leaf(fwd.value(out.rgb));
      loss = adversarial_losses(g, *discr_, input, target_rgb, fake).discr;
    } else {
      const auto z = net_.encode(g, input);
      const auto theta = g.leaf(tensor_from_encoding(samples[b].output_encoding));
      const auto out = net_.decode(g, z, theta);
      eq1 = loss_eq1(g, out.rgb, out.depth, target_rgb, g.leaf(samples[b].target_depth),
                     net_.config().lambda);
      const auto adv = adversarial_losses(g, *discr_, input, target_rgb, out.rgb).adv;
      loss = ops::add(g, eq1, ops::scale(g, adv, net_.config().alpha));
    }
    total = b == 0 ? loss : ops::add(g, total, loss);
    eq1_total = b == 0 ? eq1 : ops::add(g, eq1_total, eq1);
  }
  loss_out = g.value(eq1_total).data[0];
  const float objective = g.value(total).data[0];
  if (!std::isfinite(loss_out) || !std::isfinite(objective)) {
    if (!opts_.checkpoint_path.empty()) save_checkpoint(opts_.checkpoint_path);
    throw NumericalError("train: non-finite loss at step " + std::to_string(step_index + 1));
  }
  net_.params().zero_grads();
  discr_->params().zero_grads();
  g.backward(total);
  if (d_step) {
    adam_d_->step();
  } else {
    adam_g_.step();
  }
}

TrainResult Trainer::run() {
  TrainResult result;
  const bool adversarial = net_.config().adversarial;
  for (; step_ < opts_.steps; ++step_) {
    float loss = 0;
    try {
      if (adversarial) {
        step_adversarial(step_, loss);
      } else {
        step_plain(step_, loss);
      }
    } catch (const NumericalError&) {
      if (!opts_.checkpoint_path.empty()) save_checkpoint(opts_.checkpoint_path);
      throw;
    }
    result.loss_log.push_back({step_ + 1, loss});
    if (opts_.on_step) opts_.on_step(step_ + 1, loss);
    if (!opts_.checkpoint_path.empty() && opts_.checkpoint_every > 0 &&
        (step_ + 1) % opts_.checkpoint_every == 0) {
      // step_ is bumped first so the checkpoint records the completed step
      ++step_;
      save_checkpoint(opts_.checkpoint_path);
      --step_;
    }
  }
  result.final_step = step_;
  return result;
}

void Trainer::save_checkpoint(const std::string& path) const {
  std::vector<NamedTensor> tensors = snapshot(net_.params());
  const float t_g = static_cast<float>(adam_g_.t());
  float t_d = 0;
  auto append_adam = [&tensors](const AdamState& adam) {
    for (std::size_t i = 0; i < adam.size(); ++i) {
      tensors.push_back({"adam.m." + adam.param(i).name, adam.moment1(i)});
      tensors.push_back({"adam.v." + adam.param(i).name, adam.moment2(i)});
    }
  };
  append_adam(adam_g_);
  if (discr_) {
    const auto disc_tensors = snapshot(discr_->params());
    tensors.insert(tensors.end(), disc_tensors.begin(), disc_tensors.end());
    append_adam(*adam_d_);
    t_d = static_cast<float>(adam_d_->t());
  }
  tensors.push_back({"_meta", Tensor({3}, {static_cast<float>(step_), t_g, t_d})});
  save_tensors(path, tensors);
}

void Trainer::load_checkpoint(const std::string& path) {
  const auto tensors = load_tensors(path);
  restore(net_.params(), tensors);
  if (discr_) restore(discr_->params(), tensors);

  auto find = [&](const std::string& name) -> const Tensor* {
    for (const auto& t : tensors) {
      if (t.name == name) return &t.value;
    }
    return nullptr;
  };
  auto restore_adam = [&](AdamState& adam) {
    for (std::size_t i = 0; i < adam.size(); ++i) {
      const std::string& pname = adam.param(i).name;
      const Tensor* m = find("adam.m." + pname);
      const Tensor* v = find("adam.v." + pname);
      if (!m || !v) throw FormatError(path + ": checkpoint is missing optimizer state for '" +
                                      pname + "'");
      adam.moment1(i) = *m;
      adam.moment2(i) = *v;
    }
  };
  const Tensor* meta = find("_meta");
  if (!meta || meta->numel() != 3) throw FormatError(path + ": checkpoint is missing _meta");
  restore_adam(adam_g_);
  adam_g_.set_t(static_cast<std::int64_t>(meta->data[1]));
  if (discr_) {
    restore_adam(*adam_d_);
    adam_d_->set_t(static_cast<std::int64_t>(meta->data[2]));
  }
  step_ = static_cast<int>(meta->data[0]);
}

}  // namespace mv3d
