// Command-line pipeline: data generation, training, prediction, depth-map
// fusion and evaluation, all deterministic functions of (config, inputs).
//
// Exit codes: 0 success, 2 I/O failure, 3 numerical failure, 4 file-format
// error, 5 config mismatch.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mv3d/cluster.hpp"
#include "mv3d/errors.hpp"
#include "mv3d/evalsuite.hpp"
#include "mv3d/ply.hpp"
#include "mv3d/pnm.hpp"
#include "mv3d/pointcloud.hpp"
#include "mv3d/runconfig.hpp"
#include "mv3d/train.hpp"
#include "mv3d/weights_io.hpp"

namespace fs = std::filesystem;
using namespace mv3d;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string weights_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = RunConfig::load(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  return cfg;
}

void prepare_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.out_dir + ": " + ec.message());
  std::ofstream f(fs::path(cfg.out_dir) / "resolved_config.txt");
  if (!f) throw IoError("cannot write resolved config in " + cfg.out_dir);
  f << cfg.resolved();
  if (!f) throw IoError("short write in " + cfg.out_dir);
}

std::vector<ImageU8> load_backgrounds(const RunConfig& cfg) {
  std::vector<ImageU8> out;
  if (cfg.background_dir.empty()) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cfg.background_dir)) {
    if (e.path().extension() == ".ppm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) out.push_back(center_crop_resize(read_ppm(p.string()), cfg.image_size));
  return out;
}

std::string format_g(double v, int digits = 9) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

// ---- split file ----

void write_split(const std::string& path, const RunConfig& cfg, const SplitResult& split) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << "# family=" << cfg.family << " count=" << cfg.object_count << " seed=" << cfg.seed
    << " image_size=" << cfg.image_size << "\n";
  std::vector<std::pair<int, const char*>> rows;
  for (int id : split.train_ids) rows.emplace_back(id, "train");
  for (int id : split.test_ids) rows.emplace_back(id, "test");
  for (int id : split.difficult_ids) rows.emplace_back(id, "difficult");
  std::sort(rows.begin(), rows.end());
  for (const auto& [id, set] : rows) f << id << " " << set << "\n";
  if (!f) throw IoError("short write to " + path);
}

SplitResult read_split(const std::string& path, const RunConfig& cfg) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read split file " + path);
  std::string header;
  std::getline(f, header);
  std::ostringstream expect;
  expect << "# family=" << cfg.family << " count=" << cfg.object_count << " seed=" << cfg.seed
         << " image_size=" << cfg.image_size;
  if (header != expect.str()) {
    throw ConfigError("split file " + path + " does not match the config (header '" + header +
                      "' vs '" + expect.str() + "')");
  }
  SplitResult split;
  int id;
  std::string set;
  while (f >> id >> set) {
    if (set == "train") {
      split.train_ids.push_back(id);
    } else if (set == "test") {
      split.test_ids.push_back(id);
    } else if (set == "difficult") {
      split.difficult_ids.push_back(id);
    } else {
      throw FormatError(path + ": unknown set '" + set + "'");
    }
  }
  return split;
}

// ---- subcommands ----

int cmd_gen_data(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  prepare_out_dir(cfg);
  const RenderConfig rcfg = cfg.render_config();
  const ObjectFamily family = cfg.object_family();

  std::vector<TriMesh> objects = generate_object_set(family, cfg.object_count, cfg.seed);
  std::vector<ImageU8> backgrounds = load_backgrounds(cfg);
  if (backgrounds.empty()) {
    backgrounds = procedural_background_pool(cfg.image_size, 64, derive_seed(cfg.seed, 0xb9));
  }

  std::ofstream manifest(fs::path(cfg.out_dir) / "manifest.txt");
  if (!manifest) throw IoError("cannot write manifest in " + cfg.out_dir);
  for (int i = 0; i < cfg.gen_count; ++i) {
    SplitMix64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    const std::uint64_t obj_index = rng.uniform_int(objects.size());
    const SceneSample scene = sample_scene(rng, rcfg);
    const RenderedSample render = render_view(objects[obj_index], scene.viewpoint, scene.lights,
                                              rcfg, cfg.image_size, cfg.image_size);
    ImageU8 background = backgrounds[rng.uniform_int(backgrounds.size())];
    const ImageU8 rgb = composite(render, background, rng, rcfg);

    char name[64];
    std::snprintf(name, sizeof(name), "sample_%05d", i);
    const fs::path base = fs::path(cfg.out_dir) / name;
    write_ppm(base.string() + "_rgb.ppm", rgb);
    write_pgm16(base.string() + "_depth.pgm", render.depth);
    write_pgm8(base.string() + "_mask.pgm", render.mask);

    manifest << i << " " << cfg.family << " "
             << object_seed(cfg.seed, static_cast<int>(obj_index)) << " "
             << format_g(scene.viewpoint.azimuth_deg) << " "
             << format_g(scene.viewpoint.elevation_deg) << " "
             << format_g(scene.viewpoint.distance) << " " << scene.lights.size() << "\n";
  }
  if (!manifest) throw IoError("short write to manifest in " + cfg.out_dir);
  return 0;
}

int cmd_train(const CommonArgs& args) {
  const RunConfig cfg = load_config(args);
  prepare_out_dir(cfg);
  const RenderConfig rcfg = cfg.render_config();

  std::vector<TriMesh> objects = generate_object_set(cfg.object_family(), cfg.object_count,
                                                     cfg.seed);
  const SplitResult split = split_models(objects, rcfg.vfov_deg, cfg.image_size,
                                         cfg.test_fraction, cfg.k_difficult);
  write_split((fs::path(cfg.out_dir) / "split.txt").string(), cfg, split);

  std::vector<TriMesh> train_objects;
  for (int id : split.train_ids) train_objects.push_back(objects[id]);

  ViewNet net(cfg.net_config());
  net.init_he(cfg.seed);
  std::unique_ptr<DiscrNet> discr;
  if (cfg.adversarial) {
    discr = std::make_unique<DiscrNet>(cfg.net_config());
    discr->init_he(derive_seed(cfg.seed, 0x0d15c));
  }

  TrainOptions opts;
  opts.seed = cfg.seed;
  opts.steps = cfg.steps;
  opts.batch = cfg.batch;
  opts.lr = static_cast<float>(cfg.lr);
  opts.checkpoint_every = cfg.checkpoint_every;
  opts.checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint.mv3d").string();

  Trainer trainer(net, discr.get(), std::move(train_objects), rcfg, opts, load_backgrounds(cfg));
  if (!args.weights_path.empty()) trainer.load_checkpoint(args.weights_path);

  const TrainResult result = trainer.run();

  std::ofstream log(fs::path(cfg.out_dir) / "loss_log.txt");
  if (!log) throw IoError("cannot write loss log in " + cfg.out_dir);
  for (const auto& e : result.loss_log) log << e.step << " " << format_g(e.loss) << "\n";

  std::vector<NamedTensor> weights = snapshot(net.params());
  if (discr) {
    const auto d = snapshot(discr->params());
    weights.insert(weights.end(), d.begin(), d.end());
  }
  save_tensors((fs::path(cfg.out_dir) / "weights.mv3d").string(), weights);
  trainer.save_checkpoint(opts.checkpoint_path);
  return 0;
}

ViewNet net_from_weights(const std::string& path) {
  const auto tensors = load_tensors(path);
  ViewNet net(net_config_from_tensors(tensors));
  restore(net.params(), tensors);
  return net;
}

int cmd_predict(const CommonArgs& args, const std::string& input_path,
                const std::vector<double>& az, const std::vector<double>& el,
                const std::vector<double>& r) {
  if (az.size() != el.size() || az.size() != r.size()) {
    throw ConfigError("--az, --el and --r must be given the same number of times");
  }
  RunConfig cfg = load_config(args);
  ViewNet net = net_from_weights(args.weights_path);
  prepare_out_dir(cfg);

  const ImageU8 input = center_crop_resize(read_ppm(input_path), net.config().image_size);
  const LatentCode z = encode_image(net, input);
  for (std::size_t i = 0; i < az.size(); ++i) {
    const Viewpoint vp{static_cast<float>(az[i]), static_cast<float>(el[i]),
                       static_cast<float>(r[i])};
    const Prediction pred = decode_latent(net, z, vp);
    char name[64];
    std::snprintf(name, sizeof(name), "pred_%02zu", i);
    const fs::path base = fs::path(cfg.out_dir) / name;
    write_ppm(base.string() + "_rgb.ppm", pred.rgb);
    write_pgm16(base.string() + "_depth.pgm", pred.depth);
  }
  return 0;
}

int cmd_fuse(const CommonArgs& args, const std::string& input_path) {
  RunConfig cfg = load_config(args);
  ViewNet net = net_from_weights(args.weights_path);
  prepare_out_dir(cfg);
  const RenderConfig rcfg = cfg.render_config();
  const int s = net.config().image_size;

  const ImageU8 input = center_crop_resize(read_ppm(input_path), s);
  const LatentCode z = encode_image(net, input);

  std::vector<View> views;
  for (int az = 0; az < 360; az += 60) {
    const Viewpoint vp{static_cast<float>(az), 20.0f, 2.0f};
    const Prediction pred = decode_latent(net, z, vp);
    views.push_back({pred.depth, pred.rgb, camera_from_viewpoint(vp, rcfg, s, s)});
  }
  PointCloud cloud = fuse(views, static_cast<float>(cfg.fuse_voxel));
  if (cfg.fuse_outlier > 0) cloud = drop_isolated_points(cloud, static_cast<float>(cfg.fuse_outlier));
  export_ply(cloud, (fs::path(cfg.out_dir) / "cloud.ply").string());
  return 0;
}

void write_confusion_ppm(const std::string& path, const ConfusionMatrix& cm) {
  double lo = 1e30, hi = -1e30;
  for (double v : cm.normalized) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi > lo ? hi - lo : 1.0;
  ImageU8 img(cm.buckets, cm.buckets, 3);
  for (int i = 0; i < cm.buckets; ++i) {
    for (int j = 0; j < cm.buckets; ++j) {
      const double t = (cm.norm_at(i, j) - lo) / range;  // 0 blue .. 1 red
      img.at(j, i, 0) = float_to_byte(static_cast<float>(std::clamp(1.5 - std::abs(4 * t - 3), 0.0, 1.0)));
      img.at(j, i, 1) = float_to_byte(static_cast<float>(std::clamp(1.5 - std::abs(4 * t - 2), 0.0, 1.0)));
      img.at(j, i, 2) = float_to_byte(static_cast<float>(std::clamp(1.5 - std::abs(4 * t - 1), 0.0, 1.0)));
    }
  }
  write_ppm(path, img);
}

int cmd_eval(const CommonArgs& args, const std::string& metric_filter) {
  RunConfig cfg = load_config(args);
  ViewNet net = net_from_weights(args.weights_path);
  if (net.config().image_size != cfg.image_size) {
    throw ConfigError("weights were trained at image size " +
                      std::to_string(net.config().image_size) + " but the config says " +
                      std::to_string(cfg.image_size));
  }
  prepare_out_dir(cfg);
  const RenderConfig rcfg = cfg.render_config();

  std::vector<TriMesh> objects = generate_object_set(cfg.object_family(), cfg.object_count,
                                                     cfg.seed);
  const SplitResult split =
      read_split((fs::path(cfg.out_dir) / "split.txt").string(), cfg);

  EvalProtocol protocol;
  protocol.input_views = cfg.eval_input_views;
  protocol.output_views = cfg.eval_output_views;
  protocol.seed = derive_seed(cfg.seed, 0xe7a1);

  const EvalTable table = evaluate_methods(net, objects, split, rcfg, protocol);
  std::string report = format_eval_table(table);
  if (!metric_filter.empty()) {
    // keep the header, the chosen baseline row and the network row
    const NnMetric m = nn_metric_from_name(metric_filter);
    const int row = m == NnMetric::Hog ? 0 : m == NnMetric::HogRgb ? 1 : 2;
    std::istringstream in(report);
    std::string line, filtered;
    int idx = -1;
    while (std::getline(in, line)) {
      if (idx == -1 || idx == row || idx == 3) filtered += line + "\n";
      ++idx;
    }
    report = filtered;
  }
  {
    std::ofstream f(fs::path(cfg.out_dir) / "report.tsv");
    if (!f) throw IoError("cannot write report in " + cfg.out_dir);
    f << report;
  }
  std::cout << report;

  // confusion matrix over (a deterministic cap of) the normal test objects
  std::vector<TriMesh> cm_objects;
  for (std::size_t i = 0; i < split.test_ids.size() && i < 6; ++i) {
    cm_objects.push_back(objects[split.test_ids[i]]);
  }
  const std::array<float, 2> elevations{0.0f, 30.0f};
  const ConfusionMatrix cm = confusion_matrix(net, cm_objects, rcfg, elevations);
  {
    std::ofstream f(fs::path(cfg.out_dir) / "confusion.tsv");
    if (!f) throw IoError("cannot write confusion matrix in " + cfg.out_dir);
    for (int i = 0; i < cm.buckets; ++i) {
      for (int j = 0; j < cm.buckets; ++j) {
        f << (j ? "\t" : "") << format_g(cm.norm_at(i, j), 6);
      }
      f << "\n";
    }
  }
  write_confusion_ppm((fs::path(cfg.out_dir) / "confusion.ppm").string(), cm);

  // pairwise latent distances, 5 objects x 3 views
  std::vector<TriMesh> ld_objects;
  for (std::size_t i = 0; i < split.test_ids.size() && i < 5; ++i) {
    ld_objects.push_back(objects[split.test_ids[i]]);
  }
  const std::array<Viewpoint, 3> ld_views{Viewpoint{0, 15, 2.0f}, Viewpoint{120, 15, 2.0f},
                                          Viewpoint{240, 15, 2.0f}};
  const auto ld = latent_distance_matrix(net, ld_objects, ld_views, rcfg);
  {
    std::ofstream f(fs::path(cfg.out_dir) / "latent_distances.tsv");
    if (!f) throw IoError("cannot write latent distances in " + cfg.out_dir);
    const std::size_t n = ld_objects.size() * ld_views.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) f << (j ? "\t" : "") << format_g(ld[i * n + j], 6);
      f << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-image novel-view and depth prediction pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string input_path, metric;
  std::vector<double> az, el, r;

  auto add_common = [&](CLI::App* cmd, bool with_weights) {
    cmd->add_option("--config", args.config_path, "key=value run configuration");
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "seed (overrides config)")
        ->each([&](const std::string&) { args.seed_set = true; });
    if (with_weights) cmd->add_option("--weights", args.weights_path, "MV3D weights file");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "render a sample set to disk");
  add_common(gen, false);

  CLI::App* train = app.add_subcommand("train", "train the network (resumes from --weights)");
  add_common(train, true);

  CLI::App* predict = app.add_subcommand("predict", "predict views of an input image");
  add_common(predict, true);
  predict->add_option("--input", input_path, "input PPM image")->required();
  predict->add_option("--az", az, "output azimuth, degrees (repeatable)")->required();
  predict->add_option("--el", el, "output elevation, degrees (repeatable)")->required();
  predict->add_option("--r", r, "output distance (repeatable)")->required();

  CLI::App* fuse_cmd = app.add_subcommand("fuse", "fuse 6 predicted depth maps into a point cloud");
  add_common(fuse_cmd, true);
  fuse_cmd->add_option("--input", input_path, "input PPM image")->required();

  CLI::App* eval = app.add_subcommand("eval", "baseline table and confusion matrix");
  add_common(eval, true);
  eval->add_option("--metric", metric, "restrict the report to one NN baseline")
      ->check(CLI::IsMember({"rgb", "hog", "hog+rgb"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(args);
    if (train->parsed()) return cmd_train(args);
    if (predict->parsed()) return cmd_predict(args, input_path, az, el, r);
    if (fuse_cmd->parsed()) return cmd_fuse(args, input_path);
    if (eval->parsed()) return cmd_eval(args, metric);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
