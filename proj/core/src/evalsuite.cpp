#include "mv3d/evalsuite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mv3d/rng.hpp"
#include "mv3d/threads.hpp"

namespace mv3d {

namespace {
constexpr double kRgbFullScale = 443.4;
constexpr double kDepthFullScale = 65535.0;
}  // namespace

std::array<Viewpoint, 3> canonical_split_viewpoints() {
  return {Viewpoint{0, 10, 2.0f}, Viewpoint{90, 10, 2.0f}, Viewpoint{180, 10, 2.0f}};
}

namespace {

HogDescriptor model_descriptor(const TriMesh& m, const Viewpoint& vp, float vfov_deg,
                               int image_size) {
  RenderConfig cfg;
  cfg.mode = RenderMode::Basic;
  cfg.vfov_deg = vfov_deg;
  const auto lights = basic_lights();
  const RenderedSample s = render_view(m, vp, lights, cfg, image_size, image_size);
  return hog(grayscale(flatten_on_gray(s)));
}

}  // namespace

double model_distance(const TriMesh& a, const TriMesh& b, float vfov_deg, int image_size) {
  double sum = 0;
  for (const Viewpoint& vp : canonical_split_viewpoints()) {
    sum += hog_distance(model_descriptor(a, vp, vfov_deg, image_size),
                        model_descriptor(b, vp, vfov_deg, image_size));
  }
  return sum;
}

DistanceMatrix model_distance_matrix(std::span<const TriMesh> models, float vfov_deg,
                                     int image_size) {
  const int n = static_cast<int>(models.size());
  // descriptors once per (model, canonical view), distances over the upper triangle
  const auto views = canonical_split_viewpoints();
  std::vector<std::array<HogDescriptor, 3>> desc(n);
  parallel_for(n, [&](std::int64_t i0, std::int64_t i1) {
    for (std::int64_t i = i0; i < i1; ++i) {
      for (int v = 0; v < 3; ++v) {
        desc[i][v] = model_descriptor(models[i], views[v], vfov_deg, image_size);
      }
    }
  });
  DistanceMatrix dist(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double d = 0;
      for (int v = 0; v < 3; ++v) d += hog_distance(desc[i][v], desc[j][v]);
      dist.set(i, j, d);
    }
  }
  return dist;
}

SplitResult split_models(std::span<const TriMesh> models, float vfov_deg, int image_size,
                         double test_fraction, int k_difficult) {
  return split_dataset(model_distance_matrix(models, vfov_deg, image_size), test_fraction,
                       k_difficult);
}

NnMetric nn_metric_from_name(const std::string& name) {
  if (name == "rgb") return NnMetric::Rgb;
  if (name == "hog") return NnMetric::Hog;
  if (name == "hog+rgb") return NnMetric::HogRgb;
  throw ConfigError("unknown metric '" + name + "' (expected rgb, hog or hog+rgb)");
}

CandidateViews render_candidates(std::span<const TriMesh> models, const Viewpoint& vp,
                                 std::span<const Light> lights, const RenderConfig& cfg,
                                 int image_size) {
  CandidateViews out;
  out.images.resize(models.size());
  out.hogs.resize(models.size());
  parallel_for(static_cast<std::int64_t>(models.size()), [&](std::int64_t i0, std::int64_t i1) {
    for (std::int64_t i = i0; i < i1; ++i) {
      out.images[i] = flatten_on_gray(render_view(models[i], vp, lights, cfg, image_size,
                                                  image_size));
      out.hogs[i] = hog(grayscale(out.images[i]));
    }
  });
  return out;
}

namespace {

double rgb_l2(const ImageU8& a, const ImageU8& b) {
  double acc = 0;
  for (std::size_t i = 0; i < a.px.size(); ++i) {
    const double d = static_cast<double>(a.px[i]) - b.px[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

int nn_select(const ImageU8& query, const CandidateViews& candidates, NnMetric metric) {
  const std::size_t n = candidates.images.size();
  if (n == 0) throw std::invalid_argument("nn_select: empty training set");
  std::vector<double> d_rgb(n, 0.0), d_hog(n, 0.0);
  const HogDescriptor query_hog =
      metric != NnMetric::Rgb ? hog(grayscale(query)) : HogDescriptor{};
  for (std::size_t i = 0; i < n; ++i) {
    if (metric != NnMetric::Hog) d_rgb[i] = rgb_l2(query, candidates.images[i]);
    if (metric != NnMetric::Rgb) d_hog[i] = hog_distance(query_hog, candidates.hogs[i]);
  }
  std::vector<double> d(n, 0.0);
  switch (metric) {
    case NnMetric::Rgb: d = d_rgb; break;
    case NnMetric::Hog: d = d_hog; break;
    case NnMetric::HogRgb: {
      double mean_rgb = 0, mean_hog = 0;
      for (std::size_t i = 0; i < n; ++i) {
        mean_rgb += d_rgb[i];
        mean_hog += d_hog[i];
      }
      mean_rgb = std::max(mean_rgb / static_cast<double>(n), 1e-12);
      mean_hog = std::max(mean_hog / static_cast<double>(n), 1e-12);
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = 0.5 * d_rgb[i] / mean_rgb + 0.5 * d_hog[i] / mean_hog;
      }
      break;
    }
  }
  int best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (d[i] < d[best]) best = static_cast<int>(i);
  }
  return best;
}

NnPrediction nn_predict(const ImageU8& input_view, std::span<const TriMesh> train_models,
                        NnMetric metric, const Viewpoint& input_vp, const Viewpoint& output_vp,
                        std::span<const Light> lights, const RenderConfig& cfg, int image_size) {
  if (train_models.empty()) throw std::invalid_argument("nn_predict: empty training set");
  const CandidateViews candidates =
      render_candidates(train_models, input_vp, lights, cfg, image_size);
  NnPrediction out;
  out.model_index = nn_select(input_view, candidates, metric);
  const RenderedSample s =
      render_view(train_models[out.model_index], output_vp, lights, cfg, image_size, image_size);
  out.rgb = flatten_on_gray(s);
  out.depth = s.depth;
  return out;
}

double normalized_rgb_error(const ImageU8& pred, const ImageU8& truth) {
  if (pred.width != truth.width || pred.height != truth.height || pred.channels != 3 ||
      truth.channels != 3) {
    throw std::invalid_argument("normalized_rgb_error: image shapes differ");
  }
  double acc = 0;
  const std::size_t pixels = static_cast<std::size_t>(pred.width) * pred.height;
  for (std::size_t p = 0; p < pixels; ++p) {
    double sq = 0;
    for (int c = 0; c < 3; ++c) {
      const double d = static_cast<double>(pred.px[3 * p + c]) - truth.px[3 * p + c];
      sq += d * d;
    }
    acc += std::sqrt(sq);
  }
  return acc / static_cast<double>(pixels) / kRgbFullScale;
}

double normalized_depth_error(const DepthImage& pred, const DepthImage& truth) {
  if (pred.width != truth.width || pred.height != truth.height) {
    throw std::invalid_argument("normalized_depth_error: image shapes differ");
  }
  double acc = 0;
  for (std::size_t i = 0; i < pred.px.size(); ++i) {
    acc += std::abs(static_cast<double>(pred.px[i]) - truth.px[i]);
  }
  return acc / static_cast<double>(pred.px.size()) / kDepthFullScale;
}

ConfusionMatrix confusion_matrix(ViewNet& net, std::span<const TriMesh> objects,
                                 const RenderConfig& cfg,
                                 std::span<const float> elevations_deg) {
  const int s = net.config().image_size;
  ConfusionMatrix out;
  for (float el : elevations_deg) {
    for (int az = 0; az < 360; az += 30) {
      out.centers.push_back({static_cast<float>(az), el, 2.0f});
    }
  }
  out.buckets = static_cast<int>(out.centers.size());
  out.raw.assign(static_cast<std::size_t>(out.buckets) * out.buckets, 0.0);

  const auto lights = basic_lights();
  for (const TriMesh& object : objects) {
    // ground-truth target per output bucket, shared across input buckets
    std::vector<ImageU8> truths(out.buckets);
    parallel_for(out.buckets, [&](std::int64_t j0, std::int64_t j1) {
      for (std::int64_t j = j0; j < j1; ++j) {
        truths[j] = flatten_on_gray(render_view(object, out.centers[j], lights, cfg, s, s));
      }
    });
    for (int i = 0; i < out.buckets; ++i) {
      const ImageU8 input = truths[i];  // gray-background input at the bucket center
      const LatentCode z = encode_image(net, input);
      for (int j = 0; j < out.buckets; ++j) {
        const Prediction pred = decode_latent(net, z, out.centers[j]);
        out.raw[static_cast<std::size_t>(i) * out.buckets + j] +=
            normalized_rgb_error(pred.rgb, truths[j]) / static_cast<double>(objects.size());
      }
    }
  }

  out.normalized = out.raw;
  for (int j = 0; j < out.buckets; ++j) {
    double col = 0;
    for (int i = 0; i < out.buckets; ++i) col += out.raw_at(i, j);
    if (col > 0) {
      for (int i = 0; i < out.buckets; ++i) {
        out.normalized[static_cast<std::size_t>(i) * out.buckets + j] /= col;
      }
    }
  }
  return out;
}

double view_angle_deg(const Viewpoint& a, const Viewpoint& b) {
  auto dir = [](const Viewpoint& v) {
    const double az = v.azimuth_deg * 3.14159265358979323846 / 180.0;
    const double el = v.elevation_deg * 3.14159265358979323846 / 180.0;
    return std::array<double, 3>{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                 std::sin(el)};
  };
  const auto da = dir(a), db = dir(b);
  const double c = std::clamp(da[0] * db[0] + da[1] * db[1] + da[2] * db[2], -1.0, 1.0);
  return std::acos(c) * 180.0 / 3.14159265358979323846;
}

LatentCode interpolate_latent(const LatentCode& a, const LatentCode& b, float alpha) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("interpolate_latent: latent sizes differ");
  }
  if (alpha == 1.0f) return a;  // exact endpoints
  if (alpha == 0.0f) return b;
  LatentCode out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = alpha * a[i] + (1.0f - alpha) * b[i];
  return out;
}

std::vector<double> latent_distance_matrix(ViewNet& net, std::span<const TriMesh> objects,
                                           std::span<const Viewpoint> views,
                                           const RenderConfig& cfg) {
  const int s = net.config().image_size;
  const auto lights = basic_lights();
  std::vector<LatentCode> codes;
  for (const TriMesh& object : objects) {
    for (const Viewpoint& vp : views) {
      codes.push_back(
          encode_image(net, flatten_on_gray(render_view(object, vp, lights, cfg, s, s))));
    }
  }
  const std::size_t n = codes.size();
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < codes[i].size(); ++k) {
        const double d = static_cast<double>(codes[i][k]) - codes[j][k];
        acc += d * d;
      }
      dist[i * n + j] = dist[j * n + i] = std::sqrt(acc);
    }
  }
  return dist;
}

EvalTable evaluate_methods(ViewNet& net, std::span<const TriMesh> models, const SplitResult& split,
                           const RenderConfig& cfg, const EvalProtocol& protocol) {
  const int s = net.config().image_size;
  std::vector<TriMesh> train_models;
  for (int id : split.train_ids) train_models.push_back(models[id]);

  EvalTable table;
  std::array<std::array<double, 4>, 4> sums{};  // [method][column]
  std::array<int, 2> counts{0, 0};              // per group

  // The baseline knows the input viewpoint and gets a background-free query;
  // it does not know the sampled lighting, so its candidate set and its
  // predictions are rendered under the fixed lights.
  const auto nn_lights = basic_lights();
  for (int group = 0; group < 2; ++group) {
    const std::vector<int>& ids = group == 0 ? split.test_ids : split.difficult_ids;
    for (int id : ids) {
      SplitMix64 rng(derive_seed(protocol.seed, static_cast<std::uint64_t>(id)));
      for (int vi = 0; vi < protocol.input_views; ++vi) {
        const SceneSample scene = sample_scene(rng, cfg);
        const RenderedSample input_render =
            render_view(models[id], scene.viewpoint, scene.lights, cfg, s, s);

        const ImageU8 baseline_query = flatten_on_gray(input_render);
        ImageU8 background = procedural_background(s, s, rng);
        const ImageU8 net_input = composite(input_render, background, rng, cfg);
        const LatentCode z = encode_image(net, net_input);

        const CandidateViews candidates =
            render_candidates(train_models, scene.viewpoint, nn_lights, cfg, s);
        const std::array<int, 3> picks{
            nn_select(baseline_query, candidates, NnMetric::Hog),
            nn_select(baseline_query, candidates, NnMetric::HogRgb),
            nn_select(baseline_query, candidates, NnMetric::Rgb)};

        for (int vo = 0; vo < protocol.output_views; ++vo) {
          Viewpoint out_vp;
          out_vp.azimuth_deg = static_cast<float>(rng.uniform(0.0, 360.0));
          out_vp.elevation_deg = static_cast<float>(rng.uniform(-10.0, 40.0));
          out_vp.distance = static_cast<float>(rng.uniform(1.7, 2.3));

          const RenderedSample truth = render_view(models[id], out_vp, scene.lights, cfg, s, s);
          const ImageU8 truth_rgb = flatten_on_gray(truth);

          for (int m = 0; m < 3; ++m) {
            const RenderedSample pred =
                render_view(train_models[picks[m]], out_vp, nn_lights, cfg, s, s);
            sums[m][group] += normalized_rgb_error(flatten_on_gray(pred), truth_rgb);
            sums[m][2 + group] += normalized_depth_error(pred.depth, truth.depth);
          }
          const Prediction net_pred = decode_latent(net, z, out_vp);
          sums[3][group] += normalized_rgb_error(net_pred.rgb, truth_rgb);
          sums[3][2 + group] += normalized_depth_error(net_pred.depth, truth.depth);
          ++counts[group];
        }
      }
    }
  }

  for (int m = 0; m < 4; ++m) {
    for (int col = 0; col < 4; ++col) {
      const int group = col % 2;
      table.values[m][col] = counts[group] ? sums[m][col] / counts[group] : 0.0;
    }
  }
  return table;
}

std::string format_eval_table(const EvalTable& table) {
  std::string out = "method\tcolor_normal\tcolor_difficult\tdepth_normal\tdepth_difficult\n";
  char buf[64];
  for (int m = 0; m < 4; ++m) {
    out += EvalTable::kRows[m];
    for (int col = 0; col < 4; ++col) {
      std::snprintf(buf, sizeof(buf), "\t%.6g", table.values[m][col]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace mv3d
