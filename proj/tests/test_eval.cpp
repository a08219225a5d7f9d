#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mv3d/evalsuite.hpp"
#include "mv3d/rng.hpp"

using namespace mv3d;

namespace {

// Brute-force average linkage: every round recomputes every cluster-pair
// linkage as the mean of the original pairwise distances, with the same
// lowest-member-id tie break. Independent of the Lance-Williams updates used
// by the implementation.
std::vector<Merge> oracle_average_linkage(const DistanceMatrix& dist) {
  const int n = dist.size();
  std::vector<std::vector<int>> clusters(n);
  for (int i = 0; i < n; ++i) clusters[i] = {i};
  std::vector<Merge> merges;
  while (clusters.size() > 1) {
    double best = 0;
    std::size_t bi = 0, bj = 0;
    bool first = true;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double sum = 0;
        for (int a : clusters[i]) {
          for (int b : clusters[j]) sum += dist.at(a, b);
        }
        const double d = sum / (static_cast<double>(clusters[i].size()) * clusters[j].size());
        const int lo_i = clusters[i].front(), lo_j = clusters[j].front();
        const auto key = std::make_tuple(d, std::min(lo_i, lo_j), std::max(lo_i, lo_j));
        const auto best_key = std::make_tuple(best, clusters[bi].empty() ? 0 : clusters[bi].front(),
                                              clusters[bj].empty() ? 0 : clusters[bj].front());
        if (first || key < best_key) {
          best = d;
          bi = i;
          bj = j;
          first = false;
        }
      }
    }
    Merge m;
    m.a = std::min(clusters[bi].front(), clusters[bj].front());
    m.b = std::max(clusters[bi].front(), clusters[bj].front());
    m.distance = best;
    m.members.resize(clusters[bi].size() + clusters[bj].size());
    std::merge(clusters[bi].begin(), clusters[bi].end(), clusters[bj].begin(), clusters[bj].end(),
               m.members.begin());
    clusters[bi] = m.members;
    clusters.erase(clusters.begin() + bj);
    merges.push_back(std::move(m));
  }
  return merges;
}

DistanceMatrix random_matrix(int n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  DistanceMatrix d(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) d.set(i, j, rng.uniform(0.1, 10.0));
  }
  return d;
}

}  // namespace

TEST_CASE("hog: constant image gives an all-zero descriptor of the right length") {
  ImageF flat(32, 32, 1, 0.47f);
  const HogDescriptor d = hog(flat);
  CHECK(d.size() == 324);  // (4-1)*(4-1) blocks * 4 cells * 9 bins
  CHECK(hog_length(32, 32) == 324);
  for (float v : d) CHECK(v == 0.0f);
  CHECK_THROWS_AS(hog(ImageF(30, 32, 1)), std::invalid_argument);
}

TEST_CASE("hog: vertical step edge concentrates energy in the 0-degree bins") {
  ImageF img(32, 32, 1, 0.0f);
  for (int y = 0; y < 32; ++y)
    for (int x = 16; x < 32; ++x) img.at(x, y, 0) = 1.0f;
  const HogDescriptor d = hog(img);

  // a purely horizontal gradient votes into the two bins straddling 0 degrees
  // (bin 0 and bin 8 under centers at (k+0.5)*20); everything else stays 0
  double straddle = 0, rest = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const int bin = static_cast<int>(i % 9);
    if (bin == 0 || bin == 8) {
      straddle += d[i];
    } else {
      rest += d[i];
    }
  }
  CHECK(straddle > 0.0);
  CHECK(rest == doctest::Approx(0.0));

  // invariant to adding a constant (up to float rounding of the differences)
  ImageF shifted = img;
  for (auto& v : shifted.px) v += 0.3f;
  const HogDescriptor ds = hog(shifted);
  REQUIRE(ds.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(ds[i] == doctest::Approx(d[i]).epsilon(1e-5));
  }
}

TEST_CASE("model_distance identity, symmetry, family separation") {
  const TriMesh a = gen_object(ObjectFamily::Vehicle, 1);
  const TriMesh b = gen_object(ObjectFamily::Vehicle, 2);
  CHECK(model_distance(a, a, 35.0f, 32) == 0.0);
  CHECK(model_distance(a, b, 35.0f, 32) ==
        doctest::Approx(model_distance(b, a, 35.0f, 32)).epsilon(1e-9));
  CHECK(model_distance(a, b, 35.0f, 32) > 0.0);

  double cross = 0, within = 0;
  for (int i = 0; i < 20; ++i) {
    const TriMesh v1 = gen_object(ObjectFamily::Vehicle, 100 + 2 * i);
    const TriMesh v2 = gen_object(ObjectFamily::Vehicle, 101 + 2 * i);
    const TriMesh c1 = gen_object(ObjectFamily::Chair, 100 + i);
    within += model_distance(v1, v2, 35.0f, 32);
    cross += model_distance(v1, c1, 35.0f, 32);
  }
  CHECK(cross > within);
}

TEST_CASE("average-linkage clustering equals the brute-force oracle") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const DistanceMatrix dist = random_matrix(8, seed);
    const auto fast = agglomerate_average(dist);
    const auto slow = oracle_average_linkage(dist);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t i = 0; i < fast.size(); ++i) {
      INFO("seed ", seed, " merge ", i);
      CHECK(fast[i].a == slow[i].a);
      CHECK(fast[i].b == slow[i].b);
      CHECK(fast[i].members == slow[i].members);
      CHECK(fast[i].distance == doctest::Approx(slow[i].distance).epsilon(1e-9));
    }
  }
}

TEST_CASE("clustering tie-break on an all-identical matrix is by lowest id") {
  DistanceMatrix dist(6);
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) dist.set(i, j, 1.0);
  const auto merges = agglomerate_average(dist);
  CHECK(merges[0].a == 0);
  CHECK(merges[0].b == 1);
  CHECK(merges[1].a == 0);  // next-lowest pair ids after the first merge
  CHECK(merges[1].b == 2);
}

TEST_CASE("split_dataset separates two synthetic blobs") {
  // 12 models: ids 0-7 one tight blob, ids 8-11 another; blobs far apart
  DistanceMatrix dist(12);
  SplitMix64 rng(3);
  for (int i = 0; i < 12; ++i) {
    for (int j = i + 1; j < 12; ++j) {
      const bool same = (i < 8) == (j < 8);
      dist.set(i, j, same ? rng.uniform(0.1, 0.5) : rng.uniform(10.0, 11.0));
    }
  }
  const SplitResult split = split_dataset(dist, 0.3, 2);
  // target size 4: the small blob is the natural test cluster
  std::set<int> test(split.test_ids.begin(), split.test_ids.end());
  const bool in_small = test.count(8) || test.count(9) || test.count(10) || test.count(11);
  if (in_small) {
    for (int id : split.test_ids) CHECK(id >= 8);
  } else {
    for (int id : split.test_ids) CHECK(id < 8);
  }
  CHECK(split.difficult_ids.size() == 2);

  // partition invariants
  std::set<int> all;
  for (int id : split.train_ids) all.insert(id);
  for (int id : split.test_ids) CHECK(all.insert(id).second);
  for (int id : split.difficult_ids) CHECK(all.insert(id).second);
  CHECK(all.size() == 12);

  CHECK_THROWS_AS(split_dataset(random_matrix(8, 0), 0.2, 1), std::invalid_argument);
}

TEST_CASE("split over 200 seeded vehicles partitions the set") {
  const auto models = generate_object_set(ObjectFamily::Vehicle, 200, 42);
  const SplitResult split = split_models(models, 35.0f, 32, 0.15, 5);
  std::set<int> all;
  for (int id : split.train_ids) CHECK(all.insert(id).second);
  for (int id : split.test_ids) CHECK(all.insert(id).second);
  for (int id : split.difficult_ids) CHECK(all.insert(id).second);
  CHECK(all.size() == 200);
  CHECK(split.difficult_ids.size() == 5);
  CHECK(!split.test_ids.empty());
  CHECK(split.test_ids.size() <= 2 * 30);
}

TEST_CASE("nn_select matches a brute-force argmin and honors self-matches") {
  RenderConfig cfg;
  cfg.mode = RenderMode::Basic;
  const auto models = generate_object_set(ObjectFamily::Vehicle, 50, 7);
  const Viewpoint vp{75, 12, 2.0f};
  const auto lights = basic_lights();
  const CandidateViews cands = render_candidates(models, vp, lights, cfg, 32);

  // query = candidate 31 rendered identically
  const ImageU8& query = cands.images[31];
  CHECK(nn_select(query, cands, NnMetric::Rgb) == 31);
  CHECK(nn_select(query, cands, NnMetric::Hog) == 31);
  CHECK(nn_select(query, cands, NnMetric::HogRgb) == 31);

  // brute-force RGB argmin for an off-model query
  const TriMesh probe = gen_object(ObjectFamily::Vehicle, 9999);
  const ImageU8 probe_img =
      flatten_on_gray(render_view(probe, vp, lights, cfg, 32, 32));
  int best = 0;
  double best_d = 1e300;
  for (std::size_t i = 0; i < cands.images.size(); ++i) {
    double acc = 0;
    for (std::size_t p = 0; p < probe_img.px.size(); ++p) {
      const double d = static_cast<double>(probe_img.px[p]) - cands.images[i].px[p];
      acc += d * d;
    }
    if (acc < best_d) {
      best_d = acc;
      best = static_cast<int>(i);
    }
  }
  CHECK(nn_select(probe_img, cands, NnMetric::Rgb) == best);

  CHECK_THROWS_AS(nn_select(probe_img, CandidateViews{}, NnMetric::Rgb), std::invalid_argument);
}

TEST_CASE("nn_predict on a training-set query has error exactly zero") {
  RenderConfig cfg;
  const auto models = generate_object_set(ObjectFamily::Vehicle, 12, 21);
  const Viewpoint in_vp{130, 5, 1.9f};
  const Viewpoint out_vp{250, 30, 2.2f};
  const auto lights = basic_lights();

  const ImageU8 query = flatten_on_gray(render_view(models[4], in_vp, lights, cfg, 32, 32));
  for (NnMetric metric : {NnMetric::Rgb, NnMetric::Hog, NnMetric::HogRgb}) {
    const NnPrediction pred = nn_predict(query, models, metric, in_vp, out_vp, lights, cfg, 32);
    CHECK(pred.model_index == 4);
    const RenderedSample truth = render_view(models[4], out_vp, lights, cfg, 32, 32);
    CHECK(normalized_rgb_error(pred.rgb, flatten_on_gray(truth)) == 0.0);
    CHECK(normalized_depth_error(pred.depth, truth.depth) == 0.0);
  }
}

TEST_CASE("normalized error closed forms") {
  ImageU8 zero(8, 8, 3, 0), full(8, 8, 3, 255);
  CHECK(normalized_rgb_error(zero, zero) == 0.0);
  const double expect = std::sqrt(3.0 * 255.0 * 255.0) / 443.4;
  CHECK(normalized_rgb_error(full, zero) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(expect == doctest::Approx(0.99611).epsilon(2e-5));

  DepthImage dfar(8, 8, 65535), dzero(8, 8, 0);
  CHECK(normalized_depth_error(dfar, dzero) == 1.0);
  CHECK(normalized_depth_error(dfar, dfar) == 0.0);

  // scaled-metric properties on random images
  SplitMix64 rng(10);
  ImageU8 a(8, 8, 3), b(8, 8, 3), c(8, 8, 3);
  for (auto& v : a.px) v = static_cast<std::uint8_t>(rng.uniform_int(256));
  for (auto& v : b.px) v = static_cast<std::uint8_t>(rng.uniform_int(256));
  for (auto& v : c.px) v = static_cast<std::uint8_t>(rng.uniform_int(256));
  CHECK(normalized_rgb_error(a, b) == normalized_rgb_error(b, a));
  CHECK(normalized_rgb_error(a, b) > 0.0);
  CHECK(normalized_rgb_error(a, c) <= normalized_rgb_error(a, b) + normalized_rgb_error(b, c));
  CHECK_THROWS_AS(normalized_rgb_error(a, ImageU8(4, 4, 3)), std::invalid_argument);
}

TEST_CASE("confusion matrix: shape, column normalization, near-uniform when untrained") {
  NetConfig net_cfg;
  net_cfg.enc_widths = {4, 4, 8, 8, 8};
  net_cfg.latent_size = 16;
  net_cfg.angle_width = 8;
  net_cfg.dec_fc_widths = {16, 16, 8};
  RenderConfig cfg;
  const auto objects = generate_object_set(ObjectFamily::Vehicle, 2, 31);
  const std::array<float, 2> elevations{0.0f, 30.0f};

  double worst_ratio = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ViewNet net(net_cfg);
    net.init_he(seed);
    const ConfusionMatrix cm = confusion_matrix(net, objects, cfg, elevations);
    REQUIRE(cm.buckets == 24);  // 2 elevations x 12 azimuths
    REQUIRE(cm.normalized.size() == 24u * 24u);
    for (int j = 0; j < cm.buckets; ++j) {
      double col = 0, mx = 0, mn = 1e30;
      for (int i = 0; i < cm.buckets; ++i) {
        col += cm.norm_at(i, j);
        mx = std::max(mx, cm.norm_at(i, j));
        mn = std::min(mn, cm.norm_at(i, j));
      }
      CHECK(col == doctest::Approx(1.0).epsilon(1e-6));
      worst_ratio = std::max(worst_ratio, mx / mn);
    }
  }
  CHECK(worst_ratio < 3.0);  // untrained predictions are near-constant
}

TEST_CASE("latent interpolation endpoints are exact") {
  LatentCode a{1.5f, -2.0f, 0.25f};
  LatentCode b{0.5f, 3.0f, -1.0f};
  CHECK(interpolate_latent(a, b, 1.0f) == a);
  CHECK(interpolate_latent(a, b, 0.0f) == b);
  CHECK(interpolate_latent(a, a, 0.5f) == a);
  const LatentCode mid = interpolate_latent(a, b, 0.25f);
  CHECK(mid[0] == doctest::Approx(0.25f * 1.5f + 0.75f * 0.5f));
  const LatentCode extra = interpolate_latent(a, b, 1.5f);  // extrapolation allowed
  CHECK(extra[1] == doctest::Approx(1.5f * -2.0f - 0.5f * 3.0f));
  CHECK_THROWS_AS(interpolate_latent(a, LatentCode{1.0f}, 0.5f), std::invalid_argument);
}

TEST_CASE("latent distance matrix is a zero-diagonal symmetric matrix") {
  NetConfig net_cfg;
  net_cfg.enc_widths = {4, 4, 8, 8, 8};
  net_cfg.latent_size = 16;
  net_cfg.angle_width = 8;
  net_cfg.dec_fc_widths = {16, 16, 8};
  ViewNet net(net_cfg);
  net.init_he(55);
  RenderConfig cfg;
  const auto objects = generate_object_set(ObjectFamily::Vehicle, 3, 60);
  const std::array<Viewpoint, 2> views{Viewpoint{0, 15, 2.0f}, Viewpoint{120, 15, 2.0f}};
  const auto dist = latent_distance_matrix(net, objects, views, cfg);
  const std::size_t n = 6;
  REQUIRE(dist.size() == n * n);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(dist[i * n + i] == 0.0);
    for (std::size_t j = 0; j < n; ++j) CHECK(dist[i * n + j] == dist[j * n + i]);
  }
}

TEST_CASE("view angle and metric name parsing") {
  CHECK(view_angle_deg({10, 20, 2}, {10, 20, 2}) == doctest::Approx(0.0));
  CHECK(view_angle_deg({0, 0, 2}, {180, 0, 2}) == doctest::Approx(180.0));
  CHECK(view_angle_deg({0, 0, 2}, {90, 0, 2}) == doctest::Approx(90.0));
  CHECK(nn_metric_from_name("rgb") == NnMetric::Rgb);
  CHECK(nn_metric_from_name("hog") == NnMetric::Hog);
  CHECK(nn_metric_from_name("hog+rgb") == NnMetric::HogRgb);
  CHECK_THROWS_AS(nn_metric_from_name("cosine"), ConfigError);
}

TEST_CASE("eval table formatting has a header and four method rows") {
  EvalTable table;
  table.values[0] = {0.028, 0.039, 0.0058, 0.0225};
  table.values[3] = {0.013, 0.028, 0.0057, 0.0207};
  const std::string text = format_eval_table(table);
  int rows = 0;
  std::size_t pos = 0;
  while ((pos = text.find('\n', pos)) != std::string::npos) {
    ++rows;
    ++pos;
  }
  CHECK(rows == 5);
  CHECK(text.find("NN HOG\t") != std::string::npos);
  CHECK(text.find("Network\t0.013") != std::string::npos);
}
