#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "mv3d/cluster.hpp"
#include "mv3d/hog.hpp"
#include "mv3d/render.hpp"
#include "mv3d/viewnet.hpp"

namespace mv3d {

// Model-similarity distances render each model from three fixed viewpoints
// with fixed lighting and compare HOG descriptors; the split and the
// baselines both build on this.
std::array<Viewpoint, 3> canonical_split_viewpoints();

double model_distance(const TriMesh& a, const TriMesh& b, float vfov_deg, int image_size);

DistanceMatrix model_distance_matrix(std::span<const TriMesh> models, float vfov_deg,
                                     int image_size);

SplitResult split_models(std::span<const TriMesh> models, float vfov_deg, int image_size,
                         double test_fraction, int k_difficult);

// ---- nearest-neighbor baselines ----

enum class NnMetric { Rgb, Hog, HogRgb };

NnMetric nn_metric_from_name(const std::string& name);  // "rgb" | "hog" | "hog+rgb"

// Candidate renders at one (known) input viewpoint, gray background.
struct CandidateViews {
  std::vector<ImageU8> images;
  std::vector<HogDescriptor> hogs;
};

CandidateViews render_candidates(std::span<const TriMesh> models, const Viewpoint& vp,
                                 std::span<const Light> lights, const RenderConfig& cfg,
                                 int image_size);

// Index of the nearest candidate. HOG+RGB weighs the two distances equally
// after dividing each by its mean over the candidate set.
int nn_select(const ImageU8& query, const CandidateViews& candidates, NnMetric metric);

struct NnPrediction {
  int model_index = -1;
  ImageU8 rgb;
  DepthImage depth;
};

// The full baseline: candidates rendered at the known input viewpoint, the
// winner re-rendered at the requested output viewpoint.
NnPrediction nn_predict(const ImageU8& input_view, std::span<const TriMesh> train_models,
                        NnMetric metric, const Viewpoint& input_vp, const Viewpoint& output_vp,
                        std::span<const Light> lights, const RenderConfig& cfg, int image_size);

// ---- error metric ----

// Mean per-pixel Euclidean distance over the byte scale, divided by the
// full-scale constant 443.4 (RGB) or 65535 (depth).
double normalized_rgb_error(const ImageU8& pred, const ImageU8& truth);
double normalized_depth_error(const DepthImage& pred, const DepthImage& truth);

// ---- viewpoint-dependency matrix ----

struct ConfusionMatrix {
  int buckets = 0;                 // elevations x 12 azimuths
  std::vector<Viewpoint> centers;  // bucket center viewpoints
  std::vector<double> raw;         // [input bucket][output bucket], row-major
  std::vector<double> normalized;  // each column sums to 1

  double raw_at(int in, int out) const { return raw[static_cast<std::size_t>(in) * buckets + out]; }
  double norm_at(int in, int out) const {
    return normalized[static_cast<std::size_t>(in) * buckets + out];
  }
};

// Mean normalized RGB error over the objects for every (input bucket,
// output bucket) pair on a 30-degree grid, then column-normalized. Inputs
// and targets use gray backgrounds and fixed lighting so reruns are
// byte-identical.
ConfusionMatrix confusion_matrix(ViewNet& net, std::span<const TriMesh> objects,
                                 const RenderConfig& cfg,
                                 std::span<const float> elevations_deg);

// Great-circle angle between two viewing directions, in degrees.
double view_angle_deg(const Viewpoint& a, const Viewpoint& b);

// ---- latent-space analyses ----

// alpha*a + (1-alpha)*b; exact at the endpoints, alpha outside [0,1]
// extrapolates.
LatentCode interpolate_latent(const LatentCode& a, const LatentCode& b, float alpha);

// Pairwise Euclidean distances between encoder outputs for every
// (object, view) pair, ordered object-major.
std::vector<double> latent_distance_matrix(ViewNet& net, std::span<const TriMesh> objects,
                                           std::span<const Viewpoint> views,
                                           const RenderConfig& cfg);

// ---- method comparison table ----

struct EvalProtocol {
  int input_views = 4;
  int output_views = 4;
  std::uint64_t seed = 1234;
};

// Rows NN HOG, NN HOG+RGB, NN RGB, Network; columns color/depth x
// normal/difficult.
struct EvalTable {
  static constexpr std::array<const char*, 4> kRows{"NN HOG", "NN HOG+RGB", "NN RGB", "Network"};
  // [row][column]; columns: color normal, color difficult, depth normal, depth difficult
  std::array<std::array<double, 4>, 4> values{};
};

EvalTable evaluate_methods(ViewNet& net, std::span<const TriMesh> models, const SplitResult& split,
                           const RenderConfig& cfg, const EvalProtocol& protocol);

// Tab-separated, 6 significant digits, one header line plus 4 method rows.
std::string format_eval_table(const EvalTable& table);

}  // namespace mv3d
