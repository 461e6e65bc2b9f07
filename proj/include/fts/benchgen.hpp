#pragma once

// Synthetic multi-view benchmark: bodies that differ in girth, rendered from
// an azimuth sweep, and the ablation harness comparing fitting variants.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fts/fitting.hpp"

namespace fts {

struct BenchGenConfig {
  std::uint64_t seed = 1;
  ImageSize image{128, 160};
  int n_subjects = 9;
  int n_views = 9;
  double depth = 4.0;           // meters
  double azimuth_range = 80.0;  // degrees, views span [-range, +range]
  double jitter_deg = 5.0;      // per-joint pose jitter bound
  double shape_std = 1.0;       // 0 pins beta2 to the grid means
};

struct BenchView {
  int view_index = 0;
  double azimuth_deg = 0.0;
  PoseParams true_pose;
  CameraPose true_camera;
  Observation obs;
};

struct BenchSubject {
  int subject_id = 0;
  double mu = 0.0;
  ShapeParams true_shape;
  std::vector<BenchView> views;
};

// {-2, -1.5, ..., 2}
std::vector<double> mu_grid();

// One subject per grid mean; beta2 ~ N(mu, shape_std^2) clamped to the
// shape bound, every other coefficient zero. Views are left empty.
std::vector<BenchSubject> make_subjects(const BenchGenConfig& config);

std::vector<double> view_azimuths(int n_views, double range_deg);

// Neutral pose yawed to each azimuth with seeded joint jitter; exact 2D joints
// (confidence 1) and a hard-rendered mask.
std::vector<BenchView> make_views(const BenchSubject& subject, const BenchGenConfig& config);

// Fills every subject's views.
std::vector<BenchSubject> make_benchmark(const BenchGenConfig& config);

// Joint jitter N(0, (2 level)^2) px per coordinate, confidence decay, and a
// seeded erosion or dilation of each mask by round(level) pixels. level 0 is
// the identity.
std::vector<BenchView> add_noise(std::vector<BenchView> views, double level, std::uint64_t seed);

// Swaps every left/right detection pair (a labelling failure).
Observation swap_left_right(const Observation& obs);

Mask dilate(const Mask& mask, int radius);
Mask erode(const Mask& mask, int radius);

// ---------------------------------------------------------------------------
// Ablation harness.

enum class Method {
  JointsOnly,         // joints + priors, single depth init (the joints-only baseline)
  JointsSilhouette,   // adds the silhouette stage, single depth init
  DepthSearch,        // full single-view fit over all depth candidates
  OracleDepth,        // camera translation fixed at ground truth
};

std::string method_name(Method m);
FitConfig method_config(Method m, const FitConfig& base);

struct AblationConfig {
  FitConfig fit;
  std::vector<Method> methods = {Method::JointsOnly, Method::JointsSilhouette, Method::DepthSearch,
                                 Method::OracleDepth};
  std::vector<int> ks = {1, 2, 3, 4, 5, 6, 7};
  int threads = 1;
};

struct MethodReport {
  Method method;
  double single_view = 0.0;                   // mean over subjects and views
  std::vector<double> per_view;               // mean over subjects, per view index
  std::vector<std::vector<double>> single_errors;  // [subject][view], NaN when failed
  std::vector<std::optional<double>> multi;   // indexed like AblationConfig::ks
  int failed_fits = 0;
};

struct BenchReport {
  std::vector<int> ks;
  std::vector<double> azimuths;
  std::vector<MethodReport> methods;

  const MethodReport* find(Method m) const;
};

double shape_error(const ShapeParams& estimate, const ShapeParams& truth);

BenchReport run_ablation(const std::vector<BenchSubject>& subjects, const AblationConfig& config);

}  // namespace fts
