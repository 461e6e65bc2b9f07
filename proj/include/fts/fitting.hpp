#pragma once

// Staged single-view fitting with depth-candidate search, median-based
// outlier rejection, and the joint multi-photo fit over one shared shape.

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fts/bodymodel.hpp"
#include "fts/image.hpp"
#include "fts/projection.hpp"
#include "fts/silhouette.hpp"

namespace fts {

struct Observation {
  ImageSize image;
  Detections joints;
  Mask mask;
};

// Throws MissingJoints / InvalidArgument when the observation breaks its
// invariants (confidences in [0, 1], at least six detections, mask size).
void validate(const Observation& obs);

struct FitConfig {
  double sigma_gm = 50.0;            // Geman-McClure scale in pixels at the reference width
  double sigma_reference_width = 640.0;
  double lambda_joints = 1.0;
  double lambda_silhouette = 300.0;
  double lambda_height = 100.0;
  double lambda_pose = 0.05;
  double lambda_shape = 0.1;
  double lambda_limit = 1.0;
  double lambda_inside = 1.0;        // lambda1
  double lambda_outside = 1.0;       // lambda2
  int pyramid_levels = kPyramidLevels;
  int n_depth = 5;
  double depth_range = 1.0;          // meters
  int max_iters = 200;
  double grad_tol = 1e-6;
  double rel_f_tol = 1e-10;
  double sharpness = 2.0;            // 1 / pixels
  bool use_silhouette = true;        // stage (c); off for the joints-only variant
  double refine_sharpness = 8.0;     // fine silhouette pass after stage (c); 0 disables it
  int refine_levels = 1;             // pyramid levels used by the fine pass

  double sigma_pixels(const ImageSize& image) const { return sigma_gm * image.width / sigma_reference_width; }
  SilhouetteWeights silhouette_weights() const { return {lambda_inside, lambda_outside, sharpness}; }
  // Throws InvalidArgument on negative weights or non-positive scales.
  void validate() const;
};

struct TermEnergies {
  double joints = 0.0;
  double height = 0.0;
  double prior = 0.0;
  double silhouette = 0.0;
  double total() const { return joints + height + prior + silhouette; }
};

struct FitResult {
  ShapeParams shape;
  PoseParams pose;
  CameraPose camera;
  TermEnergies energies;
  double energy_total = 0.0;
  bool converged = false;
  int depth_candidate_index = -1;
  std::vector<double> depth_candidates;
  std::vector<double> candidate_energies;  // +inf for failed candidates
};

struct MultiFitResult {
  ShapeParams shape;
  std::vector<int> kept;  // indices into the input observation list
  std::vector<PoseParams> poses;
  std::vector<CameraPose> cameras;
  TermEnergies energies;
  double energy_total = 0.0;
  bool converged = false;
};

// ---------------------------------------------------------------------------
// Individual terms (unweighted unless stated).

// Sum over detections of w_j * rho(|r_j|), rho(e) = s^2 e^2 / (s^2 + e^2).
double joint_energy(const ShapeParams& shape, const PoseParams& pose, const CameraPose& camera,
                    const Observation& obs, double sigma_pixels);
double geman_mcclure(double residual, double sigma);
// Squared deviation of the rest-pose height from the template height.
double height_energy(const ShapeParams& shape);
// Weighted: lambda_shape |beta|^2 + lambda_pose sum |theta_j - mean_j|^2
// + lambda_limit sum hinge^2 over knee and elbow hyperextension.
double prior_energy(const ShapeParams& shape, const PoseParams& pose, const FitConfig& config);

// ---------------------------------------------------------------------------
// Packed parameters: beta (10) | root (3) | articulated joints (11 x 3) | translation (3).

inline constexpr int kViewBlock = 3 + 3 * static_cast<int>(kArticulatedJoints.size()) + 3;
inline constexpr int kViewParams = kNumBetas + kViewBlock;
inline constexpr int kRootOffset = kNumBetas;
inline constexpr int kArticOffset = kRootOffset + 3;
inline constexpr int kTransOffset = kViewParams - 3;
using ViewVector = Eigen::Matrix<double, kViewParams, 1>;

ViewVector pack_view(const ShapeParams& shape, const PoseParams& pose, const Vec3& translation);
void unpack_view(const ViewVector& x, ShapeParams& shape, PoseParams& pose, Vec3& translation);

// Observation with its silhouette distance-field pyramids precomputed.
struct PreparedObservation {
  Observation obs;
  std::optional<SilhouetteTarget> target;
  double focal = 0.0;
};

// Throws EmptyMask when the silhouette is requested and the mask is unusable.
PreparedObservation prepare(const Observation& obs, const FitConfig& config);

struct TermSelection {
  bool joints = true;
  bool height = true;
  bool prior = true;
  bool silhouette = false;
  bool camera_stage_joints = false;  // restrict E_J to the six leg detections
};

struct ViewEvaluation {
  TermEnergies terms;  // weighted
  ViewVector grad = ViewVector::Zero();
};

// Weighted terms and their exact gradient at x. Throws BehindCamera.
ViewEvaluation evaluate_view(const ViewVector& x, const PreparedObservation& prep, const FitConfig& config,
                             const TermSelection& terms, bool want_grad = true);

// ---------------------------------------------------------------------------
// Stages.

struct CameraStageResult {
  CameraPose camera;
  Vec3 root_orient;
  double energy = 0.0;
  double energy_start = 0.0;
};

// Solves translation and root orientation on the six leg joints with the
// shape fixed and every other joint at the neutral pose.
CameraStageResult camera_stage(const ShapeParams& shape_fixed, const Observation& obs,
                               const CameraPose& camera_init, const FitConfig& config);

// Pelvis placed on the ray through the mean hip detection at the given depth.
CameraPose initial_camera(const Observation& obs, double depth);

FitResult fit_single(const Observation& obs, const FitConfig& config);

// Stages (b) and (c) from an explicit start; the translation is optimized in
// stage (c) only when optimize_translation is set.
FitResult fit_from_start(const Observation& obs, const ShapeParams& shape, const PoseParams& pose,
                         const Vec3& translation, const FitConfig& config, bool optimize_translation);

// Stages (b) and (c) with the camera translation held at the given value.
FitResult fit_single_fixed_camera(const Observation& obs, const Vec3& translation, const FitConfig& config);

// Keeps the k shapes nearest (L2) the component-wise median; ties by index.
// Returned indices are ordered by distance.
std::vector<int> reject_outliers(const std::vector<ShapeParams>& shapes, int k);
ShapeParams median_shape(const std::vector<ShapeParams>& shapes);

// Joint fit over inlier views: one shape, per-view pose and camera.
MultiFitResult fit_multi(const std::vector<Observation>& observations, const std::vector<FitResult>& singles,
                         const FitConfig& config, int k);

// As fit_multi with every camera translation held at its ground truth. The
// single-view starts come from fit_single_fixed_camera.
MultiFitResult fit_multi_oracle_depth(const std::vector<Observation>& observations,
                                      const std::vector<Vec3>& true_translations, const FitConfig& config,
                                      int k, const std::vector<FitResult>* oracle_singles = nullptr);

// Same evaluation as the final stage of a fit; used to report per-term energies.
TermEnergies evaluate_energies(const Observation& obs, const ShapeParams& shape, const PoseParams& pose,
                               const CameraPose& camera, const FitConfig& config);

// Wraps every rotation into magnitude <= pi.
Vec3 canonical_axis_angle(const Vec3& aa);

}  // namespace fts
