#include "fts/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <type_traits>

#include "fts/optimizer.hpp"

namespace fts {

namespace {

using Jet = ceres::Jet<double, kViewParams>;
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class T>
T seed(double value, int index) {
  if constexpr (std::is_same_v<T, double>) {
    (void)index;
    return value;
  } else {
    return T(value, index);
  }
}

template <class T>
double value_of(const T& v) {
  if constexpr (std::is_same_v<T, double>) {
    return v;
  } else {
    return v.a;
  }
}

template <class T>
Vec3T<T> seed3(const ViewVector& x, int offset) {
  return Vec3T<T>(seed<T>(x(offset), offset), seed<T>(x(offset + 1), offset + 1),
                  seed<T>(x(offset + 2), offset + 2));
}

// Hyperextension of the knees (negative flexion about x) and elbows
// (backwards swing about y; the sign flips between sides).
template <class T>
T limit_penalty(const std::array<Vec3T<T>, kNumJoints>& rots) {
  T sum = T(0.0);
  auto hinge = [&](const T& over) {
    if (over > T(0.0)) sum += over * over;
  };
  hinge(-rots[kRKnee].x());
  hinge(-rots[kLKnee].x());
  hinge(rots[kRElbow].y());
  hinge(-rots[kLElbow].y());
  return sum;
}

template <class T>
ViewEvaluation evaluate_impl(const ViewVector& x, const PreparedObservation& prep, const FitConfig& cfg,
                             const TermSelection& sel) {
  const Observation& obs = prep.obs;
  BetaT<T> beta;
  for (int k = 0; k < kNumBetas; ++k) beta(k) = seed<T>(x(k), k);
  const Vec3T<T> root = seed3<T>(x, kRootOffset);
  std::array<Vec3T<T>, kNumJoints> rots;
  for (auto& r : rots) r = Vec3T<T>::Zero();
  for (size_t a = 0; a < kArticulatedJoints.size(); ++a)
    rots[kArticulatedJoints[a]] = seed3<T>(x, kArticOffset + 3 * static_cast<int>(a));
  const Vec3T<T> trans = seed3<T>(x, kTransOffset);

  ViewEvaluation out;
  T total = T(0.0);
  const auto joints = pose_joints<T>(beta, root, rots);
  const double cx = 0.5 * obs.image.width, cy = 0.5 * obs.image.height;

  if (sel.joints) {
    const double s2 = std::pow(cfg.sigma_pixels(obs.image), 2);
    T e = T(0.0);
    auto add = [&](int d) {
      const double w = obs.joints.confidence[d];
      if (!(w > 0.0)) return;
      const Vec3T<T> pc = joints[kDetectionJoint[d]] + trans;
      const auto uv = project_camera_point<T>(pc, prep.focal, cx, cy);
      const T du = uv.x() - obs.joints.points[d].x();
      const T dv = uv.y() - obs.joints.points[d].y();
      const T r2 = du * du + dv * dv;
      e += w * (s2 * r2 / (s2 + r2));
    };
    if (sel.camera_stage_joints) {
      for (int d : kCameraStageDetections) add(d);
    } else {
      for (int d = 0; d < kNumDetections; ++d) add(d);
    }
    e *= cfg.lambda_joints;
    out.terms.joints = value_of(e);
    total += e;
  }
  if (sel.height) {
    const T dh = rest_height<T>(beta) - T(skeleton().template_height);
    const T e = cfg.lambda_height * dh * dh;
    out.terms.height = value_of(e);
    total += e;
  }
  if (sel.prior) {
    T e = cfg.lambda_shape * beta.squaredNorm();
    const PoseParams& mean = neutral_pose();
    T pose_sq = T(0.0);
    for (int j : kArticulatedJoints) pose_sq += (rots[j] - mean.joint_rots[j].template cast<T>()).squaredNorm();
    e += cfg.lambda_pose * pose_sq + cfg.lambda_limit * limit_penalty<T>(rots);
    out.terms.prior = value_of(e);
    total += e;
  }
  if constexpr (!std::is_same_v<T, double>) out.grad = total.v;

  if (sel.silhouette) {
    if (!prep.target) throw Error(Errc::InvalidArgument, "silhouette term requested without a mask target");
    const Skeleton& sk = skeleton();
    std::array<Vec3T<T>, kNumJoints> pc;
    for (int j = 0; j < kNumJoints; ++j) pc[j] = joints[j] + trans;
    std::array<T, kNumJoints> radius;
    for (int j = 1; j < kNumJoints; ++j) radius[j] = capsule_radius<T>(sk, beta, j);

    CameraPose cam;
    cam.focal = prep.focal;
    cam.image = obs.image;
    const SilhouetteWeights weights = cfg.silhouette_weights();
    double e_sil = 0.0;
    std::array<StadiumT<T>, kNumCapsules> st_t;
    std::array<Stadium, kNumCapsules> st;
    std::array<StadiumGrad, kNumCapsules> g;
    const int levels = std::min(cfg.pyramid_levels, static_cast<int>(prep.target->dt_mask.size()));
    for (int l = 0; l < levels; ++l) {
      const LevelCamera lc = level_camera(cam, l);
      for (int j = 1; j < kNumJoints; ++j) {
        st_t[j - 1] = project_capsule<T>(pc[sk.parent[j]], pc[j], radius[j], lc);
        const auto& s = st_t[j - 1];
        st[j - 1] = {value_of(s.ax), value_of(s.ay), value_of(s.ra),
                     value_of(s.bx), value_of(s.by), value_of(s.rb)};
      }
      if constexpr (std::is_same_v<T, double>) {
        e_sil += stadium_energy(st, prep.target->dt_mask[l], prep.target->dt_inverse[l], weights);
      } else {
        e_sil += stadium_energy(st, prep.target->dt_mask[l], prep.target->dt_inverse[l], weights, g);
        for (int s = 0; s < kNumCapsules; ++s) {
          const auto& j = st_t[s];
          const std::array<const T*, 6> parts = {&j.ax, &j.ay, &j.ra, &j.bx, &j.by, &j.rb};
          for (int k = 0; k < 6; ++k)
            if (g[s][k] != 0.0) out.grad += cfg.lambda_silhouette * g[s][k] * parts[k]->v;
        }
      }
    }
    out.terms.silhouette = cfg.lambda_silhouette * e_sil;
  }
  return out;
}

// Indices into the packed view vector.
std::vector<int> index_range(int begin, int end) {
  std::vector<int> v(end - begin);
  std::iota(v.begin(), v.end(), begin);
  return v;
}

std::vector<int> concat(std::initializer_list<std::vector<int>> parts) {
  std::vector<int> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

const std::vector<int> kBetaIdx = index_range(0, kNumBetas);
const std::vector<int> kRootIdx = index_range(kRootOffset, kRootOffset + 3);
const std::vector<int> kArticIdx = index_range(kArticOffset, kTransOffset);
const std::vector<int> kTransIdx = index_range(kTransOffset, kViewParams);

LbfgsOptions lbfgs_options(const FitConfig& cfg) {
  LbfgsOptions o;
  o.max_iters = cfg.max_iters;
  o.grad_tol = cfg.grad_tol;
  o.rel_f_tol = cfg.rel_f_tol;
  return o;
}

struct StageOutcome {
  ViewVector x;
  double f_start = 0.0;
  double f_end = 0.0;
  bool converged = false;
};

// Minimizes the selected terms over the active subset of a single view.
StageOutcome run_view_stage(const ViewVector& x0, const std::vector<int>& active, const PreparedObservation& prep,
                            const FitConfig& cfg, const TermSelection& sel) {
  const int n = static_cast<int>(active.size());
  Eigen::VectorXd xr(n), lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    xr(i) = x0(active[i]);
    const bool is_beta = active[i] < kNumBetas;
    lo(i) = is_beta ? -kShapeBound : -kInf;
    hi(i) = is_beta ? kShapeBound : kInf;
  }
  ViewVector work = x0;
  ObjectiveFn fn = [&](const Eigen::VectorXd& v, Eigen::VectorXd* g) -> double {
    for (int i = 0; i < n; ++i) work(active[i]) = v(i);
    try {
      const ViewEvaluation ev = evaluate_view(work, prep, cfg, sel, g != nullptr);
      if (g) {
        g->resize(n);
        for (int i = 0; i < n; ++i) (*g)(i) = ev.grad(active[i]);
      }
      return ev.terms.total();
    } catch (const Error& e) {
      if (e.code() == Errc::BehindCamera) return kInf;
      throw;
    }
  };
  const LbfgsResult r = minimize_lbfgs(fn, xr, lo, hi, lbfgs_options(cfg));
  StageOutcome out;
  out.x = x0;
  for (int i = 0; i < n; ++i) out.x(active[i]) = r.x(i);
  out.f_start = r.f_start;
  out.f_end = r.f;
  out.converged = r.converged;
  return out;
}

void canonicalize(ViewVector& x) {
  for (int off = kRootOffset; off < kTransOffset; off += 3) {
    const Vec3 c = canonical_axis_angle(x.segment<3>(off));
    x.segment<3>(off) = c;
  }
}

TermSelection final_terms(const FitConfig& cfg) {
  TermSelection sel;
  sel.silhouette = cfg.use_silhouette;
  return sel;
}

FitResult make_result(const ViewVector& x, const PreparedObservation& prep, const FitConfig& cfg) {
  FitResult r;
  Vec3 t;
  unpack_view(x, r.shape, r.pose, t);
  r.camera.translation = t;
  r.camera.focal = prep.focal;
  r.camera.image = prep.obs.image;
  r.energies = evaluate_view(x, prep, cfg, final_terms(cfg), false).terms;
  r.energy_total = r.energies.total();
  return r;
}

FitConfig fine_config(const FitConfig& cfg) {
  FitConfig fine = cfg;
  fine.sharpness = cfg.refine_sharpness;
  fine.pyramid_levels = cfg.refine_levels;
  return fine;
}

bool has_fine_pass(const FitConfig& cfg) { return cfg.use_silhouette && cfg.refine_sharpness > 0.0; }

// Stages (b) and (c) from a camera-stage starting point, then the fine
// silhouette pass when configured.
FitResult refine_view(ViewVector x, const PreparedObservation& prep, const FitConfig& cfg, bool optimize_translation) {
  TermSelection joints_only;
  StageOutcome b = run_view_stage(x, concat({kBetaIdx, kRootIdx, kArticIdx}), prep, cfg, joints_only);
  bool converged = b.converged;
  x = b.x;
  if (cfg.use_silhouette) {
    TermSelection full;
    full.silhouette = true;
    const auto active = optimize_translation ? concat({kBetaIdx, kRootIdx, kArticIdx, kTransIdx})
                                             : concat({kBetaIdx, kRootIdx, kArticIdx});
    StageOutcome c = run_view_stage(x, active, prep, cfg, full);
    converged = c.converged;
    x = c.x;
    if (has_fine_pass(cfg)) {
      StageOutcome f = run_view_stage(x, active, prep, fine_config(cfg), full);
      converged = f.converged;
      x = f.x;
    }
  }
  canonicalize(x);
  FitResult r = make_result(x, prep, has_fine_pass(cfg) ? fine_config(cfg) : cfg);
  r.converged = converged;
  return r;
}

void require_camera_stage_joints(const Observation& obs) {
  for (int d : kCameraStageDetections)
    if (!(obs.joints.confidence[d] > 0.0))
      throw Error(Errc::MissingJoints, "hip, knee and ankle detections are required for the camera stage");
}

ViewVector start_vector(const ShapeParams& shape, const Vec3& root, const Vec3& translation) {
  PoseParams pose = neutral_pose();
  pose.root_orient = root;
  return pack_view(shape, pose, translation);
}

}  // namespace

// ---------------------------------------------------------------------------

void validate(const Observation& obs) {
  if (obs.image.width <= 0 || obs.image.height <= 0)
    throw Error(Errc::InvalidArgument, "observation image size must be positive");
  int present = 0;
  for (int d = 0; d < kNumDetections; ++d) {
    const double w = obs.joints.confidence[d];
    if (!(w >= 0.0 && w <= 1.0)) throw Error(Errc::InvalidArgument, "joint confidence outside [0, 1]");
    if (!obs.joints.points[d].allFinite()) throw Error(Errc::InvalidArgument, "non-finite joint detection");
    if (w > 0.0) ++present;
  }
  if (present < 6) throw Error(Errc::MissingJoints, "fewer than six joints detected");
  if (obs.mask.size() != 0 && !obs.mask.same_shape(obs.image.width, obs.image.height))
    throw Error(Errc::ShapeMismatch, "mask resolution differs from the image size");
}

void FitConfig::validate() const {
  for (double w : {lambda_joints, lambda_silhouette, lambda_height, lambda_pose, lambda_shape, lambda_limit,
                   lambda_inside, lambda_outside}) {
    if (!(w >= 0.0)) throw Error(Errc::InvalidArgument, "term weights must be non-negative");
  }
  if (!(sigma_gm > 0.0) || !(sigma_reference_width > 0.0))
    throw Error(Errc::InvalidArgument, "Geman-McClure scale must be positive");
  if (!(sharpness > 0.0)) throw Error(Errc::InvalidArgument, "sharpness must be positive");
  if (pyramid_levels < 1) throw Error(Errc::InvalidArgument, "pyramid_levels must be at least 1");
  if (n_depth < 1) throw Error(Errc::InvalidArgument, "n_depth must be at least 1");
  if (!(depth_range >= 0.0)) throw Error(Errc::InvalidArgument, "depth_range must be non-negative");
  if (max_iters < 0) throw Error(Errc::InvalidArgument, "max_iters must be non-negative");
  if (!(refine_sharpness >= 0.0)) throw Error(Errc::InvalidArgument, "refine_sharpness must be non-negative");
  if (refine_levels < 1 || refine_levels > pyramid_levels)
    throw Error(Errc::InvalidArgument, "refine_levels must lie in [1, pyramid_levels]");
}

double geman_mcclure(double residual, double sigma) {
  const double s2 = sigma * sigma, e2 = residual * residual;
  return s2 * e2 / (s2 + e2);
}

double joint_energy(const ShapeParams& shape, const PoseParams& pose, const CameraPose& camera,
                    const Observation& obs, double sigma_pixels) {
  const auto j = joints3d(shape, pose);
  double e = 0.0;
  for (int d = 0; d < kNumDetections; ++d) {
    const double w = obs.joints.confidence[d];
    if (!(w > 0.0)) continue;
    const Vec2 uv = project(j[kDetectionJoint[d]], camera);
    e += w * geman_mcclure((uv - obs.joints.points[d]).norm(), sigma_pixels);
  }
  return e;
}

double height_energy(const ShapeParams& shape) {
  const double dh = height(shape) - skeleton().template_height;
  return dh * dh;
}

double prior_energy(const ShapeParams& shape, const PoseParams& pose, const FitConfig& config) {
  const PoseParams& mean = neutral_pose();
  double pose_sq = 0.0;
  for (int j : kArticulatedJoints) pose_sq += (pose.joint_rots[j] - mean.joint_rots[j]).squaredNorm();
  return config.lambda_shape * shape.beta.squaredNorm() + config.lambda_pose * pose_sq +
         config.lambda_limit * limit_penalty<double>(pose.joint_rots);
}

ViewVector pack_view(const ShapeParams& shape, const PoseParams& pose, const Vec3& translation) {
  ViewVector x;
  x.head<kNumBetas>() = shape.beta;
  x.segment<3>(kRootOffset) = pose.root_orient;
  for (size_t a = 0; a < kArticulatedJoints.size(); ++a)
    x.segment<3>(kArticOffset + 3 * a) = pose.joint_rots[kArticulatedJoints[a]];
  x.segment<3>(kTransOffset) = translation;
  return x;
}

void unpack_view(const ViewVector& x, ShapeParams& shape, PoseParams& pose, Vec3& translation) {
  shape.beta = x.head<kNumBetas>();
  pose = PoseParams{};
  pose.root_orient = x.segment<3>(kRootOffset);
  for (size_t a = 0; a < kArticulatedJoints.size(); ++a)
    pose.joint_rots[kArticulatedJoints[a]] = x.segment<3>(kArticOffset + 3 * a);
  translation = x.segment<3>(kTransOffset);
}

PreparedObservation prepare(const Observation& obs, const FitConfig& config) {
  validate(obs);
  PreparedObservation p;
  p.obs = obs;
  p.focal = default_focal(obs.image);
  if (config.use_silhouette) {
    if (obs.mask.size() == 0) throw Error(Errc::EmptyMask, "observation has no mask");
    p.target = make_silhouette_target(obs.mask, config.pyramid_levels);
  }
  return p;
}

ViewEvaluation evaluate_view(const ViewVector& x, const PreparedObservation& prep, const FitConfig& config,
                             const TermSelection& terms, bool want_grad) {
  if (want_grad) return evaluate_impl<Jet>(x, prep, config, terms);
  return evaluate_impl<double>(x, prep, config, terms);
}

TermEnergies evaluate_energies(const Observation& obs, const ShapeParams& shape, const PoseParams& pose,
                               const CameraPose& camera, const FitConfig& config) {
  const PreparedObservation prep = prepare(obs, config);
  const FitConfig cfg = has_fine_pass(config) ? fine_config(config) : config;
  return evaluate_view(pack_view(shape, pose, camera.translation), prep, cfg, final_terms(cfg), false).terms;
}

FitResult fit_from_start(const Observation& obs, const ShapeParams& shape, const PoseParams& pose,
                         const Vec3& translation, const FitConfig& config, bool optimize_translation) {
  config.validate();
  const PreparedObservation prep = prepare(obs, config);
  FitResult r = refine_view(pack_view(shape, pose, translation), prep, config, optimize_translation);
  r.depth_candidate_index = 0;
  r.depth_candidates = {translation.z()};
  r.candidate_energies = {r.energy_total};
  return r;
}

CameraPose initial_camera(const Observation& obs, double depth) {
  CameraPose cam;
  cam.image = obs.image;
  cam.focal = default_focal(obs.image);
  Vec2 hips = Vec2::Zero();
  int n = 0;
  for (int d : {kDetRHip, kDetLHip}) {
    if (obs.joints.confidence[d] > 0.0) {
      hips += obs.joints.points[d];
      ++n;
    }
  }
  if (n == 0) hips = Vec2(cam.cx(), cam.cy());
  else hips /= n;
  cam.translation = Vec3((hips.x() - cam.cx()) * depth / cam.focal, (hips.y() - cam.cy()) * depth / cam.focal, depth);
  return cam;
}

CameraStageResult camera_stage(const ShapeParams& shape_fixed, const Observation& obs, const CameraPose& camera_init,
                               const FitConfig& config) {
  validate(obs);
  require_camera_stage_joints(obs);
  FitConfig cfg = config;
  cfg.use_silhouette = false;
  PreparedObservation prep;
  prep.obs = obs;
  prep.focal = camera_init.focal;
  TermSelection sel;
  sel.height = false;
  sel.prior = false;
  sel.camera_stage_joints = true;
  const ViewVector x0 = start_vector(shape_fixed, Vec3::Zero(), camera_init.translation);
  StageOutcome s = run_view_stage(x0, concat({kRootIdx, kTransIdx}), prep, cfg, sel);
  CameraStageResult r;
  r.camera = camera_init;
  r.camera.translation = s.x.segment<3>(kTransOffset);
  r.root_orient = canonical_axis_angle(s.x.segment<3>(kRootOffset));
  r.energy = s.f_end;
  r.energy_start = s.f_start;
  return r;
}

FitResult fit_single(const Observation& obs, const FitConfig& config) {
  config.validate();
  const PreparedObservation prep = prepare(obs, config);
  require_camera_stage_joints(obs);
  const ShapeParams template_shape;
  const double z0 = init_depth(template_shape, obs.joints, prep.focal);
  const std::vector<double> depths = depth_candidates(z0, config.n_depth, config.depth_range);

  FitResult best;
  best.energy_total = kInf;
  std::vector<double> energies(depths.size(), kInf);
  for (size_t i = 0; i < depths.size(); ++i) {
    try {
      const CameraStageResult cs = camera_stage(template_shape, obs, initial_camera(obs, depths[i]), config);
      const ViewVector x = start_vector(template_shape, cs.root_orient, cs.camera.translation);
      FitResult r = refine_view(x, prep, config, true);
      energies[i] = r.energy_total;
      if (r.energy_total < best.energy_total) {
        best = std::move(r);
        best.depth_candidate_index = static_cast<int>(i);
      }
    } catch (const Error& e) {
      if (e.code() != Errc::BehindCamera) throw;
    }
  }
  if (best.depth_candidate_index < 0) throw Error(Errc::AllCandidatesFailed, "every depth candidate failed");
  best.depth_candidates = depths;
  best.candidate_energies = energies;
  return best;
}

FitResult fit_single_fixed_camera(const Observation& obs, const Vec3& translation, const FitConfig& config) {
  config.validate();
  const PreparedObservation prep = prepare(obs, config);
  require_camera_stage_joints(obs);
  const ShapeParams template_shape;
  // Root orientation only: the translation is known.
  FitConfig cfg = config;
  cfg.use_silhouette = false;
  PreparedObservation joints_prep;
  joints_prep.obs = obs;
  joints_prep.focal = prep.focal;
  TermSelection sel;
  sel.height = false;
  sel.prior = false;
  sel.camera_stage_joints = true;
  StageOutcome cs = run_view_stage(start_vector(template_shape, Vec3::Zero(), translation), kRootIdx, joints_prep,
                                   cfg, sel);
  const ViewVector x = start_vector(template_shape, canonical_axis_angle(cs.x.segment<3>(kRootOffset)), translation);
  FitResult r = refine_view(x, prep, config, false);
  r.depth_candidate_index = 0;
  r.depth_candidates = {translation.z()};
  r.candidate_energies = {r.energy_total};
  return r;
}

ShapeParams median_shape(const std::vector<ShapeParams>& shapes) {
  if (shapes.empty()) throw Error(Errc::InvalidArgument, "median of an empty shape list");
  ShapeParams m;
  std::vector<double> col(shapes.size());
  for (int k = 0; k < kNumBetas; ++k) {
    for (size_t i = 0; i < shapes.size(); ++i) col[i] = shapes[i].beta(k);
    std::sort(col.begin(), col.end());
    const size_t n = col.size();
    m.beta(k) = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
  }
  return m;
}

std::vector<int> reject_outliers(const std::vector<ShapeParams>& shapes, int k) {
  if (shapes.empty()) throw Error(Errc::InvalidArgument, "reject_outliers needs at least one shape");
  if (k < 1 || k > static_cast<int>(shapes.size()))
    throw Error(Errc::InvalidArgument, "k must lie in [1, number of views]");
  const ShapeParams med = median_shape(shapes);
  std::vector<double> dist(shapes.size());
  for (size_t i = 0; i < shapes.size(); ++i) dist[i] = (shapes[i].beta - med.beta).norm();
  std::vector<int> order(shapes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] < dist[b]; });
  order.resize(k);
  return order;
}

namespace {

MultiFitResult joint_pass(const std::vector<PreparedObservation>& preps, std::vector<ViewVector>& work,
                          const ShapeParams& beta0, const FitConfig& cfg, bool optimize_translation) {
  const int views = static_cast<int>(preps.size());
  const std::vector<int> block = optimize_translation ? concat({kRootIdx, kArticIdx, kTransIdx})
                                                      : concat({kRootIdx, kArticIdx});
  const int nb = static_cast<int>(block.size());
  const int n = kNumBetas + views * nb;
  Eigen::VectorXd x0(n), lo(n), hi(n);
  x0.head<kNumBetas>() = beta0.beta;
  lo.setConstant(-kInf);
  hi.setConstant(kInf);
  lo.head<kNumBetas>().setConstant(-kShapeBound);
  hi.head<kNumBetas>().setConstant(kShapeBound);
  for (int v = 0; v < views; ++v)
    for (int i = 0; i < nb; ++i) x0(kNumBetas + v * nb + i) = work[v](block[i]);

  const TermSelection sel = final_terms(cfg);
  auto load = [&](const Eigen::VectorXd& x) {
    for (int v = 0; v < views; ++v) {
      work[v].head<kNumBetas>() = x.head<kNumBetas>();
      for (int i = 0; i < nb; ++i) work[v](block[i]) = x(kNumBetas + v * nb + i);
    }
  };
  ObjectiveFn fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) -> double {
    load(x);
    if (g) g->setZero(n);
    double total = 0.0;
    try {
      for (int v = 0; v < views; ++v) {
        const ViewEvaluation ev = evaluate_view(work[v], preps[v], cfg, sel, g != nullptr);
        total += ev.terms.total();
        if (g) {
          g->head<kNumBetas>() += ev.grad.head<kNumBetas>();
          for (int i = 0; i < nb; ++i) (*g)(kNumBetas + v * nb + i) = ev.grad(block[i]);
        }
      }
    } catch (const Error& e) {
      if (e.code() == Errc::BehindCamera) return kInf;
      throw;
    }
    return total;
  };
  const LbfgsResult r = minimize_lbfgs(fn, x0, lo, hi, lbfgs_options(cfg));
  load(r.x);

  MultiFitResult out;
  out.shape.beta = r.x.head<kNumBetas>();
  out.converged = r.converged;
  for (int v = 0; v < views; ++v) {
    canonicalize(work[v]);
    ShapeParams s;
    PoseParams p;
    Vec3 t;
    unpack_view(work[v], s, p, t);
    CameraPose cam;
    cam.translation = t;
    cam.focal = preps[v].focal;
    cam.image = preps[v].obs.image;
    out.poses.push_back(p);
    out.cameras.push_back(cam);
    const TermEnergies e = evaluate_view(work[v], preps[v], cfg, sel, false).terms;
    out.energies.joints += e.joints;
    out.energies.height += e.height;
    out.energies.prior += e.prior;
    out.energies.silhouette += e.silhouette;
  }
  out.energy_total = out.energies.total();
  return out;
}

MultiFitResult joint_fit(const std::vector<PreparedObservation>& preps, const std::vector<ViewVector>& starts,
                         const ShapeParams& beta0, const FitConfig& cfg, bool optimize_translation) {
  std::vector<ViewVector> work = starts;
  return joint_pass(preps, work, beta0, has_fine_pass(cfg) ? fine_config(cfg) : cfg, optimize_translation);
}

MultiFitResult multi_from_singles(const std::vector<Observation>& observations, const std::vector<FitResult>& singles,
                                  const FitConfig& config, int k, bool optimize_translation) {
  config.validate();
  if (observations.size() != singles.size())
    throw Error(Errc::InvalidArgument, "one single-view result per observation is required");
  if (observations.empty()) throw Error(Errc::NoInliers, "no views to fit");
  std::vector<ShapeParams> shapes;
  for (const auto& s : singles) shapes.push_back(s.shape);
  const std::vector<int> kept = reject_outliers(shapes, k);
  if (kept.empty()) throw Error(Errc::NoInliers, "no view survived outlier rejection");

  std::vector<PreparedObservation> preps;
  std::vector<ViewVector> starts;
  std::vector<ShapeParams> inlier_shapes;
  for (int i : kept) {
    preps.push_back(prepare(observations[i], config));
    starts.push_back(pack_view(singles[i].shape, singles[i].pose, singles[i].camera.translation));
    inlier_shapes.push_back(singles[i].shape);
  }
  MultiFitResult r = joint_fit(preps, starts, median_shape(inlier_shapes), config, optimize_translation);
  r.kept = kept;
  return r;
}

}  // namespace

MultiFitResult fit_multi(const std::vector<Observation>& observations, const std::vector<FitResult>& singles,
                         const FitConfig& config, int k) {
  return multi_from_singles(observations, singles, config, k, true);
}

MultiFitResult fit_multi_oracle_depth(const std::vector<Observation>& observations,
                                      const std::vector<Vec3>& true_translations, const FitConfig& config, int k,
                                      const std::vector<FitResult>* oracle_singles) {
  if (true_translations.size() != observations.size())
    throw Error(Errc::InvalidArgument, "one ground-truth translation per observation is required");
  std::vector<FitResult> computed;
  if (!oracle_singles) {
    for (size_t i = 0; i < observations.size(); ++i)
      computed.push_back(fit_single_fixed_camera(observations[i], true_translations[i], config));
    oracle_singles = &computed;
  }
  std::vector<FitResult> singles = *oracle_singles;
  for (size_t i = 0; i < singles.size(); ++i) singles[i].camera.translation = true_translations[i];
  return multi_from_singles(observations, singles, config, k, false);
}

Vec3 canonical_axis_angle(const Vec3& aa) {
  const double angle = aa.norm();
  if (angle <= std::numbers::pi) return aa;
  const double wrapped = std::remainder(angle, 2.0 * std::numbers::pi);  // in [-pi, pi]
  return aa * (wrapped / angle);
}

}  // namespace fts
