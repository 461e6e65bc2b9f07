#include "fts/benchgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "fts/parallel.hpp"

namespace fts {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

enum Stream : std::uint64_t { kShapeStream = 1, kPoseStream = 2, kNoiseStream = 3 };

// Hinge joints only flex in their natural direction.
Vec3 jitter_for(int joint, std::mt19937_64& rng, double bound) {
  std::uniform_real_distribution<double> sym(-bound, bound);
  std::uniform_real_distribution<double> pos(0.0, bound);
  Vec3 j(sym(rng), sym(rng), sym(rng));
  if (joint == kRKnee || joint == kLKnee) j.x() = pos(rng);
  if (joint == kRElbow) j.y() = -pos(rng);
  if (joint == kLElbow) j.y() = pos(rng);
  return j;
}

Mask morph(const Mask& mask, int radius, bool grow) {
  if (radius <= 0) return mask;
  Mask out(mask.width, mask.height);
  const int r2 = radius * radius;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      bool hit = !grow;
      for (int dy = -radius; dy <= radius && hit != grow; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx * dx + dy * dy > r2) continue;
          const int xx = x + dx, yy = y + dy;
          const bool set = xx >= 0 && yy >= 0 && xx < mask.width && yy < mask.height && mask(xx, yy);
          if (grow && set) {
            hit = true;
            break;
          }
          if (!grow && !set) {
            hit = false;
            break;
          }
        }
      }
      out(x, y) = hit ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

std::vector<double> mu_grid() {
  std::vector<double> mu;
  for (int i = 0; i < 9; ++i) mu.push_back(-2.0 + 0.5 * i);
  return mu;
}

std::vector<BenchSubject> make_subjects(const BenchGenConfig& config) {
  const auto mu = mu_grid();
  std::vector<BenchSubject> subjects;
  for (int i = 0; i < config.n_subjects; ++i) {
    BenchSubject s;
    s.subject_id = i;
    s.mu = mu[static_cast<size_t>(i) % mu.size()];
    auto rng = make_rng(config.seed, kShapeStream, static_cast<std::uint64_t>(i));
    double b2 = s.mu;
    if (config.shape_std > 0.0) b2 = std::normal_distribution<double>(s.mu, config.shape_std)(rng);
    s.true_shape.beta(1) = std::clamp(b2, -kShapeBound, kShapeBound);
    subjects.push_back(s);
  }
  return subjects;
}

std::vector<double> view_azimuths(int n_views, double range_deg) {
  std::vector<double> az(n_views);
  for (int v = 0; v < n_views; ++v)
    az[v] = n_views == 1 ? 0.0 : -range_deg + 2.0 * range_deg * v / (n_views - 1);
  return az;
}

std::vector<BenchView> make_views(const BenchSubject& subject, const BenchGenConfig& config) {
  const auto az = view_azimuths(config.n_views, config.azimuth_range);
  std::vector<BenchView> views;
  for (int v = 0; v < config.n_views; ++v) {
    auto rng = make_rng(config.seed, kPoseStream, static_cast<std::uint64_t>(subject.subject_id) * 1000 + v);
    BenchView view;
    view.view_index = v;
    view.azimuth_deg = az[v];
    view.true_pose = neutral_pose();
    view.true_pose.root_orient = Vec3(0.0, az[v] * kDeg, 0.0);
    for (int j : kArticulatedJoints)
      view.true_pose.joint_rots[j] += jitter_for(j, rng, config.jitter_deg * kDeg);
    view.true_camera.image = config.image;
    view.true_camera.focal = default_focal(config.image);
    view.true_camera.translation = Vec3(0.0, 0.0, config.depth);

    const PosedBody body = pose_body(subject.true_shape, view.true_pose);
    view.obs.image = config.image;
    for (int d = 0; d < kNumDetections; ++d) {
      view.obs.joints.points[d] = project(body.joints3d[kDetectionJoint[d]], view.true_camera);
      view.obs.joints.confidence[d] = 1.0;
    }
    view.obs.mask = render_mask(body, view.true_camera);
    views.push_back(std::move(view));
  }
  return views;
}

std::vector<BenchSubject> make_benchmark(const BenchGenConfig& config) {
  auto subjects = make_subjects(config);
  for (auto& s : subjects) s.views = make_views(s, config);
  return subjects;
}

Mask dilate(const Mask& mask, int radius) { return morph(mask, radius, true); }
Mask erode(const Mask& mask, int radius) { return morph(mask, radius, false); }

std::vector<BenchView> add_noise(std::vector<BenchView> views, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw Error(Errc::InvalidArgument, "noise level must be non-negative");
  if (level == 0.0) return views;
  const int radius = static_cast<int>(std::lround(level));
  for (auto& v : views) {
    auto rng = make_rng(seed, kNoiseStream, static_cast<std::uint64_t>(v.view_index));
    std::normal_distribution<double> jitter(0.0, 2.0 * level);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int d = 0; d < kNumDetections; ++d) {
      v.obs.joints.points[d] += Vec2(jitter(rng), jitter(rng));
      const double decay = 1.0 - std::min(0.9, 0.2 * level * unit(rng));
      v.obs.joints.confidence[d] *= decay;
    }
    const bool grow = unit(rng) < 0.5;
    Mask m = grow ? dilate(v.obs.mask, radius) : erode(v.obs.mask, radius);
    if (count_set(m) > 0) v.obs.mask = std::move(m);
  }
  return views;
}

Observation swap_left_right(const Observation& obs) {
  Observation out = obs;
  const std::array<std::pair<int, int>, 6> pairs = {{{kDetRShoulder, kDetLShoulder},
                                                     {kDetRElbow, kDetLElbow},
                                                     {kDetRWrist, kDetLWrist},
                                                     {kDetRHip, kDetLHip},
                                                     {kDetRKnee, kDetLKnee},
                                                     {kDetRAnkle, kDetLAnkle}}};
  for (auto [r, l] : pairs) {
    std::swap(out.joints.points[r], out.joints.points[l]);
    std::swap(out.joints.confidence[r], out.joints.confidence[l]);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string method_name(Method m) {
  switch (m) {
    case Method::JointsOnly: return "joints";
    case Method::JointsSilhouette: return "joints+silhouette";
    case Method::DepthSearch: return "joints+silhouette+depth_search";
    case Method::OracleDepth: return "oracle_depth";
  }
  return "unknown";
}

FitConfig method_config(Method m, const FitConfig& base) {
  FitConfig c = base;
  switch (m) {
    case Method::JointsOnly:
      c.use_silhouette = false;
      c.n_depth = 1;
      break;
    case Method::JointsSilhouette:
      c.use_silhouette = true;
      c.n_depth = 1;
      break;
    case Method::DepthSearch:
    case Method::OracleDepth:
      c.use_silhouette = true;
      break;
  }
  return c;
}

const MethodReport* BenchReport::find(Method m) const {
  for (const auto& r : methods)
    if (r.method == m) return &r;
  return nullptr;
}

double shape_error(const ShapeParams& estimate, const ShapeParams& truth) {
  return (estimate.beta - truth.beta).norm();
}

BenchReport run_ablation(const std::vector<BenchSubject>& subjects, const AblationConfig& config) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  const size_t n_sub = subjects.size();
  const size_t n_methods = config.methods.size();
  size_t n_views = 0;
  for (const auto& s : subjects) n_views = std::max(n_views, s.views.size());

  // Stage 1: every single-view fit.
  struct SingleTask {
    size_t method, subject, view;
  };
  std::vector<SingleTask> tasks;
  for (size_t m = 0; m < n_methods; ++m)
    for (size_t s = 0; s < n_sub; ++s)
      for (size_t v = 0; v < subjects[s].views.size(); ++v) tasks.push_back({m, s, v});
  std::vector<std::optional<FitResult>> singles(tasks.size());
  parallel_for(tasks.size(), config.threads, [&](size_t i) {
    const auto& t = tasks[i];
    const Method method = config.methods[t.method];
    const FitConfig cfg = method_config(method, config.fit);
    const BenchView& view = subjects[t.subject].views[t.view];
    try {
      if (method == Method::OracleDepth) {
        singles[i] = fit_single_fixed_camera(view.obs, view.true_camera.translation, cfg);
      } else {
        singles[i] = fit_single(view.obs, cfg);
      }
    } catch (const Error&) {
      singles[i].reset();
    }
  });
  auto single_at = [&](size_t m, size_t s, size_t v) -> const std::optional<FitResult>& {
    size_t idx = 0;
    for (size_t mm = 0; mm < m; ++mm)
      for (size_t ss = 0; ss < n_sub; ++ss) idx += subjects[ss].views.size();
    for (size_t ss = 0; ss < s; ++ss) idx += subjects[ss].views.size();
    return singles[idx + v];
  };

  // Stage 2: multi-photo fits per (method, subject, k).
  struct MultiTask {
    size_t method, subject, k_index;
  };
  std::vector<MultiTask> mtasks;
  for (size_t m = 0; m < n_methods; ++m)
    for (size_t s = 0; s < n_sub; ++s)
      for (size_t ki = 0; ki < config.ks.size(); ++ki) mtasks.push_back({m, s, ki});
  std::vector<double> multi_err(mtasks.size(), kNaN);
  std::vector<char> multi_skipped(mtasks.size(), 0);
  parallel_for(mtasks.size(), config.threads, [&](size_t i) {
    const auto& t = mtasks[i];
    const Method method = config.methods[t.method];
    const FitConfig cfg = method_config(method, config.fit);
    const BenchSubject& subj = subjects[t.subject];
    const int k = config.ks[t.k_index];
    if (k > static_cast<int>(subj.views.size())) {
      multi_skipped[i] = 1;
      return;
    }
    std::vector<Observation> obs;
    std::vector<FitResult> res;
    std::vector<Vec3> truth_t;
    for (size_t v = 0; v < subj.views.size(); ++v) {
      const auto& r = single_at(t.method, t.subject, v);
      if (!r) continue;
      obs.push_back(subj.views[v].obs);
      res.push_back(*r);
      truth_t.push_back(subj.views[v].true_camera.translation);
    }
    if (k > static_cast<int>(obs.size())) return;
    try {
      const MultiFitResult mr = method == Method::OracleDepth ? fit_multi_oracle_depth(obs, truth_t, cfg, k, &res)
                                                              : fit_multi(obs, res, cfg, k);
      multi_err[i] = shape_error(mr.shape, subj.true_shape);
    } catch (const Error&) {
    }
  });

  BenchReport report;
  report.ks = config.ks;
  if (n_sub)
    for (const auto& v : subjects[0].views) report.azimuths.push_back(v.azimuth_deg);
  for (size_t m = 0; m < n_methods; ++m) {
    MethodReport mr;
    mr.method = config.methods[m];
    mr.per_view.assign(n_views, 0.0);
    std::vector<int> per_view_n(n_views, 0);
    double sum = 0.0;
    int count = 0;
    for (size_t s = 0; s < n_sub; ++s) {
      std::vector<double> row;
      for (size_t v = 0; v < subjects[s].views.size(); ++v) {
        const auto& r = single_at(m, s, v);
        if (!r) {
          row.push_back(kNaN);
          ++mr.failed_fits;
          continue;
        }
        const double e = shape_error(r->shape, subjects[s].true_shape);
        row.push_back(e);
        sum += e;
        ++count;
        mr.per_view[v] += e;
        ++per_view_n[v];
      }
      mr.single_errors.push_back(std::move(row));
    }
    mr.single_view = count ? sum / count : kNaN;
    for (size_t v = 0; v < n_views; ++v) mr.per_view[v] = per_view_n[v] ? mr.per_view[v] / per_view_n[v] : kNaN;
    for (size_t ki = 0; ki < config.ks.size(); ++ki) {
      double msum = 0.0;
      int mcount = 0;
      for (size_t i = 0; i < mtasks.size(); ++i) {
        if (mtasks[i].method != m || mtasks[i].k_index != ki || multi_skipped[i]) continue;
        if (std::isnan(multi_err[i])) {
          ++mr.failed_fits;
          continue;
        }
        msum += multi_err[i];
        ++mcount;
      }
      mr.multi.push_back(mcount ? std::optional<double>(msum / mcount) : std::nullopt);
    }
    report.methods.push_back(std::move(mr));
  }
  return report;
}

}  // namespace fts
