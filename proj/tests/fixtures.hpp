#pragma once

#include <random>

#include "fts/benchgen.hpp"
#include "fts/fitting.hpp"

namespace fts::testing {

// Clean benchmark observation: subject s, view v of the default generator.
inline const BenchSubject& bench_subject(int s) {
  static const std::vector<BenchSubject> subjects = make_benchmark(BenchGenConfig{});
  return subjects.at(static_cast<size_t>(s));
}

inline ViewVector truth_vector(const BenchSubject& s, int view) {
  const BenchView& v = s.views.at(static_cast<size_t>(view));
  return pack_view(s.true_shape, v.true_pose, v.true_camera.translation);
}

// A random point near the truth: shape, joint angles and translation jittered.
inline ViewVector perturbed(const ViewVector& x, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  ViewVector y = x;
  for (int i = 0; i < kNumBetas; ++i) y(i) += 0.5 * scale * n(rng);
  for (int i = kRootOffset; i < kTransOffset; ++i) y(i) += 0.08 * scale * n(rng);
  for (int i = kTransOffset; i < kViewParams; ++i) y(i) += 0.05 * scale * n(rng);
  return y;
}

inline ViewVector central_difference(const ViewVector& x, const PreparedObservation& prep, const FitConfig& cfg,
                                     const TermSelection& sel, double h) {
  ViewVector g;
  for (int i = 0; i < kViewParams; ++i) {
    ViewVector a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (evaluate_view(a, prep, cfg, sel, false).terms.total() -
            evaluate_view(b, prep, cfg, sel, false).terms.total()) /
           (2.0 * h);
  }
  return g;
}

inline double relative_error(const ViewVector& analytic, const ViewVector& numeric) {
  const double scale = std::max(numeric.norm(), 1e-12);
  return (analytic - numeric).norm() / scale;
}

inline TermSelection only(bool joints, bool height, bool prior, bool silhouette) {
  TermSelection t;
  t.joints = joints;
  t.height = height;
  t.prior = prior;
  t.silhouette = silhouette;
  return t;
}

}  // namespace fts::testing
