#include "doctest_fts.hpp"

#include <cmath>

#include "fts/benchgen.hpp"

using namespace fts;

TEST_CASE("mean grid") {
  const auto mu = mu_grid();
  REQUIRE(mu.size() == 9);
  for (int i = 0; i < 9; ++i) CHECK(mu[i] == doctest::Approx(-2.0 + 0.5 * i).epsilon(1e-15));
}

TEST_CASE("subjects are seeded and vary only in girth") {
  BenchGenConfig c;
  const auto a = make_subjects(c);
  const auto b = make_subjects(c);
  REQUIRE(a.size() == 9);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].true_shape.beta == b[i].true_shape.beta);
    for (int k = 0; k < kNumBetas; ++k)
      if (k != 1) CHECK(a[i].true_shape.beta(k) == 0.0);
  }
  c.seed = 2;
  const auto other = make_subjects(c);
  CHECK(other[0].true_shape.beta(1) != a[0].true_shape.beta(1));
}

TEST_CASE("zero spread pins girth to the grid") {
  BenchGenConfig c;
  c.shape_std = 0.0;
  const auto s = make_subjects(c);
  const auto mu = mu_grid();
  for (size_t i = 0; i < s.size(); ++i) CHECK(s[i].true_shape.beta(1) == mu[i]);
}

TEST_CASE("azimuth sweep") {
  const auto az = view_azimuths(9, 80.0);
  REQUIRE(az.size() == 9);
  for (int v = 0; v < 9; ++v) CHECK(az[v] == doctest::Approx(-80.0 + 20.0 * v).epsilon(1e-15));
  CHECK(view_azimuths(1, 80.0) == std::vector<double>{0.0});
}

TEST_CASE("views: masks non-empty, detections exact, frontal symmetry") {
  BenchGenConfig c;
  c.jitter_deg = 0.0;
  const auto subjects = make_benchmark(c);
  for (const auto& s : subjects) {
    REQUIRE(s.views.size() == 9);
    for (const auto& v : s.views) {
      CHECK(count_set(v.obs.mask) > 0);
      for (double w : v.obs.joints.confidence) CHECK(w == 1.0);
      const auto j = joints3d(s.true_shape, v.true_pose);
      for (int d = 0; d < kNumDetections; ++d)
        CHECK((project(j[kDetectionJoint[d]], v.true_camera) - v.obs.joints.points[d]).norm() < 1e-12);
    }
  }
  const auto& front = subjects[4].views[4];
  CHECK(front.azimuth_deg == 0.0);
  const double cx = front.true_camera.cx();
  const std::pair<int, int> pairs[] = {{kDetRShoulder, kDetLShoulder}, {kDetRElbow, kDetLElbow},
                                       {kDetRWrist, kDetLWrist},       {kDetRHip, kDetLHip},
                                       {kDetRKnee, kDetLKnee},         {kDetRAnkle, kDetLAnkle}};
  for (auto [r, l] : pairs) {
    const Vec2 pr = front.obs.joints.points[r], pl = front.obs.joints.points[l];
    CHECK(std::abs((pr.x() - cx) + (pl.x() - cx)) < 1.0);
    CHECK(std::abs(pr.y() - pl.y()) < 1.0);
  }
}

TEST_CASE("benchmark is deterministic") {
  const auto a = make_benchmark(BenchGenConfig{});
  const auto b = make_benchmark(BenchGenConfig{});
  for (size_t s = 0; s < a.size(); ++s)
    for (size_t v = 0; v < a[s].views.size(); ++v) {
      CHECK(a[s].views[v].obs.mask == b[s].views[v].obs.mask);
      CHECK(a[s].views[v].true_pose.joint_rots == b[s].views[v].true_pose.joint_rots);
    }
}

TEST_CASE("jittered hinges flex naturally") {
  const auto subjects = make_benchmark(BenchGenConfig{});
  for (const auto& s : subjects)
    for (const auto& v : s.views) {
      CHECK(v.true_pose.joint_rots[kRKnee].x() >= 0.0);
      CHECK(v.true_pose.joint_rots[kLKnee].x() >= 0.0);
    }
}

TEST_CASE("noise level zero is the identity and noise is seeded") {
  BenchGenConfig c;
  c.n_subjects = 1;
  const auto views = make_benchmark(c)[0].views;
  const auto same = add_noise(views, 0.0, 7);
  for (size_t i = 0; i < views.size(); ++i) {
    CHECK(same[i].obs.mask == views[i].obs.mask);
    CHECK(same[i].obs.joints.points == views[i].obs.joints.points);
  }
  const auto n1 = add_noise(views, 1.0, 7);
  const auto n2 = add_noise(views, 1.0, 7);
  for (size_t i = 0; i < views.size(); ++i) {
    CHECK(n1[i].obs.joints.points == n2[i].obs.joints.points);
    CHECK(n1[i].obs.mask == n2[i].obs.mask);
    CHECK(n1[i].obs.mask != views[i].obs.mask);
  }
  CHECK_THROWS_AS(add_noise(views, -1.0, 7), Error);
}

TEST_CASE("level-one joint jitter has a 2 px spread") {
  BenchGenConfig c;
  c.n_subjects = 1;
  c.n_views = 1;
  const auto views = make_benchmark(c)[0].views;
  double sum = 0.0, sq = 0.0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 1000 / (2 * kNumDetections) + 1; ++seed) {
    const auto noisy = add_noise(views, 1.0, seed);
    for (int d = 0; d < kNumDetections; ++d) {
      const Vec2 delta = noisy[0].obs.joints.points[d] - views[0].obs.joints.points[d];
      for (double e : {delta.x(), delta.y()}) {
        sum += e;
        sq += e * e;
        ++n;
      }
    }
  }
  REQUIRE(n >= 1000);
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(sd - 2.0) < 0.2 * 2.0);
}

TEST_CASE("morphology") {
  Mask m(9, 9, 0);
  m(4, 4) = 1;
  const Mask d = dilate(m, 1);
  CHECK(count_set(d) == 5);
  CHECK(erode(d, 1) == m);
  CHECK(dilate(m, 0) == m);
  Mask block(9, 9, 0);
  for (int y = 2; y < 7; ++y)
    for (int x = 2; x < 7; ++x) block(x, y) = 1;
  CHECK(count_set(erode(block, 1)) == 9);
}

TEST_CASE("left-right swap is an involution") {
  const auto v = make_benchmark(BenchGenConfig{})[2].views[1];
  const Observation s = swap_left_right(v.obs);
  CHECK(s.joints.points[kDetRHip] == v.obs.joints.points[kDetLHip]);
  CHECK(s.joints.points[kDetHeadTop] == v.obs.joints.points[kDetHeadTop]);
  CHECK(swap_left_right(s).joints.points == v.obs.joints.points);
}

TEST_CASE("shape error and method configs") {
  ShapeParams a, b;
  CHECK(shape_error(a, a) == 0.0);
  b.beta(0) = 3.0;
  b.beta(1) = 4.0;
  CHECK(shape_error(a, b) == 5.0);
  const FitConfig base;
  CHECK_FALSE(method_config(Method::JointsOnly, base).use_silhouette);
  CHECK(method_config(Method::JointsOnly, base).n_depth == 1);
  CHECK(method_config(Method::JointsSilhouette, base).n_depth == 1);
  CHECK(method_config(Method::DepthSearch, base).n_depth == 5);
  CHECK(method_name(Method::OracleDepth) == "oracle_depth");
}

TEST_CASE("ablation on a tiny benchmark fills every cell") {
  BenchGenConfig c;
  c.n_subjects = 1;
  c.n_views = 3;
  const auto subjects = make_benchmark(c);
  AblationConfig ac;
  ac.fit.n_depth = 1;
  ac.fit.max_iters = 30;
  ac.methods = {Method::JointsOnly, Method::OracleDepth};
  ac.ks = {1, 3, 5};
  const BenchReport r = run_ablation(subjects, ac);
  REQUIRE(r.methods.size() == 2);
  CHECK(r.azimuths.size() == 3);
  for (const auto& m : r.methods) {
    CHECK(m.failed_fits == 0);
    CHECK(std::isfinite(m.single_view));
    CHECK(m.multi[0].has_value());
    CHECK(m.multi[1].has_value());
    CHECK_FALSE(m.multi[2].has_value());
    CHECK(m.per_view.size() == 3);
  }
  CHECK(r.find(Method::DepthSearch) == nullptr);
}
