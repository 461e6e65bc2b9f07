#include "doctest_fts.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "fts/silhouette.hpp"

using namespace fts;

namespace {

double brute_dt(const Mask& m, int x, int y) {
  double best = std::numeric_limits<double>::infinity();
  for (int v = 0; v < m.height; ++v)
    for (int u = 0; u < m.width; ++u)
      if (m(u, v)) best = std::min(best, std::hypot(double(u - x), double(v - y)));
  return best;
}

Mask random_mask(std::mt19937_64& rng, int w, int h, double density) {
  std::bernoulli_distribution b(density);
  Mask m(w, h);
  for (auto& v : m.data) v = b(rng) ? 1 : 0;
  if (count_set(m) == 0) m(w / 2, h / 2) = 1;
  return m;
}

// min over t in [0,1] of |p - c(t)| - r(t); convex in t, so ternary search.
double hull_margin(double px, double py, const Stadium& s) {
  auto f = [&](double t) {
    const double cx = s.ax + t * (s.bx - s.ax), cy = s.ay + t * (s.by - s.ay);
    return std::hypot(px - cx, py - cy) - (s.ra + t * (s.rb - s.ra));
  };
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (f(m1) < f(m2)) hi = m2;
    else lo = m1;
  }
  return std::min({f(0.0), f(1.0), f(0.5 * (lo + hi))});
}

Mask disc(int w, int h, double cx, double cy, double r) {
  Mask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m(x, y) = std::hypot(x - cx, y - cy) <= r ? 1 : 0;
  return m;
}

}  // namespace

TEST_CASE("distance transform of an all-ones mask is zero") {
  Mask m(7, 5, 1);
  const DistanceField d = distance_transform(m);
  for (double v : d.data) CHECK(v == 0.0);
}

TEST_CASE("distance transform from a single corner pixel") {
  Mask m(3, 3, 0);
  m(0, 0) = 1;
  const DistanceField d = distance_transform(m);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) CHECK(d(x, y) == std::sqrt(double(x * x + y * y)));
}

TEST_CASE("distance transform equals brute force on random masks") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> size(1, 32);
  std::uniform_real_distribution<double> dens(0.01, 0.6);
  for (int trial = 0; trial < 50; ++trial) {
    const Mask m = random_mask(rng, size(rng), size(rng), dens(rng));
    const DistanceField d = distance_transform(m);
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x) REQUIRE(d(x, y) == brute_dt(m, x, y));
  }
}

TEST_CASE("distance transform is translation equivariant") {
  Mask a(24, 24, 0), b(24, 24, 0);
  for (auto [x, y] : {std::pair{5, 6}, {9, 7}, {7, 11}}) {
    a(x, y) = 1;
    b(x + 3, y + 2) = 1;
  }
  const DistanceField da = distance_transform(a), db = distance_transform(b);
  for (int y = 4; y < 14; ++y)
    for (int x = 4; x < 14; ++x) CHECK(da(x, y) == db(x + 3, y + 2));
}

TEST_CASE("empty masks are rejected") {
  Mask m(4, 4, 0);
  CHECK_THROWS_AS(distance_transform(m), Error);
  CHECK_THROWS_AS(make_silhouette_target(m), Error);
  CHECK_THROWS_AS(make_silhouette_target(Mask(4, 4, 1)), Error);
}

TEST_CASE("pyramid sizes and constant preservation") {
  const auto p = pyramid(DistanceField(64, 64, 3.5), 4);
  REQUIRE(p.size() == 4);
  const int sizes[] = {64, 32, 16, 8};
  for (int l = 0; l < 4; ++l) {
    CHECK(p[l].width == sizes[l]);
    CHECK(p[l].height == sizes[l]);
    for (double v : p[l].data) CHECK(std::abs(v - 3.5) < 1e-9);
  }
  for (const auto& level : pyramid(DistanceField(40, 24, 0.0), 4))
    for (double v : level.data) CHECK(v == 0.0);
  CHECK_THROWS_AS(pyramid(DistanceField(4, 4, 0.0), 4), Error);
}

TEST_CASE("level cameras halve the intrinsics") {
  CameraPose c;
  c.focal = 256.0;
  c.image = {128, 160};
  const LevelCamera l2 = level_camera(c, 2);
  CHECK(l2.focal == 64.0);
  CHECK(l2.cx == 16.0);
  CHECK(l2.cy == 20.0);
  CHECK(l2.width == 32);
  CHECK(l2.height == 40);
}

TEST_CASE("stadium signed distance matches the convex hull of two discs") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0.0, 40.0), rad(0.5, 8.0);
  for (int trial = 0; trial < 40; ++trial) {
    const Stadium s{pos(rng), pos(rng), rad(rng), pos(rng), pos(rng), rad(rng)};
    for (int i = 0; i < 50; ++i) {
      const double px = pos(rng), py = pos(rng);
      const double m = hull_margin(px, py, s);
      const double d = stadium_sdf<double>(px, py, s);
      if (std::abs(m) > 1e-6) CHECK((m <= 0.0) == (d <= 0.0));
      if (m <= 0.0) CHECK(d <= 1e-9);
    }
  }
}

TEST_CASE("sharp rasterization approaches exact membership") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> pos(4.0, 28.0), rad(1.0, 6.0);
  std::vector<Stadium> st;
  for (int i = 0; i < 4; ++i) st.push_back({pos(rng), pos(rng), rad(rng), pos(rng), pos(rng), rad(rng)});
  const SoftSilhouette sil = rasterize_stadiums(st, 32, 32, 1e5);
  int checked = 0;
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& s : st) m = std::min(m, hull_margin(x, y, s));
      if (std::abs(m) < 1e-3) continue;
      CHECK((sil(x, y) > 0.5) == (m < 0.0));
      CHECK(std::min(sil(x, y), 1.0 - sil(x, y)) < 1e-6);
      ++checked;
    }
  CHECK(checked > 900);
}

TEST_CASE("body outside the frustum leaves the image empty") {
  CameraPose c;
  c.image = {64, 64};
  c.focal = default_focal(c.image);
  c.translation = {50.0, 0.0, 4.0};
  const SoftSilhouette s = rasterize(pose_body(ShapeParams{}, neutral_pose()), c, 2.0);
  for (double v : s.data) CHECK(v < 0.01);
}

TEST_CASE("vertical capsule on the optical axis rasterizes symmetrically") {
  const int w = 64, h = 64;
  LevelCamera cam{128.0, 32.0, 32.0, w, h};
  const Stadium st = project_capsule<double>(Vec3(0.0, -0.5, 3.0), Vec3(0.0, 0.5, 3.0), 0.2, cam);
  const SoftSilhouette s = rasterize_stadiums(std::span(&st, 1), w, h, 2.0);
  double worst = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 1; x < w; ++x) worst = std::max(worst, std::abs(s(x, y) - s(w - x, y)));
  CHECK(worst < 1e-6);
}

TEST_CASE("hard render agrees with the sharp soft render") {
  CameraPose c;
  c.image = {96, 120};
  c.focal = default_focal(c.image);
  c.translation = {0.0, 0.0, 4.0};
  const PosedBody body = pose_body(ShapeParams{}, neutral_pose());
  const Mask hard = render_mask(body, c);
  const SoftSilhouette soft = rasterize(body, c, 1e6);
  int differ = 0;
  for (size_t i = 0; i < hard.size(); ++i) differ += (soft.data[i] >= 0.5) != (hard.data[i] != 0);
  CHECK(differ == 0);
  CHECK(count_set(hard) > 200);
}

TEST_CASE("silhouette term vanishes when the model equals the mask") {
  const Mask m = disc(40, 30, 20.0, 15.0, 7.0);
  const SilhouetteTarget t = make_silhouette_target(m, 1);
  SoftSilhouette model(40, 30);
  for (size_t i = 0; i < m.size(); ++i) model.data[i] = m.data[i];
  CHECK(silhouette_term(model, t.dt_mask[0], t.dt_inverse[0], 1.0, 1.0) == 0.0);

  const SoftSilhouette empty(40, 30, 0.0);
  double expect = 0.0;
  for (double v : t.dt_inverse[0].data) expect += 2.0 * v;
  CHECK(silhouette_term(empty, t.dt_mask[0], t.dt_inverse[0], 1.0, 2.0) ==
        doctest::Approx(expect / static_cast<double>(m.size())).epsilon(1e-12));
  CHECK(expect > 0.0);
  CHECK_THROWS_AS(silhouette_term(SoftSilhouette(10, 10), t.dt_mask[0], t.dt_inverse[0], 1.0, 1.0), Error);
}

TEST_CASE("energy decreases as a disc slides onto the mask") {
  const Mask m = disc(64, 48, 32.0, 24.0, 8.0);
  const SilhouetteTarget t = make_silhouette_target(m, 1);
  const SilhouetteWeights w{1.0, 1.0, 2.0};
  double prev = std::numeric_limits<double>::infinity();
  for (double off : {16.0, 12.0, 8.0, 4.0, 0.0}) {
    const Stadium s{32.0 + off, 24.0, 8.0, 32.0 + off, 24.0, 8.0};
    const double e = stadium_energy(std::span(&s, 1), t.dt_mask[0], t.dt_inverse[0], w);
    CHECK(e < prev);
    CHECK(e >= 0.0);
    prev = e;
  }
}

TEST_CASE("stadium energy gradient matches central differences") {
  const Mask m = disc(64, 64, 30.0, 34.0, 10.0);
  const SilhouetteTarget t = make_silhouette_target(m, 1);
  const SilhouetteWeights w{1.0, 1.0, 2.0};
  std::vector<Stadium> st = {{26.3, 24.1, 6.2, 33.7, 41.9, 7.4}, {20.2, 30.6, 3.1, 12.8, 35.3, 2.6}};
  std::vector<StadiumGrad> g(st.size());
  stadium_energy(st, t.dt_mask[0], t.dt_inverse[0], w, g);
  const double h = 1e-5;
  for (size_t s = 0; s < st.size(); ++s) {
    for (int k = 0; k < 6; ++k) {
      auto bumped = [&](double d) {
        std::vector<Stadium> c = st;
        double* f = &c[s].ax;
        f[k] += d;
        return stadium_energy(c, t.dt_mask[0], t.dt_inverse[0], w);
      };
      const double fd = (bumped(h) - bumped(-h)) / (2.0 * h);
      CHECK(g[s][k] == doctest::Approx(fd).epsilon(1e-4).scale(1e-6));
    }
  }
}

TEST_CASE("silhouette energy is non-negative and sums the levels") {
  CameraPose c;
  c.image = {64, 80};
  c.focal = default_focal(c.image);
  c.translation = {0.0, 0.0, 4.0};
  const PosedBody body = pose_body(ShapeParams{}, neutral_pose());
  const SilhouetteTarget t = make_silhouette_target(render_mask(body, c), 3);
  ShapeParams fat;
  fat.beta(1) = -2.0;
  const double e0 = silhouette_energy(body, c, t, {});
  const double e1 = silhouette_energy(pose_body(fat, neutral_pose()), c, t, {});
  CHECK(e0 >= 0.0);
  CHECK(e1 > e0);
  double sum = 0.0;
  for (int l = 0; l < 3; ++l) {
    const LevelCamera lc = level_camera(c, l);
    PosedBody cam_body = body;
    for (auto& cap : cam_body.capsules) {
      cap.a += c.translation;
      cap.b += c.translation;
    }
    const auto st = project_body(cam_body, lc);
    sum += stadium_energy(st, t.dt_mask[l], t.dt_inverse[l], {});
  }
  CHECK(e0 == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("mask helpers") {
  Mask m(3, 2, 0);
  m(1, 1) = 1;
  CHECK(count_set(m) == 1);
  CHECK(count_set(invert(m)) == 5);
}
