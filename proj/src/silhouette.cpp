#include "fts/silhouette.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fts {

namespace {

using Jet6 = ceres::Jet<double, 6>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Coverage below sigmoid(-24) is treated as exactly that value.
double raster_margin(double sharpness) { return 24.0 / sharpness + 1.0; }

struct Raster {
  std::vector<double> best;
  std::vector<int> arg;
};

// Per-pixel maximum of the inside-positive signed distance, clamped from
// below at -margin, and the stadium attaining it (-1 when clamped).
void raster_max(std::span<const Stadium> stadiums, int w, int h, double margin, Raster& r) {
  r.best.assign(static_cast<size_t>(w) * h, -margin);
  r.arg.assign(static_cast<size_t>(w) * h, -1);
  for (int s = 0; s < static_cast<int>(stadiums.size()); ++s) {
    const Stadium& st = stadiums[s];
    const double pad = margin;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(st.ax - st.ra, st.bx - st.rb) - pad)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(st.ax + st.ra, st.bx + st.rb) + pad)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(st.ay - st.ra, st.by - st.rb) - pad)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(st.ay + st.ra, st.by + st.rb) + pad)));
    for (int y = y0; y <= y1; ++y) {
      const size_t row = static_cast<size_t>(y) * w;
      for (int x = x0; x <= x1; ++x) {
        const double d = -stadium_sdf<double>(x, y, st);
        if (d > r.best[row + x]) {
          r.best[row + x] = d;
          r.arg[row + x] = s;
        }
      }
    }
  }
}

double parabola_cross(const double* f, int q, int p) {
  return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
}

// 1D squared distance transform over finite sites (Felzenszwalb-Huttenlocher
// lower envelope). Sites with f = +inf are skipped; an all-infinite input
// stays infinite.
void edt_1d(const double* f, int n, double* out, std::vector<int>& v, std::vector<double>& z) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  v.resize(n);
  z.resize(n + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = parabola_cross(f, q, v[k]);
    while (s <= z[k]) s = parabola_cross(f, q, v[--k]);
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(out, out + n, kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q] = d * d + f[v[j]];
  }
}

DistanceField blur_decimate(const DistanceField& in) {
  static const std::array<double, 5> kernel = [] {
    std::array<double, 5> k{};
    double sum = 0.0;
    for (int i = -2; i <= 2; ++i) sum += (k[i + 2] = std::exp(-0.5 * i * i));
    for (double& x : k) x /= sum;
    return k;
  }();
  const int w = in.width, h = in.height;
  DistanceField tmp(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) acc += kernel[i + 2] * in(std::clamp(x + i, 0, w - 1), y);
      tmp(x, y) = acc;
    }
  DistanceField out((w + 1) / 2, (h + 1) / 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      double acc = 0.0;
      for (int i = -2; i <= 2; ++i) acc += kernel[i + 2] * tmp(2 * x, std::clamp(2 * y + i, 0, h - 1));
      out(x, y) = acc;
    }
  return out;
}

}  // namespace

LevelCamera level_camera(const CameraPose& camera, int level) {
  const double scale = std::ldexp(1.0, -level);
  LevelCamera lc;
  lc.focal = camera.focal * scale;
  lc.cx = camera.cx() * scale;
  lc.cy = camera.cy() * scale;
  int w = camera.image.width, h = camera.image.height;
  for (int l = 0; l < level; ++l) {
    w = (w + 1) / 2;
    h = (h + 1) / 2;
  }
  lc.width = w;
  lc.height = h;
  return lc;
}

std::array<Stadium, kNumCapsules> project_body(const PosedBody& body, const LevelCamera& cam) {
  std::array<Stadium, kNumCapsules> out;
  for (int i = 0; i < kNumCapsules; ++i) {
    const Capsule& c = body.capsules[i];
    out[i] = project_capsule<double>(c.a, c.b, c.radius, cam);
  }
  return out;
}

SoftSilhouette rasterize_stadiums(std::span<const Stadium> stadiums, int width, int height, double sharpness) {
  Raster r;
  raster_max(stadiums, width, height, raster_margin(sharpness), r);
  SoftSilhouette out(width, height);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = sigmoid(sharpness * r.best[i]);
  return out;
}

namespace {

PosedBody to_camera(const PosedBody& body, const Vec3& t) {
  PosedBody out = body;
  for (auto& j : out.joints3d) j += t;
  for (auto& c : out.capsules) {
    c.a += t;
    c.b += t;
  }
  return out;
}

}  // namespace

SoftSilhouette rasterize(const PosedBody& body, const CameraPose& camera, double sharpness) {
  const auto st = project_body(to_camera(body, camera.translation), level_camera(camera, 0));
  return rasterize_stadiums(st, camera.image.width, camera.image.height, sharpness);
}

Mask render_mask(const PosedBody& body, const CameraPose& camera) {
  const auto st = project_body(to_camera(body, camera.translation), level_camera(camera, 0));
  Raster r;
  raster_max(st, camera.image.width, camera.image.height, 1.0, r);
  Mask m(camera.image.width, camera.image.height);
  for (size_t i = 0; i < m.size(); ++i) m.data[i] = r.best[i] >= 0.0 ? 1 : 0;
  return m;
}

DistanceField distance_transform(const Mask& mask) {
  if (count_set(mask) == 0) throw Error(Errc::EmptyMask, "distance transform of an empty mask");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int w = mask.width, h = mask.height;
  DistanceField sq(w, h);
  std::vector<double> f(std::max(w, h)), out(std::max(w, h));
  std::vector<int> v;
  std::vector<double> z;
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = mask(x, y) ? 0.0 : kInf;
    edt_1d(f.data(), h, out.data(), v, z);
    for (int y = 0; y < h; ++y) sq(x, y) = out[y];
  }
  DistanceField dt(w, h);
  for (int y = 0; y < h; ++y) {
    edt_1d(&sq.data[static_cast<size_t>(y) * w], w, out.data(), v, z);
    for (int x = 0; x < w; ++x) dt(x, y) = std::sqrt(out[x]);
  }
  return dt;
}

std::vector<DistanceField> pyramid(const DistanceField& field, int levels) {
  const int need = 1 << (levels - 1);
  if (levels < 1 || field.width < need || field.height < need)
    throw Error(Errc::TooSmall, "field too small for a " + std::to_string(levels) + "-level pyramid");
  std::vector<DistanceField> out;
  out.reserve(levels);
  out.push_back(field);
  for (int l = 1; l < levels; ++l) out.push_back(blur_decimate(out.back()));
  return out;
}

SilhouetteTarget make_silhouette_target(const Mask& mask, int levels) {
  const size_t set = count_set(mask);
  if (set == 0) throw Error(Errc::EmptyMask, "segmentation mask has no foreground");
  if (set == mask.size()) throw Error(Errc::EmptyMask, "segmentation mask has no background");
  SilhouetteTarget t;
  t.image = {mask.width, mask.height};
  t.dt_mask = pyramid(distance_transform(mask), levels);
  t.dt_inverse = pyramid(distance_transform(invert(mask)), levels);
  return t;
}

double silhouette_term(const SoftSilhouette& model, const DistanceField& dt_mask,
                       const DistanceField& dt_inverse, double lambda1, double lambda2) {
  if (!model.same_shape(dt_mask) || !model.same_shape(dt_inverse))
    throw Error(Errc::ShapeMismatch, "silhouette and distance fields differ in resolution");
  double sum = 0.0;
  for (size_t i = 0; i < model.size(); ++i)
    sum += lambda1 * model.data[i] * dt_mask.data[i] + lambda2 * (1.0 - model.data[i]) * dt_inverse.data[i];
  return sum / static_cast<double>(model.size());
}

double stadium_energy(std::span<const Stadium> stadiums, const DistanceField& dt_mask,
                      const DistanceField& dt_inverse, const SilhouetteWeights& weights,
                      std::span<StadiumGrad> grad) {
  if (!dt_mask.same_shape(dt_inverse))
    throw Error(Errc::ShapeMismatch, "distance fields differ in resolution");
  if (!grad.empty() && grad.size() != stadiums.size())
    throw Error(Errc::InvalidArgument, "gradient buffer size differs from stadium count");
  const int w = dt_mask.width, h = dt_mask.height;
  thread_local Raster r;
  const double sharp = weights.sharpness;
  raster_max(stadiums, w, h, raster_margin(sharp), r);
  for (auto& g : grad) g.fill(0.0);
  const double inv_n = 1.0 / static_cast<double>(static_cast<size_t>(w) * h);
  const double l1 = weights.lambda_inside, l2 = weights.lambda_outside;
  const double cov_far = sigmoid(-sharp * raster_margin(sharp));

  std::vector<StadiumT<Jet6>> jets;
  if (!grad.empty()) {
    jets.reserve(stadiums.size());
    for (const Stadium& s : stadiums)
      jets.push_back({Jet6(s.ax, 0), Jet6(s.ay, 1), Jet6(s.ra, 2), Jet6(s.bx, 3), Jet6(s.by, 4), Jet6(s.rb, 5)});
  }

  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = static_cast<size_t>(y) * w + x;
      const double a = dt_mask.data[i], b = dt_inverse.data[i];
      if (r.arg[i] < 0) {
        sum += l1 * cov_far * a + l2 * (1.0 - cov_far) * b;
        continue;
      }
      const double cov = sigmoid(sharp * r.best[i]);
      sum += l1 * cov * a + l2 * (1.0 - cov) * b;
      if (grad.empty()) continue;
      const double slope = sharp * cov * (1.0 - cov);
      if (slope < 1e-13) continue;
      const double g = (l1 * a - l2 * b) * slope * inv_n;
      if (g == 0.0) continue;
      const int s = r.arg[i];
      const Jet6 sdf = stadium_sdf<Jet6>(Jet6(x), Jet6(y), jets[s]);
      for (int k = 0; k < 6; ++k) grad[s][k] -= g * sdf.v[k];
    }
  }
  return sum * inv_n;
}

double silhouette_energy(const PosedBody& body, const CameraPose& camera, const SilhouetteTarget& target,
                         const SilhouetteWeights& weights) {
  if (!(camera.image == target.image))
    throw Error(Errc::ShapeMismatch, "camera image size differs from the silhouette target");
  const PosedBody cam_body = to_camera(body, camera.translation);
  double total = 0.0;
  for (size_t l = 0; l < target.dt_mask.size(); ++l) {
    const auto st = project_body(cam_body, level_camera(camera, static_cast<int>(l)));
    total += stadium_energy(st, target.dt_mask[l], target.dt_inverse[l], weights);
  }
  return total;
}

}  // namespace fts
