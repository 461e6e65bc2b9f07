#pragma once

// Model silhouettes, distance transforms, Gaussian pyramids and the
// bidirectional silhouette mismatch.

#include <array>
#include <span>
#include <vector>

#include "fts/bodymodel.hpp"
#include "fts/image.hpp"
#include "fts/projection.hpp"

namespace fts {

inline constexpr int kPyramidLevels = 4;

// Convex hull of two discs in the image plane: the projection of a capsule
// with the radius at each end scaled by focal / depth.
template <class T>
struct StadiumT {
  T ax, ay, ra;
  T bx, by, rb;
};
using Stadium = StadiumT<double>;
using StadiumGrad = std::array<double, 6>;  // d/d(ax, ay, ra, bx, by, rb)

// Pinhole intrinsics of one pyramid level.
struct LevelCamera {
  double focal = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
};

LevelCamera level_camera(const CameraPose& camera, int level);

// Signed distance to the stadium boundary, negative inside.
template <class T>
T stadium_sdf(const T& px, const T& py, const StadiumT<T>& s) {
  using std::abs;
  using std::sqrt;
  const T qax = px - s.ax, qay = py - s.ay;
  const T qbx = px - s.bx, qby = py - s.by;
  const T dx = s.bx - s.ax, dy = s.by - s.ay;
  const T h2 = dx * dx + dy * dy;
  const T dr = s.ra - s.rb;
  if (h2 <= dr * dr) {
    // One disc contains the other.
    const T da = sqrt(qax * qax + qay * qay) - s.ra;
    const T db = sqrt(qbx * qbx + qby * qby) - s.rb;
    return da < db ? da : db;
  }
  const T h = sqrt(h2);
  const T ux = dx / h, uy = dy / h;
  const T along = qax * ux + qay * uy;
  const T across = abs(qax * uy - qay * ux);
  const T sn = dr / h;
  const T cs = sqrt(T(1.0) - sn * sn);
  const T k = cs * along - sn * across;
  if (k < T(0.0)) return sqrt(qax * qax + qay * qay) - s.ra;
  if (k > cs * h) return sqrt(qbx * qbx + qby * qby) - s.rb;
  return across * cs + along * sn - s.ra;
}

// Projects a camera-space capsule. Throws BehindCamera.
template <class T>
StadiumT<T> project_capsule(const Vec3T<T>& a_cam, const Vec3T<T>& b_cam, const T& radius,
                            const LevelCamera& cam) {
  const auto pa = project_camera_point<T>(a_cam, cam.focal, cam.cx, cam.cy);
  const auto pb = project_camera_point<T>(b_cam, cam.focal, cam.cx, cam.cy);
  return StadiumT<T>{pa.x(), pa.y(), radius * cam.focal / a_cam.z(),
                     pb.x(), pb.y(), radius * cam.focal / b_cam.z()};
}

std::array<Stadium, kNumCapsules> project_body(const PosedBody& body, const LevelCamera& cam);

// Coverage sigma(sharpness * d), d = max over stadiums of the inside-positive
// signed distance.
SoftSilhouette rasterize_stadiums(std::span<const Stadium> stadiums, int width, int height,
                                  double sharpness);
SoftSilhouette rasterize(const PosedBody& body, const CameraPose& camera, double sharpness);
// Hard membership (d >= 0) at pixel centers.
Mask render_mask(const PosedBody& body, const CameraPose& camera);

// Exact Euclidean distance from every pixel to the nearest set pixel.
// Throws EmptyMask when no pixel is set.
DistanceField distance_transform(const Mask& mask);

// Level 0 is the input; each further level is a 5-tap sigma = 1 Gaussian blur
// (replicated borders) followed by dropping odd rows and columns.
std::vector<DistanceField> pyramid(const DistanceField& field, int levels = kPyramidLevels);

struct SilhouetteWeights {
  double lambda_inside = 1.0;   // lambda1: model coverage outside the mask
  double lambda_outside = 1.0;  // lambda2: mask not covered by the model
  double sharpness = 2.0;       // 1 / pixels
};

// Pyramids of the distance transforms of a mask and of its complement.
struct SilhouetteTarget {
  ImageSize image;
  std::vector<DistanceField> dt_mask;
  std::vector<DistanceField> dt_inverse;
};

// Throws EmptyMask if the mask or its complement is empty.
SilhouetteTarget make_silhouette_target(const Mask& mask, int levels = kPyramidLevels);

// Mean over pixels of lambda1 * I * DT_S + lambda2 * (1 - I) * DT_notS.
double silhouette_term(const SoftSilhouette& model, const DistanceField& dt_mask,
                       const DistanceField& dt_inverse, double lambda1, double lambda2);

// One pyramid level evaluated straight from stadiums. When grad is non-empty
// it must hold one entry per stadium and receives d(energy)/d(stadium).
double stadium_energy(std::span<const Stadium> stadiums, const DistanceField& dt_mask,
                      const DistanceField& dt_inverse, const SilhouetteWeights& weights,
                      std::span<StadiumGrad> grad = {});

// Sum over pyramid levels, re-rasterizing the body at each level.
double silhouette_energy(const PosedBody& body, const CameraPose& camera, const SilhouetteTarget& target,
                         const SilhouetteWeights& weights);

}  // namespace fts
