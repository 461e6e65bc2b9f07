#pragma once

#include <array>
#include <span>

#include "fts/bodymodel.hpp"
#include "fts/error.hpp"

namespace fts {

// Points closer than this to the camera plane are a degenerate hypothesis.
inline constexpr double kMinDepth = 0.01;
inline constexpr int kNumDetections = 14;

// 2D detection order: head-top, neck, r-shoulder, r-elbow, r-wrist,
// l-shoulder, l-elbow, l-wrist, r-hip, r-knee, r-ankle, l-hip, l-knee, l-ankle.
enum Detection : int {
  kDetHeadTop = 0,
  kDetNeck,
  kDetRShoulder,
  kDetRElbow,
  kDetRWrist,
  kDetLShoulder,
  kDetLElbow,
  kDetLWrist,
  kDetRHip,
  kDetRKnee,
  kDetRAnkle,
  kDetLHip,
  kDetLKnee,
  kDetLAnkle,
};

// Model joint behind each detection slot.
inline constexpr std::array<int, kNumDetections> kDetectionJoint = {
    kHeadTop, kNeck, kRShoulder, kRElbow, kRWrist, kLShoulder, kLElbow,
    kLWrist,  kRHip, kRKnee,     kRAnkle, kLHip,   kLKnee,     kLAnkle};

// Detections used when only the camera and root orientation are solved.
inline constexpr std::array<int, 6> kCameraStageDetections = {kDetRHip,   kDetLHip,   kDetRKnee,
                                                              kDetLKnee,  kDetRAnkle, kDetLAnkle};

struct ImageSize {
  int width = 0;
  int height = 0;
  bool operator==(const ImageSize&) const = default;
};

// Translation places the body-frame origin (pelvis) in camera coordinates.
// The principal point sits at the image center.
struct CameraPose {
  Vec3 translation = Vec3(0.0, 0.0, 1.0);
  double focal = 1.0;
  ImageSize image;

  double cx() const { return 0.5 * image.width; }
  double cy() const { return 0.5 * image.height; }
};

double default_focal(ImageSize image);

// Projects a body-frame point. Throws BehindCamera when the camera-space depth
// is at most kMinDepth.
Vec2 project(const Vec3& point, const CameraPose& camera);

template <class T>
Eigen::Matrix<T, 2, 1> project_camera_point(const Vec3T<T>& pc, double focal, double cx, double cy) {
  if (!(pc.z() > T(kMinDepth))) throw Error(Errc::BehindCamera, "point at or behind the camera plane");
  Eigen::Matrix<T, 2, 1> uv;
  uv.x() = focal * pc.x() / pc.z() + cx;
  uv.y() = focal * pc.y() / pc.z() + cy;
  return uv;
}

// Ray through a pixel, scaled to the given camera-space depth, expressed in
// the body frame.
Vec3 unproject(const Vec2& pixel, double depth, const CameraPose& camera);

struct Detections {
  std::array<Vec2, kNumDetections> points;
  std::array<double, kNumDetections> confidence{};
};

// Similar-triangles depth: focal * (3D shoulder-ankle length) / (2D length).
double init_depth(const ShapeParams& shape, const Detections& det, double focal);

// Evenly spaced depths over [z0 - range, z0 + range], shifted so the nearest
// is at least min_depth. count == 1 returns {z0} (clamped).
std::vector<double> depth_candidates(double z0, int count = 5, double range = 1.0,
                                     double min_depth = 0.5);

}  // namespace fts
