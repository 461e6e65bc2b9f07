#include "fts/projection.hpp"

#include <vector>

namespace fts {

double default_focal(ImageSize image) { return 2.0 * image.width; }

Vec2 project(const Vec3& point, const CameraPose& camera) {
  return project_camera_point<double>(point + camera.translation, camera.focal, camera.cx(), camera.cy());
}

Vec3 unproject(const Vec2& pixel, double depth, const CameraPose& camera) {
  const Vec3 pc((pixel.x() - camera.cx()) * depth / camera.focal,
                (pixel.y() - camera.cy()) * depth / camera.focal, depth);
  return pc - camera.translation;
}

double init_depth(const ShapeParams& shape, const Detections& det, double focal) {
  for (int d : {kDetRShoulder, kDetLShoulder, kDetRAnkle, kDetLAnkle}) {
    if (!(det.confidence[d] > 0.0))
      throw Error(Errc::MissingJoints, "shoulder and ankle detections are required for depth init");
  }
  const Vec2 shoulders = 0.5 * (det.points[kDetRShoulder] + det.points[kDetLShoulder]);
  const Vec2 ankles = 0.5 * (det.points[kDetRAnkle] + det.points[kDetLAnkle]);
  const double pixels = (shoulders - ankles).norm();
  if (!(pixels >= 1.0)) throw Error(Errc::MissingJoints, "shoulder-ankle span below one pixel");
  return focal * shoulder_ankle_length(shape) / pixels;
}

std::vector<double> depth_candidates(double z0, int count, double range, double min_depth) {
  if (count <= 1) return {std::max(z0, min_depth)};
  std::vector<double> out(count);
  const double step = 2.0 * range / (count - 1);
  double lo = z0 - range;
  if (lo < min_depth) lo = min_depth;
  for (int i = 0; i < count; ++i) out[i] = lo + i * step;
  return out;
}

}  // namespace fts
