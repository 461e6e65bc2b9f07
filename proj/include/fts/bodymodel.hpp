#pragma once

// Articulated capsule body: a 17-joint skeleton whose bone lengths and capsule
// radii are linear in a 10-dim shape vector, posed by per-joint axis-angle
// rotations. Everything numeric is templated on the scalar so the same code
// path produces values (double) and derivatives (ceres::Jet).

#include <array>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <ceres/jet.h>
#include <ceres/rotation.h>

namespace fts {

inline constexpr int kNumJoints = 17;
inline constexpr int kNumBetas = 10;
inline constexpr int kNumCapsules = kNumJoints - 1;
inline constexpr double kShapeBound = 5.0;

enum Joint : int {
  kPelvis = 0,
  kSpine,
  kChest,
  kNeck,
  kHeadTop,
  kRHip,
  kRKnee,
  kRAnkle,
  kLHip,
  kLKnee,
  kLAnkle,
  kRShoulder,
  kRElbow,
  kRWrist,
  kLShoulder,
  kLElbow,
  kLWrist,
};

// Joints whose rotation moves at least one bone, excluding the pelvis (whose
// rotation is the root orientation).
inline constexpr std::array<int, 11> kArticulatedJoints = {
    kSpine, kChest, kNeck, kRHip, kRKnee, kLHip, kLKnee, kRShoulder, kRElbow, kLShoulder, kLElbow};

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using BetaVector = Eigen::Matrix<double, kNumBetas, 1>;
template <class T>
using Vec3T = Eigen::Matrix<T, 3, 1>;
template <class T>
using Mat3T = Eigen::Matrix<T, 3, 3>;
template <class T>
using BetaT = Eigen::Matrix<T, kNumBetas, 1>;

struct ShapeParams {
  BetaVector beta = BetaVector::Zero();

  // Clamp every coefficient into [-kShapeBound, kShapeBound].
  void clamp();
  bool finite() const;
};

struct PoseParams {
  Vec3 root_orient = Vec3::Zero();
  std::array<Vec3, kNumJoints> joint_rots;

  PoseParams() { joint_rots.fill(Vec3::Zero()); }
  bool finite() const;
};

// Body frame: origin at the pelvis, x towards the body's left, y downwards,
// z backwards (the body faces -z, towards a camera looking along +z).
struct Skeleton {
  std::array<std::string_view, kNumJoints> names;
  std::array<int, kNumJoints> parent;
  // Rest ("T-pose") offset of each joint from its parent, meters.
  std::array<Vec3, kNumJoints> offset;
  // Bone j (parent(j) -> j) has length |offset_j| * (1 + length_basis.row(j) * beta).
  Eigen::Matrix<double, kNumJoints, kNumBetas> length_basis;
  // Capsule j spans bone j; radius_template(j) * (1 + radius_basis.row(j) * beta).
  std::array<double, kNumJoints> radius_template;
  Eigen::Matrix<double, kNumJoints, kNumBetas> radius_basis;
  // Skin allowance above the head-top joint and below the ankle joints. They
  // scale with the length basis, so they contribute to height but not girth.
  double head_cap = 0.0;
  double sole = 0.0;
  Eigen::Matrix<double, 1, kNumBetas> head_cap_basis;
  Eigen::Matrix<double, 1, kNumBetas> sole_basis;
  double template_height = 0.0;
  double length_scale_coeff = 0.0;  // s1
  double radius_scale_coeff = 0.0;  // s2
  double min_size = 0.01;           // meters
};

const Skeleton& skeleton();

struct Capsule {
  Vec3 a;
  Vec3 b;
  double radius;
};

struct PosedBody {
  std::array<Vec3, kNumJoints> joints3d;
  std::array<Capsule, kNumCapsules> capsules;  // capsule i spans bone (i + 1)
};

// Neutral standing pose (arms lowered) used as the pose prior mean and as
// the initial pose of every fit.
const PoseParams& neutral_pose();

std::array<Vec3, kNumJoints> joints3d(const ShapeParams& shape, const PoseParams& pose);
PosedBody pose_body(const ShapeParams& shape, const PoseParams& pose);
double height(const ShapeParams& shape);
std::array<double, kNumJoints> bone_lengths(const ShapeParams& shape);
std::array<double, kNumJoints> capsule_radii(const ShapeParams& shape);

// Rest-pose distance between the mean shoulder and the mean ankle.
double shoulder_ankle_length(const ShapeParams& shape);

// ---------------------------------------------------------------------------
// Scalar-generic kernels.

template <class T>
Mat3T<T> rodrigues(const Vec3T<T>& axis_angle) {
  T rot[9];
  ceres::AngleAxisToRotationMatrix(axis_angle.data(), rot);
  Mat3T<T> m;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) m(r, c) = rot[c * 3 + r];
  return m;
}

template <class T, class Row>
T basis_dot(const Row& row, const BetaT<T>& beta) {
  T s = T(0.0);
  for (int k = 0; k < kNumBetas; ++k)
    if (row(k) != 0.0) s += row(k) * beta(k);
  return s;
}

template <class T>
T length_scale(const Skeleton& sk, const BetaT<T>& beta, int joint) {
  T s = T(1.0) + basis_dot<T>(sk.length_basis.row(joint), beta);
  const double floor = sk.min_size / sk.offset[joint].norm();
  if (s < T(floor)) s = T(floor);
  return s;
}

template <class T>
T capsule_radius(const Skeleton& sk, const BetaT<T>& beta, int joint) {
  T r = T(sk.radius_template[joint]) *
        (T(1.0) + basis_dot<T>(sk.radius_basis.row(joint), beta));
  if (r < T(sk.min_size)) r = T(sk.min_size);
  return r;
}

// Forward kinematics: rotation at joint j moves every descendant of j about j.
template <class T>
std::array<Vec3T<T>, kNumJoints> pose_joints(const BetaT<T>& beta, const Vec3T<T>& root,
                                             const std::array<Vec3T<T>, kNumJoints>& rots) {
  const Skeleton& sk = skeleton();
  std::array<Mat3T<T>, kNumJoints> frame;
  std::array<Vec3T<T>, kNumJoints> pos;
  frame[kPelvis] = rodrigues<T>(root) * rodrigues<T>(rots[kPelvis]);
  pos[kPelvis] = Vec3T<T>::Zero();
  for (int j = 1; j < kNumJoints; ++j) {
    const int p = sk.parent[j];
    const Vec3T<T> off = sk.offset[j].template cast<T>() * length_scale<T>(sk, beta, j);
    pos[j] = pos[p] + frame[p] * off;
    frame[j] = frame[p] * rodrigues<T>(rots[j]);
  }
  return pos;
}

template <class T>
T rest_height(const BetaT<T>& beta) {
  const Skeleton& sk = skeleton();
  std::array<T, kNumJoints> y;
  y[kPelvis] = T(0.0);
  for (int j = 1; j < kNumJoints; ++j)
    y[j] = y[sk.parent[j]] + T(sk.offset[j].y()) * length_scale<T>(sk, beta, j);
  const T cap = T(sk.head_cap) * (T(1.0) + basis_dot<T>(sk.head_cap_basis, beta));
  const T sole = T(sk.sole) * (T(1.0) + basis_dot<T>(sk.sole_basis, beta));
  T bottom = y[kRAnkle] > y[kLAnkle] ? y[kRAnkle] : y[kLAnkle];
  return bottom + sole - (y[kHeadTop] - cap);
}

}  // namespace fts
