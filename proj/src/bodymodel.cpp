#include "fts/bodymodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fts {

namespace {

// Adult template proportions (meters). The vertical chain head-cap + head +
// neck + torso + hip drop + thigh + shin + sole sums to the 1.70 m template.
Skeleton make_skeleton() {
  Skeleton sk;
  sk.names = {"pelvis",     "spine",     "chest",   "neck",       "head_top", "r_hip",
              "r_knee",     "r_ankle",   "l_hip",   "l_knee",     "l_ankle",  "r_shoulder",
              "r_elbow",    "r_wrist",   "l_shoulder", "l_elbow",  "l_wrist"};
  sk.parent = {-1, kPelvis, kSpine, kChest, kNeck, kPelvis, kRHip, kRKnee, kPelvis,
               kLHip, kLKnee, kChest, kRShoulder, kRElbow, kChest, kLShoulder, kLElbow};

  sk.offset[kPelvis] = Vec3::Zero();
  sk.offset[kSpine] = {0.0, -0.12, 0.0};
  sk.offset[kChest] = {0.0, -0.18, 0.0};
  sk.offset[kNeck] = {0.0, -0.20, 0.0};
  sk.offset[kHeadTop] = {0.0, -0.22, 0.0};
  sk.offset[kRHip] = {-0.09, 0.06, 0.0};
  sk.offset[kLHip] = {0.09, 0.06, 0.0};
  sk.offset[kRKnee] = sk.offset[kLKnee] = {0.0, 0.42, 0.0};
  sk.offset[kRAnkle] = sk.offset[kLAnkle] = {0.0, 0.41, 0.0};
  sk.offset[kRShoulder] = {-0.17, -0.15, 0.0};
  sk.offset[kLShoulder] = {0.17, -0.15, 0.0};
  sk.offset[kRElbow] = {-0.28, 0.0, 0.0};
  sk.offset[kLElbow] = {0.28, 0.0, 0.0};
  sk.offset[kRWrist] = {-0.25, 0.0, 0.0};
  sk.offset[kLWrist] = {0.25, 0.0, 0.0};
  sk.head_cap = 0.03;
  sk.sole = 0.06;
  sk.template_height = 1.70;

  sk.radius_template.fill(0.0);
  sk.radius_template[kSpine] = 0.13;
  sk.radius_template[kChest] = 0.14;
  sk.radius_template[kNeck] = 0.055;
  sk.radius_template[kHeadTop] = 0.095;
  sk.radius_template[kRHip] = sk.radius_template[kLHip] = 0.085;
  sk.radius_template[kRKnee] = sk.radius_template[kLKnee] = 0.075;
  sk.radius_template[kRAnkle] = sk.radius_template[kLAnkle] = 0.05;
  sk.radius_template[kRShoulder] = sk.radius_template[kLShoulder] = 0.06;
  sk.radius_template[kRElbow] = sk.radius_template[kLElbow] = 0.045;
  sk.radius_template[kRWrist] = sk.radius_template[kLWrist] = 0.035;

  sk.length_scale_coeff = 0.05;
  // Negative so that, as in the learned body space, larger girth sits at
  // negative values of the second coefficient.
  sk.radius_scale_coeff = -0.15;

  auto& L = sk.length_basis;
  auto& R = sk.radius_basis;
  L.setZero();
  R.setZero();
  sk.head_cap_basis.setZero();
  sk.sole_basis.setZero();

  // Column 0: uniform scale of every length.
  for (int j = 1; j < kNumJoints; ++j) L(j, 0) = sk.length_scale_coeff;
  sk.head_cap_basis(0) = sk.length_scale_coeff;
  sk.sole_basis(0) = sk.length_scale_coeff;
  // Column 1: uniform scale of every radius.
  for (int j = 1; j < kNumJoints; ++j) R(j, 1) = sk.radius_scale_coeff;
  // Columns 2..9: small regional tweaks.
  for (int j : {kRKnee, kRAnkle, kLKnee, kLAnkle}) L(j, 2) = 0.02;
  sk.sole_basis(2) = 0.02;
  for (int j : {kSpine, kChest, kNeck}) L(j, 3) = 0.02;
  for (int j : {kRElbow, kRWrist, kLElbow, kLWrist}) L(j, 4) = 0.02;
  for (int j : {kRShoulder, kLShoulder}) L(j, 5) = 0.02;
  for (int j : {kRHip, kLHip}) L(j, 5) = -0.02;
  for (int j : {kSpine, kChest}) R(j, 6) = 0.02;
  for (int j : {kRHip, kLHip, kRKnee, kRAnkle, kLKnee, kLAnkle}) R(j, 7) = 0.02;
  for (int j : {kRShoulder, kRElbow, kRWrist, kLShoulder, kLElbow, kLWrist}) R(j, 8) = 0.02;
  L(kHeadTop, 9) = 0.02;
  sk.head_cap_basis(9) = 0.02;
  R(kHeadTop, 9) = 0.02;
  R(kNeck, 9) = -0.02;
  return sk;
}

PoseParams make_neutral_pose() {
  PoseParams p;
  const double arm_drop = 65.0 * std::numbers::pi / 180.0;
  p.joint_rots[kRShoulder] = {0.0, 0.0, -arm_drop};
  p.joint_rots[kLShoulder] = {0.0, 0.0, arm_drop};
  return p;
}

BetaT<double> as_beta(const ShapeParams& s) { return s.beta; }

}  // namespace

const Skeleton& skeleton() {
  static const Skeleton sk = make_skeleton();
  return sk;
}

const PoseParams& neutral_pose() {
  static const PoseParams p = make_neutral_pose();
  return p;
}

void ShapeParams::clamp() {
  for (int k = 0; k < kNumBetas; ++k) beta(k) = std::clamp(beta(k), -kShapeBound, kShapeBound);
}

bool ShapeParams::finite() const { return beta.allFinite(); }

bool PoseParams::finite() const {
  if (!root_orient.allFinite()) return false;
  return std::all_of(joint_rots.begin(), joint_rots.end(), [](const Vec3& v) { return v.allFinite(); });
}

std::array<Vec3, kNumJoints> joints3d(const ShapeParams& shape, const PoseParams& pose) {
  return pose_joints<double>(as_beta(shape), pose.root_orient, pose.joint_rots);
}

PosedBody pose_body(const ShapeParams& shape, const PoseParams& pose) {
  const Skeleton& sk = skeleton();
  PosedBody body;
  body.joints3d = joints3d(shape, pose);
  for (int j = 1; j < kNumJoints; ++j) {
    body.capsules[j - 1] = Capsule{body.joints3d[sk.parent[j]], body.joints3d[j],
                                   capsule_radius<double>(sk, shape.beta, j)};
  }
  return body;
}

double height(const ShapeParams& shape) { return rest_height<double>(shape.beta); }

std::array<double, kNumJoints> bone_lengths(const ShapeParams& shape) {
  const Skeleton& sk = skeleton();
  std::array<double, kNumJoints> out{};
  for (int j = 1; j < kNumJoints; ++j)
    out[j] = sk.offset[j].norm() * length_scale<double>(sk, shape.beta, j);
  return out;
}

std::array<double, kNumJoints> capsule_radii(const ShapeParams& shape) {
  const Skeleton& sk = skeleton();
  std::array<double, kNumJoints> out{};
  for (int j = 1; j < kNumJoints; ++j) out[j] = capsule_radius<double>(sk, shape.beta, j);
  return out;
}

double shoulder_ankle_length(const ShapeParams& shape) {
  const auto j = joints3d(shape, PoseParams{});
  const Vec3 shoulders = 0.5 * (j[kRShoulder] + j[kLShoulder]);
  const Vec3 ankles = 0.5 * (j[kRAnkle] + j[kLAnkle]);
  return (shoulders - ankles).norm();
}

}  // namespace fts
