#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "bigrasp/hand/kinematics.hpp"

namespace bigrasp::hand {

// Root pose plus joint angles of one hand.
struct HandConfiguration {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();
  Eigen::VectorXd joints;  // radians, size HandKinematics::dof()

  Pose pose() const { return {rotation.toRotationMatrix(), translation}; }
  static HandConfiguration neutral(int dof) {
    HandConfiguration c;
    c.joints = Eigen::VectorXd::Zero(dof);
    return c;
  }
};

struct BimanualGrasp {
  HandConfiguration left;
  HandConfiguration right;
};

// Which hands take part in a grasp; single-hand runs keep the idle hand out of
// every term.
enum class HandMask { Both, LeftOnly, RightOnly };
inline bool uses_left(HandMask m) { return m != HandMask::RightOnly; }
inline bool uses_right(HandMask m) { return m != HandMask::LeftOnly; }

// The loaded description is a right hand; the left hand is its mirror image.
struct HandPair {
  HandKinematics left;
  HandKinematics right;

  static HandPair from_right(const HandKinematics& right) { return {right.mirror(), right}; }
  const HandKinematics& side(bool left_side) const { return left_side ? left : right; }
};

inline constexpr int kPoseDim = 6;
inline constexpr int kGraspDim = 2 * (kPoseDim + kHandDof);  // 56

inline int hand_tangent_dim(int dof) { return kPoseDim + dof; }

// Axis-angle vector with norm in [0, pi].
Vec3 rotation_to_axis_angle(const Eigen::Quaterniond& q);
Eigen::Quaterniond axis_angle_to_quaternion(const Vec3& omega);

// Layout per hand: [translation (3), axis-angle (3), joints (dof)], left first.
Eigen::VectorXd flatten(const BimanualGrasp& grasp);
BimanualGrasp unflatten(const Eigen::Ref<const Eigen::VectorXd>& v, const HandKinematics& hand);

// Tangent step on one hand: translation and joints add; the rotation is
// updated as exp([omega]) * R (world-frame increment about the root origin).
HandConfiguration retract(const HandConfiguration& cfg, const Eigen::Ref<const Eigen::VectorXd>& delta);
BimanualGrasp retract(const BimanualGrasp& grasp, const Eigen::Ref<const Eigen::VectorXd>& delta);

void clamp_to_limits(HandConfiguration& cfg, const HandKinematics& hand);

// Applies world transform `t` to the hand root.
HandConfiguration transformed(const HandConfiguration& cfg, const Pose& t);

}  // namespace bigrasp::hand
