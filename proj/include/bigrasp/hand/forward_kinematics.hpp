#pragma once

#include <vector>

#include "bigrasp/hand/configuration.hpp"

namespace bigrasp::hand {

// World-frame body points of a posed hand; indices follow HandKinematics.
struct PosedHand {
  Pose root;
  std::vector<Pose> link_poses;
  std::vector<Vec3> surface_points;
  std::vector<Vec3> surface_normals;
  std::vector<Vec3> contact_points;
  std::vector<Vec3> contact_normals;
  std::vector<Vec3> anchor_points;
  Vec3 palm_center = Vec3::Zero();
  Vec3 palm_normal = Vec3::UnitY();
};

PosedHand forward_kinematics(const HandKinematics& hand, const HandConfiguration& cfg);

// Per-joint distance outside [lower, upper]; zero inside.
Eigen::VectorXd joint_violation(const HandKinematics& hand, const HandConfiguration& cfg);

// Collects dE/dp for world-frame body points and maps them to the tangent
// coordinates of retract(): [translation, rotation increment, joints].
class BodyGradient {
 public:
  explicit BodyGradient(const HandKinematics& hand);

  void add(int link, const Vec3& world_point, const Vec3& grad) {
    force_[link] += grad;
    moment_[link] += world_point.cross(grad);
  }

  Eigen::VectorXd tangent(const HandKinematics& hand, const PosedHand& posed) const;

 private:
  std::vector<Vec3> force_;
  std::vector<Vec3> moment_;
};

}  // namespace bigrasp::hand
