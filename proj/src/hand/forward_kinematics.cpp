#include "bigrasp/hand/forward_kinematics.hpp"

#include <cmath>
#include <numbers>

#include "bigrasp/common/error.hpp"

namespace bigrasp::hand {

Vec3 rotation_to_axis_angle(const Eigen::Quaterniond& q_in) {
  Eigen::Quaterniond q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 v = q.vec();
  const double s = v.norm();
  if (s < 1e-12) return 2.0 * v;  // first-order near identity
  const double angle = 2.0 * std::atan2(s, q.w());  // in [0, pi]
  return (angle / s) * v;
}

Eigen::Quaterniond axis_angle_to_quaternion(const Vec3& omega) {
  const double angle = omega.norm();
  if (angle < 1e-12) {
    Eigen::Quaterniond q(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z());
    return q.normalized();
  }
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, omega / angle));
}

Eigen::VectorXd flatten(const BimanualGrasp& grasp) {
  const int dl = static_cast<int>(grasp.left.joints.size());
  const int dr = static_cast<int>(grasp.right.joints.size());
  Eigen::VectorXd v(2 * kPoseDim + dl + dr);
  auto put = [&v](int offset, const HandConfiguration& c) {
    v.segment<3>(offset) = c.translation;
    v.segment<3>(offset + 3) = rotation_to_axis_angle(c.rotation);
    v.segment(offset + 6, c.joints.size()) = c.joints;
  };
  put(0, grasp.left);
  put(kPoseDim + dl, grasp.right);
  return v;
}

BimanualGrasp unflatten(const Eigen::Ref<const Eigen::VectorXd>& v, const HandKinematics& hand) {
  const int dof = hand.dof();
  if (v.size() != 2 * hand_tangent_dim(dof))
    throw Error("unflatten: expected " + std::to_string(2 * hand_tangent_dim(dof)) + " coordinates, got " +
                std::to_string(v.size()));
  if (!v.allFinite()) throw Error("unflatten: non-finite coordinate");
  auto get = [&](int offset) {
    HandConfiguration c;
    c.translation = v.segment<3>(offset);
    c.rotation = axis_angle_to_quaternion(v.segment<3>(offset + 3));
    c.joints = v.segment(offset + 6, dof);
    return c;
  };
  return {get(0), get(hand_tangent_dim(dof))};
}

HandConfiguration retract(const HandConfiguration& cfg, const Eigen::Ref<const Eigen::VectorXd>& delta) {
  HandConfiguration out = cfg;
  out.translation += delta.segment<3>(0);
  out.rotation = (axis_angle_to_quaternion(delta.segment<3>(3)) * cfg.rotation).normalized();
  out.joints += delta.segment(6, cfg.joints.size());
  return out;
}

BimanualGrasp retract(const BimanualGrasp& grasp, const Eigen::Ref<const Eigen::VectorXd>& delta) {
  const int nl = hand_tangent_dim(static_cast<int>(grasp.left.joints.size()));
  const int nr = hand_tangent_dim(static_cast<int>(grasp.right.joints.size()));
  return {retract(grasp.left, delta.segment(0, nl)), retract(grasp.right, delta.segment(nl, nr))};
}

void clamp_to_limits(HandConfiguration& cfg, const HandKinematics& hand) {
  cfg.joints = cfg.joints.cwiseMax(hand.lower_limits()).cwiseMin(hand.upper_limits());
}

HandConfiguration transformed(const HandConfiguration& cfg, const Pose& t) {
  HandConfiguration out = cfg;
  out.rotation = Eigen::Quaterniond(t.rotation) * cfg.rotation;
  out.rotation.normalize();
  out.translation = t * cfg.translation;
  return out;
}

// ---------------------------------------------------------------------------

PosedHand forward_kinematics(const HandKinematics& hand, const HandConfiguration& cfg) {
  if (cfg.joints.size() != hand.dof())
    throw Error("forward_kinematics: configuration has " + std::to_string(cfg.joints.size()) +
                " joint angles, hand has " + std::to_string(hand.dof()));
  PosedHand out;
  out.root = cfg.pose();
  out.link_poses.resize(hand.links.size());
  for (std::size_t l = 0; l < hand.links.size(); ++l) {
    const Link& link = hand.links[l];
    if (link.parent < 0) {
      out.link_poses[l] = out.root;
      continue;
    }
    const Joint& j = hand.joints[link.joint];
    Pose local = j.origin;
    if (!j.fixed) local.rotation = local.rotation * rotation_about(j.axis, cfg.joints[j.dof_index]);
    out.link_poses[l] = out.link_poses[link.parent] * local;
  }
  auto map_points = [&](const std::vector<OrientedPoint>& src, std::vector<Vec3>& pts, std::vector<Vec3>& nrm) {
    pts.resize(src.size());
    nrm.resize(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
      const Pose& t = out.link_poses[src[i].link];
      pts[i] = t * src[i].position;
      nrm[i] = t.rotation * src[i].normal;
    }
  };
  map_points(hand.surface_samples, out.surface_points, out.surface_normals);
  map_points(hand.contact_anchors, out.contact_points, out.contact_normals);
  out.anchor_points.resize(hand.penetration_anchors.size());
  for (std::size_t i = 0; i < hand.penetration_anchors.size(); ++i)
    out.anchor_points[i] = out.link_poses[hand.penetration_anchors[i].link] * hand.penetration_anchors[i].position;
  const Pose& palm = out.link_poses[hand.palm.link];
  out.palm_center = palm * hand.palm.position;
  out.palm_normal = palm.rotation * hand.palm.normal;
  return out;
}

Eigen::VectorXd joint_violation(const HandKinematics& hand, const HandConfiguration& cfg) {
  const Eigen::VectorXd lo = hand.lower_limits();
  const Eigen::VectorXd hi = hand.upper_limits();
  return (cfg.joints - hi).cwiseMax(0.0) + (lo - cfg.joints).cwiseMax(0.0);
}

BodyGradient::BodyGradient(const HandKinematics& hand)
    : force_(hand.links.size(), Vec3::Zero()), moment_(hand.links.size(), Vec3::Zero()) {}

Eigen::VectorXd BodyGradient::tangent(const HandKinematics& hand, const PosedHand& posed) const {
  std::vector<Vec3> f = force_;
  std::vector<Vec3> m = moment_;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(hand_tangent_dim(hand.dof()));
  // Children follow parents, so a reverse sweep accumulates subtree totals.
  for (std::size_t l = hand.links.size(); l-- > 0;) {
    const Link& link = hand.links[l];
    if (link.parent < 0) continue;
    const Joint& j = hand.joints[link.joint];
    if (!j.fixed) {
      const Pose& t = posed.link_poses[l];
      const Vec3 axis = t.rotation * j.axis;
      g[kPoseDim + j.dof_index] = axis.dot(m[l] - t.translation.cross(f[l]));
    }
    f[link.parent] += f[l];
    m[link.parent] += m[l];
  }
  const Vec3& t = posed.root.translation;
  for (std::size_t l = 0; l < hand.links.size(); ++l) {
    if (hand.links[l].parent >= 0) continue;
    g.segment<3>(0) += f[l];
    g.segment<3>(3) += m[l] - t.cross(f[l]);
  }
  return g;
}

}  // namespace bigrasp::hand
