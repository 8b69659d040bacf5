#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "bigrasp/geometry/mesh.hpp"

namespace bigrasp::hand {

using geometry::Mat3;
using geometry::Vec3;

inline constexpr int kHandDof = 22;

// Rigid transform x -> rotation * x + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 operator*(const Vec3& x) const { return rotation * x + translation; }
  Pose operator*(const Pose& o) const { return {rotation * o.rotation, rotation * o.translation + translation}; }
  Pose inverse() const { return {rotation.transpose(), -(rotation.transpose() * translation)}; }
};

struct Primitive {
  enum class Kind { Capsule, Sphere, Box };
  Kind kind = Kind::Sphere;
  Vec3 a = Vec3::Zero();  // capsule endpoints; sphere and box use `a` as center
  Vec3 b = Vec3::Zero();
  double radius = 0.0;
  Vec3 half_extents = Vec3::Zero();
};

struct Link {
  std::string name;
  int parent = -1;  // link index, -1 for the root
  int joint = -1;   // index into HandKinematics::joints of the joint driving this link
  std::vector<Primitive> primitives;
  Vec3 palmar_direction = Vec3::Zero();  // zero: sample the whole surface
  int sample_budget = 0;                 // surface samples attributed to this link
};

struct Joint {
  std::string name;
  int parent_link = -1;
  int child_link = -1;
  Pose origin;          // parent frame -> child frame at zero angle
  Vec3 axis = Vec3::UnitZ();  // unit, child frame
  double lower = 0.0;
  double upper = 0.0;
  double pregrasp = 0.0;  // initial angle for synthesis; mid-range unless the file says otherwise
  bool fixed = false;
  int dof_index = -1;   // position in the joint-angle vector, -1 when fixed
};

// Body point with an outward normal, link-local.
struct OrientedPoint {
  int link = 0;
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

// Sphere used for penetration terms, link-local.
struct PenetrationAnchor {
  int link = 0;
  Vec3 position = Vec3::Zero();
  double radius = 0.0;
};

// Kinematic tree for one hand plus the body-point sets the energy needs.
// Links are stored parent-before-child.
struct HandKinematics {
  std::string name;
  std::vector<Link> links;
  std::vector<Joint> joints;
  std::vector<OrientedPoint> contact_anchors;
  std::vector<PenetrationAnchor> penetration_anchors;
  std::vector<OrientedPoint> surface_samples;
  OrientedPoint palm;
  // collision_allowed[a * links.size() + b]: whether anchors on links a and b
  // are checked against each other.
  std::vector<char> collision_allowed;
  bool mirrored = false;

  int dof() const;
  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;
  Eigen::VectorXd mid_limits() const;
  Eigen::VectorXd pregrasp_pose() const;
  int find_link(const std::string& name) const;  // -1 when absent
  bool pair_checked(int link_a, int link_b) const {
    return collision_allowed[static_cast<std::size_t>(link_a) * links.size() + link_b] != 0;
  }
  // Chain of actuated joints from the root to `link` (dof indices, root first).
  std::vector<int> joint_chain(int link) const;

  // Reflection across the hand's x = 0 plane: a right hand becomes a left hand.
  HandKinematics mirror() const;

  // Link-local tessellation of the collision primitives.
  geometry::TriangleMesh link_mesh(int link, int segments = 12) const;
};

struct HandLoadOptions {
  bool allow_any_dof = false;  // test mode for toy hands
};

HandKinematics load_hand(const std::filesystem::path& path, const HandLoadOptions& options = {});
HandKinematics parse_hand(const nlohmann::json& doc, const HandLoadOptions& options = {},
                          const std::string& source = "<memory>");

// Path of a description shipped in assets/hands.
std::filesystem::path bundled_hand_path(const std::string& file = "simple_hand_22.json");

Mat3 rotation_about(const Vec3& unit_axis, double angle);
Mat3 rpy_to_matrix(const Vec3& rpy);

}  // namespace bigrasp::hand
