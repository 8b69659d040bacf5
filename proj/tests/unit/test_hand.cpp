#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <json.hpp>

#include "bigrasp/common/error.hpp"
#include "bigrasp/hand/configuration.hpp"
#include "bigrasp/hand/forward_kinematics.hpp"
#include "bigrasp/hand/kinematics.hpp"

using namespace bigrasp;
using namespace bigrasp::hand;
using nlohmann::json;

namespace {

// Root link plus one child on a revolute joint about z at the origin; the
// child carries contact anchors at (1,0,0) and around it.
json swing_hand() {
  auto anchor = [](double x, double y, double z) {
    return json{{"position", {x, y, z}}, {"normal", {0, 1, 0}}};
  };
  json links = json::array();
  links.push_back({{"name", "base"},
                   {"primitives", {{{"type", "sphere"}, {"center", {0, 0, 0}}, {"radius", 0.01}}}},
                   {"penetration_anchors", {{{"position", {0, 0, 0}}, {"radius", 0.01}}}}});
  links.push_back({{"name", "arm"},
                   {"primitives", {{{"type", "capsule"}, {"a", {0, 0, 0}}, {"b", {1, 0, 0}}, {"radius", 0.01}}}},
                   {"penetration_anchors", {{{"position", {1, 0, 0}}, {"radius", 0.01}}}},
                   {"contact_anchors", {anchor(1, 0, 0), anchor(0.5, 0, 0), anchor(0.25, 0, 0), anchor(0.75, 0, 0)}}});
  json joints = json::array();
  joints.push_back({{"name", "swing"},
                    {"type", "revolute"},
                    {"parent", "base"},
                    {"child", "arm"},
                    {"origin", {{"xyz", {0, 0, 0}}, {"rpy", {0, 0, 0}}}},
                    {"axis", {0, 0, 1}},
                    {"lower", -2.0},
                    {"upper", 2.0}});
  return json{{"schema", "bigrasp-hand/1"},
              {"name", "swing"},
              {"root", "base"},
              {"surface_samples", 50},
              {"sample_seed", 1},
              {"palm", {{"link", "base"}, {"center", {0, 0, 0}}, {"normal", {0, 1, 0}}}},
              {"links", links},
              {"joints", joints}};
}

const HandKinematics& bundled() {
  static const HandKinematics h = load_hand(bundled_hand_path());
  return h;
}

Eigen::Quaterniond random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
}

HandConfiguration random_config(const HandKinematics& k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 0.3);
  HandConfiguration c;
  c.rotation = random_rotation(rng);
  c.translation = Vec3(n(rng), n(rng), n(rng));
  const Eigen::VectorXd lo = k.lower_limits();
  const Eigen::VectorXd hi = k.upper_limits();
  c.joints.resize(k.dof());
  for (int i = 0; i < k.dof(); ++i) c.joints[i] = lo[i] + u(rng) * (hi[i] - lo[i]);
  return c;
}

double max_point_error(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, (a[i] - b[i]).norm());
  return e;
}

}  // namespace

TEST_CASE("bundled hand contract") {
  const HandKinematics& h = bundled();
  CHECK(h.dof() == 22);
  CHECK(h.surface_samples.size() == 2000);
  int fingertips = 0;
  for (std::size_t l = 0; l < h.links.size(); ++l) {
    int n = 0;
    for (const OrientedPoint& a : h.contact_anchors) n += a.link == static_cast<int>(l);
    if (h.links[l].name.find("distal") != std::string::npos) {
      CHECK(n == 5);
      ++fingertips;
    }
  }
  CHECK(fingertips == 5);
  const Eigen::VectorXd lo = h.lower_limits();
  const Eigen::VectorXd hi = h.upper_limits();
  CHECK((hi - lo).minCoeff() > 0.0);
  const Eigen::VectorXd pre = h.pregrasp_pose();
  CHECK((pre - lo).minCoeff() >= 0.0);
  CHECK((hi - pre).minCoeff() >= 0.0);
}

TEST_CASE("toy pincer needs test mode") {
  const auto path = bundled_hand_path("toy_pincer.json");
  CHECK_THROWS_WITH_AS(load_hand(path), doctest::Contains("actuated joints"), Error);
  HandLoadOptions opts;
  opts.allow_any_dof = true;
  const HandKinematics toy = load_hand(path, opts);
  CHECK(toy.dof() == 2);
}

TEST_CASE("hand validation errors") {
  HandLoadOptions opts;
  opts.allow_any_dof = true;
  CHECK_NOTHROW(parse_hand(swing_hand(), opts));

  json equal_limits = swing_hand();
  equal_limits["joints"][0]["upper"] = -2.0;
  CHECK_THROWS_WITH_AS(parse_hand(equal_limits, opts), doctest::Contains("lower < upper"), Error);

  json unknown_child = swing_hand();
  unknown_child["joints"][0]["child"] = "nowhere";
  CHECK_THROWS_AS(parse_hand(unknown_child, opts), Error);

  json cycle = swing_hand();
  cycle["joints"].push_back(cycle["joints"][0]);
  cycle["joints"][1]["name"] = "back";
  cycle["joints"][1]["parent"] = "arm";
  cycle["joints"][1]["child"] = "base";
  CHECK_THROWS_AS(parse_hand(cycle, opts), Error);

  json no_anchor = swing_hand();
  no_anchor["links"][1].erase("penetration_anchors");
  CHECK_THROWS_AS(parse_hand(no_anchor, opts), Error);

  json bad_schema = swing_hand();
  bad_schema["schema"] = "urdf";
  CHECK_THROWS_AS(parse_hand(bad_schema, opts), Error);
}

TEST_CASE("forward kinematics: analytic cases") {
  HandLoadOptions opts;
  opts.allow_any_dof = true;
  const HandKinematics k = parse_hand(swing_hand(), opts);
  HandConfiguration c = HandConfiguration::neutral(1);
  PosedHand p = forward_kinematics(k, c);
  CHECK((p.contact_points[0] - Vec3(1, 0, 0)).norm() < 1e-15);

  c.joints[0] = std::numbers::pi / 2;
  p = forward_kinematics(k, c);
  CHECK((p.contact_points[0] - Vec3(0, 1, 0)).norm() < 1e-12);
  CHECK((p.contact_normals[0] - Vec3(-1, 0, 0)).norm() < 1e-12);

  // zero angles, identity root: link frames are the description's joint origins
  const HandKinematics toy = load_hand(bundled_hand_path("toy_pincer.json"), opts);
  const PosedHand tp = forward_kinematics(toy, HandConfiguration::neutral(2));
  const int lf = toy.find_link("left_finger");
  const int rf = toy.find_link("right_finger");
  REQUIRE(lf >= 0);
  REQUIRE(rf >= 0);
  CHECK((tp.link_poses[lf].translation - Vec3(-0.03, 0, 0.04)).norm() < 1e-15);
  CHECK((tp.link_poses[rf].translation - Vec3(0.03, 0, 0.04)).norm() < 1e-15);
  CHECK(tp.link_poses[lf].rotation.isIdentity(1e-15));
}

TEST_CASE("forward kinematics: root equivariance") {
  const HandKinematics& h = bundled();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const HandConfiguration c = random_config(h, rng);
    const PosedHand base = forward_kinematics(h, c);

    HandConfiguration shifted = c;
    const Vec3 t(0.3, -0.7, 1.1);
    shifted.translation += t;
    const PosedHand moved = forward_kinematics(h, shifted);
    double worst = 0.0;
    for (std::size_t i = 0; i < base.surface_points.size(); ++i)
      worst = std::max(worst, (moved.surface_points[i] - (base.surface_points[i] + t)).norm());
    CHECK(worst < 1e-15);

    const Pose T{random_rotation(rng).toRotationMatrix(), Vec3(0.1, 0.2, -0.3)};
    const PosedHand tp = forward_kinematics(h, transformed(c, T));
    std::vector<Vec3> expect;
    for (const Vec3& q : base.surface_points) expect.push_back(T * q);
    CHECK(max_point_error(tp.surface_points, expect) < 1e-9);
    expect.clear();
    for (const Vec3& q : base.anchor_points) expect.push_back(T * q);
    CHECK(max_point_error(tp.anchor_points, expect) < 1e-9);
  }
}

TEST_CASE("posed body sets match the description") {
  const HandKinematics& h = bundled();
  const PosedHand p = forward_kinematics(h, HandConfiguration::neutral(h.dof()));
  CHECK(p.surface_points.size() == h.surface_samples.size());
  CHECK(p.anchor_points.size() == h.penetration_anchors.size());
  CHECK(p.contact_points.size() == h.contact_anchors.size());
  for (const Vec3& n : p.contact_normals) CHECK(std::abs(n.norm() - 1.0) < 1e-12);
  for (const Vec3& n : p.surface_normals) CHECK(std::abs(n.norm() - 1.0) < 1e-12);
}

TEST_CASE("mirrored left hand is the reflection of the right hand") {
  const HandKinematics& right = bundled();
  const HandKinematics left = right.mirror();
  CHECK(left.mirrored);
  CHECK(left.dof() == right.dof());
  std::mt19937_64 rng(9);
  const HandConfiguration c = random_config(right, rng);
  HandConfiguration local = c;
  local.rotation = Eigen::Quaterniond::Identity();
  local.translation.setZero();
  const PosedHand pr = forward_kinematics(right, local);
  const PosedHand pl = forward_kinematics(left, local);
  const Eigen::Vector3d flip(-1, 1, 1);
  std::vector<Vec3> expect;
  for (const Vec3& q : pr.anchor_points) expect.push_back(flip.asDiagonal() * q);
  CHECK(max_point_error(pl.anchor_points, expect) < 1e-12);
  expect.clear();
  for (const Vec3& q : pr.contact_points) expect.push_back(flip.asDiagonal() * q);
  CHECK(max_point_error(pl.contact_points, expect) < 1e-12);
  expect.clear();
  for (const Vec3& q : pr.contact_normals) expect.push_back(flip.asDiagonal() * q);
  CHECK(max_point_error(pl.contact_normals, expect) < 1e-12);
}

TEST_CASE("joint violation") {
  const HandKinematics& h = bundled();
  const Eigen::VectorXd lo = h.lower_limits();
  const Eigen::VectorXd hi = h.upper_limits();
  HandConfiguration c = HandConfiguration::neutral(h.dof());
  c.joints = h.mid_limits();
  CHECK(joint_violation(h, c).isZero(0.0));

  c.joints[3] = hi[3] + 0.1;
  Eigen::VectorXd v = joint_violation(h, c);
  CHECK(v[3] == doctest::Approx(0.1).epsilon(1e-12));
  v[3] = 0.0;
  CHECK(v.isZero(0.0));

  c.joints = h.mid_limits();
  c.joints[5] = lo[5] - 0.05;
  v = joint_violation(h, c);
  CHECK(v[5] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(v.minCoeff() >= 0.0);
}

TEST_CASE("flatten and unflatten") {
  const HandKinematics& h = bundled();
  BimanualGrasp zero{HandConfiguration::neutral(22), HandConfiguration::neutral(22)};
  const Eigen::VectorXd z = flatten(zero);
  CHECK(z.size() == 56);
  CHECK(z.isZero(0.0));

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    BimanualGrasp g{random_config(h, rng), random_config(h, rng)};
    const BimanualGrasp back = unflatten(flatten(g), h);
    for (const auto& [a, b] : {std::pair{&g.left, &back.left}, std::pair{&g.right, &back.right}}) {
      CHECK((a->rotation.toRotationMatrix() - b->rotation.toRotationMatrix()).norm() < 1e-9);
      CHECK((a->translation - b->translation).norm() == 0.0);
      CHECK((a->joints - b->joints).norm() == 0.0);
    }
  }

  // axis-angle beyond pi maps to the equivalent rotation with norm <= pi
  Eigen::VectorXd v = Eigen::VectorXd::Zero(56);
  const double angle = std::numbers::pi + 0.1;
  v.segment<3>(3) = angle * Vec3(0, 0, 1);
  const BimanualGrasp g = unflatten(v, h);
  const Eigen::VectorXd again = flatten(g);
  CHECK(again.segment<3>(3).norm() <= std::numbers::pi + 1e-12);
  CHECK((axis_angle_to_quaternion(again.segment<3>(3)).toRotationMatrix() -
         Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix())
            .norm() < 1e-12);

  Eigen::VectorXd bad = Eigen::VectorXd::Zero(56);
  bad[10] = std::nan("");
  CHECK_THROWS_AS(unflatten(bad, h), Error);
}

TEST_CASE("link meshes follow the primitives") {
  HandLoadOptions opts;
  opts.allow_any_dof = true;
  const HandKinematics k = parse_hand(swing_hand(), opts);
  const geometry::TriangleMesh arm = k.link_mesh(k.find_link("arm"));
  double far = 0.0;
  for (const Vec3& v : arm.vertices) far = std::max(far, v.x());
  CHECK(far == doctest::Approx(1.01).epsilon(1e-9));
}
