#include "bigrasp/hand/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <map>

#include "bigrasp/common/error.hpp"
#include "bigrasp/geometry/sampling.hpp"

#ifndef BIGRASP_ASSET_DIR
#define BIGRASP_ASSET_DIR "assets"
#endif

namespace bigrasp::hand {

using nlohmann::json;

Mat3 rotation_about(const Vec3& unit_axis, double angle) {
  return Eigen::AngleAxisd(angle, unit_axis).toRotationMatrix();
}

Mat3 rpy_to_matrix(const Vec3& rpy) {
  // URDF convention: fixed-axis roll (x), pitch (y), yaw (z).
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

int HandKinematics::dof() const {
  return static_cast<int>(std::count_if(joints.begin(), joints.end(), [](const Joint& j) { return !j.fixed; }));
}

Eigen::VectorXd HandKinematics::lower_limits() const {
  Eigen::VectorXd v(dof());
  for (const Joint& j : joints)
    if (!j.fixed) v[j.dof_index] = j.lower;
  return v;
}

Eigen::VectorXd HandKinematics::upper_limits() const {
  Eigen::VectorXd v(dof());
  for (const Joint& j : joints)
    if (!j.fixed) v[j.dof_index] = j.upper;
  return v;
}

Eigen::VectorXd HandKinematics::mid_limits() const { return 0.5 * (lower_limits() + upper_limits()); }

Eigen::VectorXd HandKinematics::pregrasp_pose() const {
  Eigen::VectorXd v(dof());
  for (const Joint& j : joints)
    if (!j.fixed) v[j.dof_index] = j.pregrasp;
  return v;
}

int HandKinematics::find_link(const std::string& link_name) const {
  for (std::size_t i = 0; i < links.size(); ++i)
    if (links[i].name == link_name) return static_cast<int>(i);
  return -1;
}

std::vector<int> HandKinematics::joint_chain(int link) const {
  std::vector<int> chain;
  for (int l = link; l >= 0; l = links[l].parent) {
    const int j = links[l].joint;
    if (j >= 0 && !joints[j].fixed) chain.push_back(joints[j].dof_index);
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

HandKinematics HandKinematics::mirror() const {
  const Mat3 m = Eigen::Vector3d(-1.0, 1.0, 1.0).asDiagonal();
  HandKinematics out = *this;
  out.mirrored = !mirrored;
  for (Joint& j : out.joints) {
    j.origin.rotation = m * j.origin.rotation * m;
    j.origin.translation = m * j.origin.translation;
    j.axis = -(m * j.axis);
  }
  for (Link& l : out.links) {
    for (Primitive& p : l.primitives) {
      p.a = m * p.a;
      p.b = m * p.b;
    }
    l.palmar_direction = m * l.palmar_direction;
  }
  auto flip = [&](OrientedPoint& p) {
    p.position = m * p.position;
    p.normal = m * p.normal;
  };
  for (OrientedPoint& p : out.contact_anchors) flip(p);
  for (OrientedPoint& p : out.surface_samples) flip(p);
  for (PenetrationAnchor& p : out.penetration_anchors) p.position = m * p.position;
  flip(out.palm);
  return out;
}

geometry::TriangleMesh HandKinematics::link_mesh(int link, int segments) const {
  geometry::TriangleMesh out;
  for (const Primitive& p : links[link].primitives) {
    geometry::TriangleMesh part;
    switch (p.kind) {
      case Primitive::Kind::Capsule: part = geometry::make_capsule(p.a, p.b, p.radius, segments); break;
      case Primitive::Kind::Sphere: part = geometry::make_capsule(p.a, p.a, p.radius, segments); break;
      case Primitive::Kind::Box:
        part = geometry::make_box(p.half_extents);
        for (Vec3& v : part.vertices) v += p.a;
        break;
    }
    const int offset = static_cast<int>(out.vertices.size());
    out.vertices.insert(out.vertices.end(), part.vertices.begin(), part.vertices.end());
    for (const geometry::Face& f : part.faces) out.faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
  }
  out.finalize();
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

Vec3 vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw Error(what + ": expected an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw Error(where + ": missing '" + key + "'");
  return j.at(key);
}

void generate_surface_samples(HandKinematics& hand, std::size_t count, std::uint64_t seed) {
  // Union of palmar-facing faces of every link's tessellation.
  geometry::TriangleMesh pool;
  std::vector<int> face_link;
  for (std::size_t l = 0; l < hand.links.size(); ++l) {
    const geometry::TriangleMesh m = hand.link_mesh(static_cast<int>(l), 16);
    const Vec3& dir = hand.links[l].palmar_direction;
    const int offset = static_cast<int>(pool.vertices.size());
    pool.vertices.insert(pool.vertices.end(), m.vertices.begin(), m.vertices.end());
    for (std::size_t f = 0; f < m.faces.size(); ++f) {
      if (dir.squaredNorm() > 0.0 && m.face_normals[f].dot(dir) <= 1e-9) continue;
      pool.faces.push_back({m.faces[f][0] + offset, m.faces[f][1] + offset, m.faces[f][2] + offset});
      face_link.push_back(static_cast<int>(l));
    }
  }
  pool.finalize();
  if (pool.faces.empty() || count == 0) return;
  std::vector<int> faces;
  const geometry::PointCloud cloud = geometry::sample_surface(pool, count, seed, &faces);
  hand.surface_samples.clear();
  for (Link& l : hand.links) l.sample_budget = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const int link = face_link[faces[i]];
    hand.surface_samples.push_back({link, cloud.points[i], cloud.normals[i]});
    ++hand.links[link].sample_budget;
  }
}

}  // namespace

HandKinematics parse_hand(const json& doc, const HandLoadOptions& options, const std::string& source) {
  try {
    if (doc.value("schema", std::string()) != "bigrasp-hand/1")
      throw Error(source + ": unsupported or missing schema (expected \"bigrasp-hand/1\")");
    HandKinematics hand;
    hand.name = doc.value("name", std::string("hand"));
    const std::string root_name = require(doc, "root", source).get<std::string>();

    struct RawLink {
      Link link;
      std::vector<OrientedPoint> contacts;
      std::vector<PenetrationAnchor> anchors;
    };
    std::vector<RawLink> raw;
    std::map<std::string, int> by_name;
    for (const json& jl : require(doc, "links", source)) {
      RawLink r;
      r.link.name = require(jl, "name", source + ": link").get<std::string>();
      const std::string where = source + ": link '" + r.link.name + "'";
      if (by_name.count(r.link.name)) throw Error(where + " defined twice");
      for (const json& jp : jl.value("primitives", json::array())) {
        Primitive p;
        const std::string type = require(jp, "type", where).get<std::string>();
        if (type == "capsule") {
          p.kind = Primitive::Kind::Capsule;
          p.a = vec3(require(jp, "a", where), where);
          p.b = vec3(require(jp, "b", where), where);
          p.radius = require(jp, "radius", where).get<double>();
        } else if (type == "sphere") {
          p.kind = Primitive::Kind::Sphere;
          p.a = vec3(require(jp, "center", where), where);
          p.radius = require(jp, "radius", where).get<double>();
        } else if (type == "box") {
          p.kind = Primitive::Kind::Box;
          p.a = vec3(require(jp, "center", where), where);
          p.half_extents = vec3(require(jp, "half_extents", where), where);
        } else {
          throw Error(where + ": unknown primitive type '" + type + "'");
        }
        r.link.primitives.push_back(p);
      }
      if (jl.contains("palmar_direction")) {
        r.link.palmar_direction = vec3(jl.at("palmar_direction"), where);
        if (r.link.palmar_direction.squaredNorm() > 0) r.link.palmar_direction.normalize();
      }
      for (const json& ja : jl.value("contact_anchors", json::array())) {
        const Vec3 n = vec3(require(ja, "normal", where), where);
        if (n.norm() < 1e-12) throw Error(where + ": zero contact-anchor normal");
        r.contacts.push_back({0, vec3(require(ja, "position", where), where), n.normalized()});
      }
      for (const json& ja : jl.value("penetration_anchors", json::array()))
        r.anchors.push_back({0, vec3(require(ja, "position", where), where), ja.value("radius", 0.0)});
      by_name[r.link.name] = static_cast<int>(raw.size());
      raw.push_back(std::move(r));
    }
    if (!by_name.count(root_name)) throw Error(source + ": root link '" + root_name + "' not defined");

    struct RawJoint {
      Joint joint;
      int parent = -1;
      int child = -1;
    };
    std::vector<RawJoint> raw_joints;
    std::vector<int> joint_of(raw.size(), -1);
    for (const json& jj : require(doc, "joints", source)) {
      RawJoint r;
      r.joint.name = require(jj, "name", source + ": joint").get<std::string>();
      const std::string where = source + ": joint '" + r.joint.name + "'";
      const std::string type = jj.value("type", std::string("revolute"));
      if (type != "revolute" && type != "fixed") throw Error(where + ": unsupported type '" + type + "'");
      r.joint.fixed = (type == "fixed");
      const std::string parent = require(jj, "parent", where).get<std::string>();
      const std::string child = require(jj, "child", where).get<std::string>();
      if (!by_name.count(parent)) throw Error(where + ": unknown parent link '" + parent + "'");
      if (!by_name.count(child)) throw Error(where + ": unknown child link '" + child + "'");
      r.parent = by_name[parent];
      r.child = by_name[child];
      if (child == root_name) throw Error(where + ": root link cannot be a joint child");
      if (joint_of[r.child] >= 0) throw Error(where + ": link '" + child + "' has more than one parent");
      joint_of[r.child] = static_cast<int>(raw_joints.size());
      Vec3 xyz = Vec3::Zero(), rpy = Vec3::Zero();
      if (jj.contains("origin")) {
        xyz = vec3(jj.at("origin").value("xyz", json::array({0, 0, 0})), where);
        rpy = vec3(jj.at("origin").value("rpy", json::array({0, 0, 0})), where);
      }
      r.joint.origin = {rpy_to_matrix(rpy), xyz};
      if (!r.joint.fixed) {
        const Vec3 axis = vec3(require(jj, "axis", where), where);
        if (axis.norm() < 1e-12) throw Error(where + ": zero joint axis");
        r.joint.axis = axis.normalized();
        r.joint.lower = require(jj, "lower", where).get<double>();
        r.joint.upper = require(jj, "upper", where).get<double>();
        if (!(r.joint.lower < r.joint.upper))
          throw Error(where + ": joint limits need lower < upper (got " + std::to_string(r.joint.lower) +
                      ", " + std::to_string(r.joint.upper) + ")");
        r.joint.pregrasp = jj.value("pregrasp", 0.5 * (r.joint.lower + r.joint.upper));
        if (r.joint.pregrasp < r.joint.lower || r.joint.pregrasp > r.joint.upper)
          throw Error(where + ": pregrasp angle outside the joint limits");
      }
      raw_joints.push_back(r);
    }

    // Cycle check: every parent walk must reach the root within |links| steps.
    const int root = by_name[root_name];
    for (std::size_t l = 0; l < raw.size(); ++l) {
      int cur = static_cast<int>(l);
      std::size_t steps = 0;
      while (cur != root) {
        if (joint_of[cur] < 0) throw Error(source + ": link '" + raw[l].link.name + "' is not connected to the root");
        cur = raw_joints[joint_of[cur]].parent;
        if (++steps > raw.size()) throw Error(source + ": cycle in link graph through '" + raw[l].link.name + "'");
      }
    }

    // Breadth-first order, children in declaration order.
    std::vector<int> order;
    std::deque<int> queue{root};
    while (!queue.empty()) {
      const int cur = queue.front();
      queue.pop_front();
      order.push_back(cur);
      for (const RawJoint& j : raw_joints)
        if (j.parent == cur) queue.push_back(j.child);
    }
    std::vector<int> new_index(raw.size());
    for (std::size_t i = 0; i < order.size(); ++i) new_index[order[i]] = static_cast<int>(i);

    int dof = 0;
    for (const RawJoint& rj : raw_joints) {
      Joint j = rj.joint;
      j.parent_link = new_index[rj.parent];
      j.child_link = new_index[rj.child];
      if (!j.fixed) j.dof_index = dof++;
      hand.joints.push_back(j);
    }
    for (int old : order) {
      Link l = raw[old].link;
      l.parent = old == root ? -1 : new_index[raw_joints[joint_of[old]].parent];
      l.joint = old == root ? -1 : joint_of[old];
      const int idx = static_cast<int>(hand.links.size());
      for (OrientedPoint c : raw[old].contacts) {
        c.link = idx;
        hand.contact_anchors.push_back(c);
      }
      for (PenetrationAnchor a : raw[old].anchors) {
        a.link = idx;
        hand.penetration_anchors.push_back(a);
      }
      if (raw[old].anchors.empty()) throw Error(source + ": link '" + l.name + "' has no penetration anchor");
      hand.links.push_back(std::move(l));
    }

    if (!options.allow_any_dof && dof != kHandDof)
      throw Error(source + ": expected " + std::to_string(kHandDof) + " actuated joints, found " + std::to_string(dof));
    if (dof < 1) throw Error(source + ": hand has no actuated joints");
    if (hand.contact_anchors.size() < 4) throw Error(source + ": need at least 4 contact anchors");

    const json& palm = require(doc, "palm", source);
    const int palm_link = hand.find_link(require(palm, "link", source + ": palm").get<std::string>());
    if (palm_link < 0) throw Error(source + ": palm link not defined");
    hand.palm = {palm_link, vec3(require(palm, "center", source + ": palm"), source),
                 vec3(require(palm, "normal", source + ": palm"), source).normalized()};

    const std::size_t n = hand.links.size();
    hand.collision_allowed.assign(n * n, 1);
    auto disable = [&](int a, int b) {
      hand.collision_allowed[a * n + b] = 0;
      hand.collision_allowed[b * n + a] = 0;
    };
    for (std::size_t l = 0; l < n; ++l) {
      disable(static_cast<int>(l), static_cast<int>(l));
      if (hand.links[l].parent >= 0) disable(static_cast<int>(l), hand.links[l].parent);
    }
    for (const json& pair : doc.value("ignore_pairs", json::array())) {
      const int a = hand.find_link(pair.at(0).get<std::string>());
      const int b = hand.find_link(pair.at(1).get<std::string>());
      if (a < 0 || b < 0) throw Error(source + ": ignore_pairs names an unknown link");
      disable(a, b);
    }

    generate_surface_samples(hand, doc.value("surface_samples", 2000u), doc.value("sample_seed", 1u));
    return hand;
  } catch (const json::exception& e) {
    throw Error(source + ": schema violation: " + e.what());
  }
}

HandKinematics load_hand(const std::filesystem::path& path, const HandLoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read hand description '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_hand(doc, options, path.string());
}

std::filesystem::path bundled_hand_path(const std::string& file) {
  if (const char* env = std::getenv("BIGRASP_ASSETS")) return std::filesystem::path(env) / "hands" / file;
  return std::filesystem::path(BIGRASP_ASSET_DIR) / "hands" / file;
}

}  // namespace bigrasp::hand
