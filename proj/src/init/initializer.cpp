#include "bigrasp/init/initializer.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "bigrasp/common/error.hpp"
#include "bigrasp/common/parallel.hpp"
#include "bigrasp/common/rng.hpp"
#include "bigrasp/geometry/hull.hpp"
#include "bigrasp/hand/forward_kinematics.hpp"

namespace bigrasp::init {

using geometry::Vec3;
using hand::HandConfiguration;
using hand::HandKinematics;

void InitConfig::validate() const {
  if (!(hull_offset > 0.0)) throw Error("init: hull_offset must be positive");
  if (!(shrink_step > 0.0)) throw Error("init: shrink_step must be positive");
  if (max_iterations < 1) throw Error("init: max_iterations must be at least 1");
  if (rotation_jitter < 0.0 || joint_jitter < 0.0 || axis_jitter < 0.0)
    throw Error("init: jitter values must be nonnegative");
  if (stop_margin < 0.0) throw Error("init: stop_margin must be nonnegative");
}

double min_anchor_distance(const HandKinematics& kin, const HandConfiguration& cfg, const ObjectModel& obj) {
  const hand::PosedHand posed = hand::forward_kinematics(kin, cfg);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < posed.anchor_points.size(); ++i)
    best = std::min(best, obj.shape->signed_distance(posed.anchor_points[i]) - kin.penetration_anchors[i].radius);
  return best;
}

namespace {

// Distance from `origin` (inside the hull) to the hull boundary along `dir`.
double ray_exit(const geometry::TriangleMesh& hull, const Vec3& origin, const Vec3& dir) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < hull.faces.size(); ++f) {
    const Vec3& n = hull.face_normals[f];
    const double dn = n.dot(dir);
    if (dn <= 1e-12) continue;
    const double s = n.dot(hull.vertices[hull.faces[f][0]] - origin) / dn;
    best = std::min(best, s);
  }
  if (!std::isfinite(best) || best < 0.0) throw Error("init: approach ray does not leave the hull");
  return best;
}

Vec3 random_unit(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    const Vec3 v(n(rng), n(rng), n(rng));
    const double len = v.norm();
    if (len > 1e-9) return v / len;
  }
}

Eigen::Quaterniond random_rotation_jitter(Rng& rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  const Vec3 w(n(rng), n(rng), n(rng));
  return hand::axis_angle_to_quaternion(w);
}

struct Placement {
  HandConfiguration cfg;
  Approach approach;
};

Placement place_hand(const ObjectModel& obj, const HandKinematics& kin, const geometry::TriangleMesh& hull,
                     const Vec3& dir, const InitConfig& cfg, Rng& rng, bool active) {
  Placement out;
  out.approach.direction = dir;
  const Vec3& c = obj.centroid;
  const double s0 = ray_exit(hull, c, dir);
  const Vec3 palm_target = c + (active ? s0 : s0 + 1.0) * dir;
  out.approach.start = palm_target;

  // Palm normal onto -dir, then a random roll about the approach axis.
  std::uniform_real_distribution<double> roll(0.0, 2.0 * std::numbers::pi);
  const Eigen::Quaterniond align = Eigen::Quaterniond::FromTwoVectors(kin.palm.normal, -dir);
  const Eigen::Quaterniond base = Eigen::Quaterniond(Eigen::AngleAxisd(roll(rng), -dir)) * align;
  Eigen::Quaterniond rot = base;
  for (int attempt = 0; attempt < 16 && cfg.rotation_jitter > 0.0; ++attempt) {
    const Eigen::Quaterniond trial = (random_rotation_jitter(rng, cfg.rotation_jitter) * base).normalized();
    if ((trial * kin.palm.normal).dot(-dir) > 0.0) {
      rot = trial;
      break;
    }
  }

  HandConfiguration h;
  h.rotation = rot.normalized();
  h.joints = kin.pregrasp_pose();
  if (cfg.joint_jitter > 0.0) {
    std::normal_distribution<double> jn(0.0, cfg.joint_jitter);
    for (int i = 0; i < h.joints.size(); ++i) h.joints[i] += jn(rng);
  }
  hand::clamp_to_limits(h, kin);
  h.translation = palm_target - h.rotation * kin.palm.position;
  if (!active) {
    out.cfg = h;
    return out;
  }

  // If the starting pose already intrudes (thin or concave objects), back off
  // along the approach direction first.
  const Vec3 step = cfg.shrink_step * dir;
  double d = min_anchor_distance(kin, h, obj);
  for (int back = 0; d <= cfg.stop_margin && back < cfg.max_iterations; ++back) {
    h.translation += step;
    d = min_anchor_distance(kin, h, obj);
  }
  out.approach.min_anchor_distance.push_back(d);
  for (int k = 0; k < cfg.max_iterations; ++k) {
    HandConfiguration next = h;
    next.translation -= step;
    const double dn = min_anchor_distance(kin, next, obj);
    if (dn <= cfg.stop_margin) break;
    h = next;
    out.approach.iterations = k + 1;
    out.approach.min_anchor_distance.push_back(dn);
  }
  out.cfg = h;
  return out;
}

}  // namespace

std::vector<InitCandidate> init_candidates(const ObjectModel& obj, const hand::HandPair& hands, const InitConfig& cfg,
                                           int count, hand::HandMask mask, unsigned threads) {
  cfg.validate();
  if (count < 1) throw Error("init: candidate count must be at least 1");
  const geometry::TriangleMesh hull = geometry::inflated_convex_hull(obj.mesh(), cfg.hull_offset);

  std::vector<InitCandidate> out(count);
  parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
    Rng rng = make_rng(cfg.seed, {0x1417, i});
    const Vec3 axis = random_unit(rng);
    Vec3 left_dir = -axis;
    if (cfg.axis_jitter > 0.0) {
      Vec3 perp = random_unit(rng);
      perp = (perp - perp.dot(left_dir) * left_dir).normalized();
      std::normal_distribution<double> an(0.0, cfg.axis_jitter);
      left_dir = Eigen::AngleAxisd(an(rng), perp) * left_dir;
    }
    Rng rng_r = make_rng(cfg.seed, {0x1417, i, 1});
    Rng rng_l = make_rng(cfg.seed, {0x1417, i, 0});
    const Placement r = place_hand(obj, hands.right, hull, axis, cfg, rng_r, hand::uses_right(mask));
    const Placement l = place_hand(obj, hands.left, hull, left_dir.normalized(), cfg, rng_l, hand::uses_left(mask));
    out[i].grasp = {l.cfg, r.cfg};
    out[i].left = l.approach;
    out[i].right = r.approach;
  });
  return out;
}

std::vector<hand::BimanualGrasp> init_bimanual(const ObjectModel& obj, const hand::HandPair& hands,
                                               const InitConfig& cfg, int count, hand::HandMask mask,
                                               unsigned threads) {
  std::vector<InitCandidate> c = init_candidates(obj, hands, cfg, count, mask, threads);
  std::vector<hand::BimanualGrasp> out;
  out.reserve(c.size());
  for (InitCandidate& x : c) out.push_back(std::move(x.grasp));
  return out;
}

}  // namespace bigrasp::init
