#include "bigrasp/verify/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "bigrasp/common/error.hpp"
#include "bigrasp/common/rng.hpp"
#include "bigrasp/hand/forward_kinematics.hpp"

namespace bigrasp::verify {

using hand::HandKinematics;
using hand::PosedHand;

void VerifyConfig::validate() const {
  if (!(friction >= 0.0)) throw Error("verify: friction must be nonnegative");
  if (!(gravity >= 0.0)) throw Error("verify: gravity must be nonnegative");
  if (trials < 1) throw Error("verify: at least one trial is required");
  if (!(penetration_budget > 0.0)) throw Error("verify: penetration budget must be positive");
  if (cone_edges < 3) throw Error("verify: friction cone needs at least 3 edges");
  if (!(max_normal_force > 0.0)) throw Error("verify: max normal force must be positive");
  if (!(force_tolerance > 0.0 && torque_tolerance > 0.0)) throw Error("verify: tolerances must be positive");
  if (!(contact_margin >= 0.0)) throw Error("verify: contact margin must be nonnegative");
  if (max_iterations < 1) throw Error("verify: max_iterations must be at least 1");
}

std::string to_string(FailureCategory c) {
  switch (c) {
    case FailureCategory::None: return "none";
    case FailureCategory::HandObjectPenetration: return "hand-object-penetration";
    case FailureCategory::SelfPenetration: return "self-penetration";
    case FailureCategory::InterHandPenetration: return "inter-hand-penetration";
    case FailureCategory::NoContact: return "no-contact";
    case FailureCategory::WrenchInfeasible: return "wrench-infeasible";
  }
  return "none";
}

FailureCategory failure_category_from_string(const std::string& s) {
  for (FailureCategory c : {FailureCategory::None, FailureCategory::HandObjectPenetration,
                            FailureCategory::SelfPenetration, FailureCategory::InterHandPenetration,
                            FailureCategory::NoContact, FailureCategory::WrenchInfeasible})
    if (to_string(c) == s) return c;
  throw Error("unknown failure category '" + s + "'");
}

namespace {

double max_pair_overlap(const PosedHand& a, const HandKinematics& ka, const PosedHand& b, const HandKinematics& kb,
                        bool same_hand) {
  double best = 0.0;
  const std::size_t na = ka.penetration_anchors.size();
  const std::size_t nb = kb.penetration_anchors.size();
  for (std::size_t i = 0; i < na; ++i) {
    const hand::PenetrationAnchor& u = ka.penetration_anchors[i];
    for (std::size_t j = same_hand ? i + 1 : 0; j < nb; ++j) {
      const hand::PenetrationAnchor& v = kb.penetration_anchors[j];
      if (same_hand && !ka.pair_checked(u.link, v.link)) continue;
      const double overlap = u.radius + v.radius - (a.anchor_points[i] - b.anchor_points[j]).norm();
      best = std::max(best, overlap);
    }
  }
  return best;
}

double max_object_overlap(const PosedHand& p, const HandKinematics& k, const ObjectModel& obj) {
  double best = 0.0;
  for (std::size_t i = 0; i < p.anchor_points.size(); ++i)
    best = std::max(best, k.penetration_anchors[i].radius - obj.shape->signed_distance(p.anchor_points[i]));
  return best;
}

// Euclidean projection onto {a >= 0, sum(a) <= cap}.
void project_capped_simplex(Eigen::Ref<Eigen::VectorXd> v, double cap, std::vector<double>& scratch) {
  v = v.cwiseMax(0.0);
  if (v.sum() <= cap) return;
  scratch.assign(v.data(), v.data() + v.size());
  std::sort(scratch.begin(), scratch.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < scratch.size(); ++j) {
    cumulative += scratch[j];
    const double t = (cumulative - cap) / static_cast<double>(j + 1);
    if (scratch[j] - t > 0.0) theta = t;
  }
  v = (v.array() - theta).cwiseMax(0.0).matrix();
}

void tangent_basis(const Vec3& n, Vec3& t1, Vec3& t2) {
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  t1 = n.cross(helper).normalized();
  t2 = n.cross(t1);
}

}  // namespace

PenetrationDepths penetration_report(const ObjectModel& obj, const hand::BimanualGrasp& g,
                                     const hand::HandPair& hands, hand::HandMask mask) {
  PenetrationDepths out;
  const bool use_l = hand::uses_left(mask);
  const bool use_r = hand::uses_right(mask);
  const PosedHand pl = use_l ? hand::forward_kinematics(hands.left, g.left) : PosedHand{};
  const PosedHand pr = use_r ? hand::forward_kinematics(hands.right, g.right) : PosedHand{};
  if (use_l) {
    out.objpen = std::max(out.objpen, max_object_overlap(pl, hands.left, obj));
    out.selfpen = std::max(out.selfpen, max_pair_overlap(pl, hands.left, pl, hands.left, true));
  }
  if (use_r) {
    out.objpen = std::max(out.objpen, max_object_overlap(pr, hands.right, obj));
    out.selfpen = std::max(out.selfpen, max_pair_overlap(pr, hands.right, pr, hands.right, true));
  }
  if (use_l && use_r) out.interpen = max_pair_overlap(pl, hands.left, pr, hands.right, false);
  return out;
}

energy::ContactSet margin_contacts(const ObjectModel& obj, const hand::BimanualGrasp& g, const hand::HandPair& hands,
                                   double margin, hand::HandMask mask) {
  energy::ContactSet cs;
  auto collect = [&](const HandKinematics& kin, const hand::HandConfiguration& cfg, bool left) {
    const PosedHand posed = hand::forward_kinematics(kin, cfg);
    for (std::size_t i = 0; i < posed.contact_points.size(); ++i) {
      const geometry::NearestPoint np = obj.shape->query(posed.contact_points[i]);
      if (np.distance > margin) continue;
      energy::Contact c;
      c.point = np.point;
      c.normal = np.normal;
      c.anchor_position = posed.contact_points[i];
      c.distance = np.distance;
      c.anchor = static_cast<int>(i);
      c.left = left;
      c.nearest = np;
      cs.contacts.push_back(c);
    }
  };
  if (hand::uses_left(mask)) collect(hands.left, g.left, true);
  if (hand::uses_right(mask)) collect(hands.right, g.right, false);
  return cs;
}

WrenchResult wrench_feasibility(const ObjectModel& obj, const energy::ContactSet& contacts,
                                const Vec3& gravity_direction, const VerifyConfig& cfg) {
  WrenchResult out;
  const Vec3 weight = obj.mass() * cfg.gravity * gravity_direction;
  if (weight.norm() == 0.0) {
    out.feasible = true;
    return out;
  }
  const int m = contacts.size();
  if (m == 0) {
    out.force_residual = weight.norm();
    return out;
  }

  // Scaled so that the feasibility test is |A a + c| <= 1, with the force
  // rows in units of force_tolerance and the torque rows in torque_tolerance.
  const int k = cfg.cone_edges;
  const int n = m * k;
  Eigen::Matrix<double, 6, Eigen::Dynamic> A(6, n);
  for (int j = 0; j < m; ++j) {
    const energy::Contact& c = contacts.contacts[j];
    Vec3 t1, t2;
    tangent_basis(c.normal, t1, t2);
    const Vec3 lever = c.point - obj.centroid;
    for (int e = 0; e < k; ++e) {
      const double phi = 2.0 * std::numbers::pi * e / k;
      const Vec3 d = -c.normal + cfg.friction * (std::cos(phi) * t1 + std::sin(phi) * t2);
      A.block<3, 1>(0, j * k + e) = d / cfg.force_tolerance;
      A.block<3, 1>(3, j * k + e) = lever.cross(d) / cfg.torque_tolerance;
    }
  }
  Eigen::Matrix<double, 6, 1> c;
  c << weight / cfg.force_tolerance, Vec3::Zero();

  const Eigen::Matrix<double, 6, 6> AAt = A * A.transpose();
  const double lipschitz = Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>>(AAt).eigenvalues().maxCoeff();
  const double step = 1.0 / std::max(lipschitz, 1e-300);
  const double cap = cfg.max_normal_force;

  auto objective = [&](const Eigen::VectorXd& a, Eigen::Matrix<double, 6, 1>& r) {
    r = A * a + c;
    return 0.5 * r.squaredNorm();
  };

  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = a;
  Eigen::Matrix<double, 6, 1> r;
  std::vector<double> scratch;
  double f = objective(a, r);
  double t = 1.0;
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    if (f <= 0.5) break;
    if (it % 25 == 0) {
      // Frank-Wolfe gap: f(a) - gap is a lower bound on the optimum.
      const Eigen::VectorXd grad = A.transpose() * r;
      double gap = grad.dot(a);
      for (int j = 0; j < m; ++j) {
        const double g_min = grad.segment(j * k, k).minCoeff();
        if (g_min < 0.0) gap -= cap * g_min;
      }
      if (f - gap > 0.5) break;
    }
    Eigen::Matrix<double, 6, 1> ry = A * y + c;
    Eigen::VectorXd next = y - step * (A.transpose() * ry);
    for (int j = 0; j < m; ++j) project_capped_simplex(next.segment(j * k, k), cap, scratch);
    Eigen::Matrix<double, 6, 1> r_next;
    const double f_next = objective(next, r_next);
    if (f_next > f) {
      // Adaptive restart: drop momentum and take a plain projected step.
      t = 1.0;
      y = a;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = next + ((t - 1.0) / t_next) * (next - a);
    a = std::move(next);
    r = r_next;
    f = f_next;
    t = t_next;
  }
  out.iterations = it;
  out.feasible = f <= 0.5;
  out.force_residual = r.head<3>().norm() * cfg.force_tolerance;
  out.torque_residual = r.tail<3>().norm() * cfg.torque_tolerance;
  return out;
}

std::vector<Vec3> gravity_directions(int trials, std::uint64_t seed) {
  std::vector<Vec3> out;
  out.push_back(-Vec3::UnitZ());
  const int n = trials - 1;
  if (n <= 0) return out;
  Rng rng = make_rng(seed, {0x6a1});
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    out.push_back((q * Vec3(rad * std::cos(phi), rad * std::sin(phi), z)).normalized());
  }
  return out;
}

VerificationReport verify(const ObjectModel& obj, const hand::BimanualGrasp& g, const hand::HandPair& hands,
                          const VerifyConfig& cfg, hand::HandMask mask) {
  cfg.validate();
  VerificationReport rep;
  rep.penetration = penetration_report(obj, g, hands, mask);
  const PenetrationDepths& p = rep.penetration;
  if (p.total() > cfg.penetration_budget) {
    rep.category = FailureCategory::HandObjectPenetration;
    double worst = p.objpen;
    if (p.selfpen > worst) worst = p.selfpen, rep.category = FailureCategory::SelfPenetration;
    if (p.interpen > worst) rep.category = FailureCategory::InterHandPenetration;
    return rep;
  }

  const energy::ContactSet cs = margin_contacts(obj, g, hands, cfg.contact_margin, mask);
  for (const energy::Contact& c : cs.contacts) (c.left ? rep.contacts_left : rep.contacts_right)++;
  if ((hand::uses_left(mask) && rep.contacts_left == 0) || (hand::uses_right(mask) && rep.contacts_right == 0)) {
    rep.category = FailureCategory::NoContact;
    return rep;
  }

  bool all = true;
  for (const Vec3& dir : gravity_directions(cfg.trials, cfg.seed)) {
    TrialReport t;
    t.gravity_direction = dir;
    t.result = wrench_feasibility(obj, cs, dir, cfg);
    all = all && t.result.feasible;
    rep.trials.push_back(t);
  }
  rep.success = all;
  rep.category = all ? FailureCategory::None : FailureCategory::WrenchInfeasible;
  return rep;
}

}  // namespace bigrasp::verify
