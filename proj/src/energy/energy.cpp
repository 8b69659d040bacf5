#include "bigrasp/energy/energy.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "bigrasp/common/error.hpp"

namespace bigrasp::energy {

using hand::BodyGradient;
using hand::HandKinematics;
using hand::PosedHand;

namespace {

std::int64_t feature_key(const geometry::NearestPoint& np) {
  return (static_cast<std::int64_t>(np.face) << 4) | (static_cast<std::int64_t>(np.feature) << 2) |
         np.feature_index;
}

}  // namespace

void EnergyWeights::validate() const {
  const double ws[] = {w_dis, w_fc, w_vew, w_objpen, w_selfpen, w_bimpen, w_joint};
  for (double w : ws)
    if (!(w >= 0.0)) throw Error("energy weights must be nonnegative");
  if (!(delta >= 0.0)) throw Error("penetration margin delta must be nonnegative");
  if (!(epsilon >= 0.0)) throw Error("pair floor epsilon must be nonnegative");
  if (!(ridge > 0.0)) throw Error("ridge must be positive");
}

EnergyWeights EnergyWeights::scaled(double k) const {
  EnergyWeights out = *this;
  out.w_dis *= k;
  out.w_fc *= k;
  out.w_vew *= k;
  out.w_objpen *= k;
  out.w_selfpen *= k;
  out.w_bimpen *= k;
  out.w_joint *= k;
  return out;
}

GraspEnergy::GraspEnergy(ObjectModel obj, hand::HandPair hands, EnergyWeights weights, hand::HandMask mask)
    : obj_(std::move(obj)), hands_(std::move(hands)), weights_(weights), mask_(mask) {
  weights_.validate();
  if (hands_.left.dof() != hands_.right.dof()) throw Error("hand pair has mismatched joint counts");
  for (int side = 0; side < 2; ++side) {
    const HandKinematics& kin = hands_.side(side == 0);
    std::vector<LinkBound>& bounds = bounds_[side];
    bounds.assign(kin.links.size(), LinkBound{});
    for (std::size_t i = 0; i < kin.penetration_anchors.size(); ++i)
      bounds[kin.penetration_anchors[i].link].anchors.push_back(static_cast<int>(i));
    for (LinkBound& b : bounds) {
      if (b.anchors.empty()) continue;
      Vec3 c = Vec3::Zero();
      for (int i : b.anchors) c += kin.penetration_anchors[i].position;
      b.center = c / static_cast<double>(b.anchors.size());
      for (int i : b.anchors) {
        const hand::PenetrationAnchor& a = kin.penetration_anchors[i];
        b.radius = std::max(b.radius, (a.position - b.center).norm() + a.radius);
      }
    }
    const int n = static_cast<int>(kin.links.size());
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (kin.pair_checked(a, b)) self_link_pairs_[side].emplace_back(a, b);
  }
}

double GraspEnergy::distance_impl(const PosedHand& posed, const HandKinematics& kin, BodyGradient* bg, double w,
                                  EnergySignature* sig) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < posed.surface_points.size(); ++i) {
    const geometry::NearestPoint np = obj_.shape->query(posed.surface_points[i]);
    if (np.distance > 0.0) {
      sum += np.distance;
      if (bg) bg->add(kin.surface_samples[i].link, posed.surface_points[i], w * np.gradient);
      if (sig) sig->push_back(feature_key(np));
    } else if (sig) {
      sig->push_back(-1);
    }
  }
  return sum;
}

double GraspEnergy::objpen_impl(const PosedHand& posed, const HandKinematics& kin, BodyGradient* bg, double w,
                                EnergySignature* sig) const {
  const double delta = weights_.delta;
  double sum = 0.0;
  for (std::size_t i = 0; i < posed.anchor_points.size(); ++i) {
    const hand::PenetrationAnchor& a = kin.penetration_anchors[i];
    const geometry::NearestPoint np = obj_.shape->query(posed.anchor_points[i]);
    const double gap = delta - (np.distance - a.radius);
    if (gap > 0.0) {
      sum += gap;
      if (bg) bg->add(a.link, posed.anchor_points[i], -w * np.gradient);
      if (sig) sig->push_back(feature_key(np));
    } else if (sig) {
      sig->push_back(-1);
    }
  }
  return sum;
}

double GraspEnergy::pair_impl(const PosedHand& a, const HandKinematics& ka, int side_a, const PosedHand& b,
                              const HandKinematics& kb, int side_b, bool same_hand, BodyGradient* ga,
                              BodyGradient* gb, double w, EnergySignature* sig) const {
  const double delta = weights_.delta;
  const double eps = weights_.epsilon;
  const std::vector<LinkBound>& ba = bounds_[side_a];
  const std::vector<LinkBound>& bb = bounds_[side_b];
  double sum = 0.0;

  auto link_pair = [&](int la, int lb) {
    const LinkBound& u = ba[la];
    const LinkBound& v = bb[lb];
    if (u.anchors.empty() || v.anchors.empty()) return;
    const Vec3 cu = a.link_poses[la] * u.center;
    const Vec3 cv = b.link_poses[lb] * v.center;
    if ((cu - cv).norm() - u.radius - v.radius >= delta) return;
    for (int i : u.anchors) {
      const Vec3& p = a.anchor_points[i];
      const double rp = ka.penetration_anchors[i].radius;
      for (int j : v.anchors) {
        const Vec3& q = b.anchor_points[j];
        const Vec3 diff = p - q;
        const double len = diff.norm();
        if (len < eps) continue;
        const double gap = delta - (len - rp - kb.penetration_anchors[j].radius);
        if (gap <= 0.0) continue;
        sum += gap;
        if (ga) {
          const Vec3 dir = diff / len;
          ga->add(la, p, -w * dir);
          gb->add(lb, q, w * dir);
        }
        if (sig) sig->push_back((static_cast<std::int64_t>(i) << 20) | j);
      }
    }
  };

  if (same_hand) {
    for (const auto& [la, lb] : self_link_pairs_[side_a]) link_pair(la, lb);
  } else {
    for (std::size_t la = 0; la < ka.links.size(); ++la)
      for (std::size_t lb = 0; lb < kb.links.size(); ++lb) link_pair(static_cast<int>(la), static_cast<int>(lb));
  }
  if (sig) sig->push_back(-2);
  return sum;
}

void GraspEnergy::contact_impl(const PosedHand& left, const PosedHand& right, BodyGradient* gl, BodyGradient* gr,
                                 EnergyBreakdown& out, EnergySignature* sig) const {
  const ContactSet cs = select_contacts(left, right, obj_, mask_);
  if (sig) {
    for (const Contact& c : cs.contacts) {
      sig->push_back(c.anchor);
      sig->push_back(feature_key(c.nearest));
    }
  }
  if (!gl) {
    const ForceClosure fc = force_closure_terms(grasp_matrix(cs, obj_.centroid), cs, weights_.ridge);
    out.fc = fc.e_fc;
    out.vew = fc.e_vew;
    return;
  }
  const ForceClosureGradient fg = force_closure_gradient(cs, obj_.centroid, weights_.ridge);
  out.fc = fg.value.e_fc;
  out.vew = fg.value.e_vew;
  if (sig) sig->push_back(out.fc > 0.0 ? 1 : 0);
  for (int j = 0; j < cs.size(); ++j) {
    const Contact& c = cs.contacts[j];
    const Vec3 dx = weights_.w_fc * fg.d_fc[j] + weights_.w_vew * fg.d_vew[j];
    const geometry::Mat3 J = geometry::MeshDistance::closest_point_jacobian(c.nearest, obj_.mesh());
    const HandKinematics& kin = hands_.side(c.left);
    BodyGradient* bg = c.left ? gl : gr;
    bg->add(kin.contact_anchors[c.anchor].link, c.anchor_position, J.transpose() * dx);
  }
}

EnergyBreakdown GraspEnergy::evaluate(const hand::BimanualGrasp& g, Eigen::VectorXd* gradient,
                                      EnergySignature* sig) const {
  const bool use_l = hand::uses_left(mask_);
  const bool use_r = hand::uses_right(mask_);
  const HandKinematics& kl = hands_.left;
  const HandKinematics& kr = hands_.right;
  const PosedHand pl = use_l ? hand::forward_kinematics(kl, g.left) : PosedHand{};
  const PosedHand pr = use_r ? hand::forward_kinematics(kr, g.right) : PosedHand{};

  std::optional<BodyGradient> gl, gr;
  if (gradient) {
    gl.emplace(kl);
    gr.emplace(kr);
  }
  BodyGradient* bl = gradient ? &*gl : nullptr;
  BodyGradient* br = gradient ? &*gr : nullptr;
  const EnergyWeights& w = weights_;

  EnergyBreakdown out;
  if (use_l) {
    out.dis += distance_impl(pl, kl, bl, w.w_dis, sig);
    out.objpen += objpen_impl(pl, kl, bl, w.w_objpen, sig);
    out.selfpen += pair_impl(pl, kl, 0, pl, kl, 0, true, bl, bl, w.w_selfpen, sig);
  }
  if (use_r) {
    out.dis += distance_impl(pr, kr, br, w.w_dis, sig);
    out.objpen += objpen_impl(pr, kr, br, w.w_objpen, sig);
    out.selfpen += pair_impl(pr, kr, 1, pr, kr, 1, true, br, br, w.w_selfpen, sig);
  }
  if (use_l && use_r) out.bimpen = pair_impl(pl, kl, 0, pr, kr, 1, false, bl, br, w.w_bimpen, sig);
  contact_impl(pl, pr, bl, br, out, sig);

  const int nt = hand::hand_tangent_dim(kr.dof());
  if (gradient) gradient->setZero(2 * nt);
  auto joints = [&](const HandKinematics& kin, const hand::HandConfiguration& cfg, int offset) {
    const Eigen::VectorXd lo = kin.lower_limits();
    const Eigen::VectorXd hi = kin.upper_limits();
    for (int i = 0; i < kin.dof(); ++i) {
      const double th = cfg.joints[i];
      int state = 0;
      if (th > hi[i]) {
        out.joint += th - hi[i];
        state = 1;
      } else if (th < lo[i]) {
        out.joint += lo[i] - th;
        state = -1;
      }
      if (gradient) (*gradient)[offset + hand::kPoseDim + i] += w.w_joint * state;
      if (sig) sig->push_back(state);
    }
  };
  if (use_l) joints(kl, g.left, 0);
  if (use_r) joints(kr, g.right, nt);

  if (gradient) {
    if (use_l) gradient->segment(0, nt) += gl->tangent(kl, pl);
    if (use_r) gradient->segment(nt, nt) += gr->tangent(kr, pr);
  }

  out.total = w.w_dis * out.dis + w.w_fc * out.fc + w.w_vew * out.vew + w.w_objpen * out.objpen +
              w.w_selfpen * out.selfpen + w.w_bimpen * out.bimpen + w.w_joint * out.joint;
  return out;
}

double GraspEnergy::distance_term(const PosedHand& left, const PosedHand& right) const {
  double sum = 0.0;
  if (hand::uses_left(mask_)) sum += distance_impl(left, hands_.left, nullptr, 0.0, nullptr);
  if (hand::uses_right(mask_)) sum += distance_impl(right, hands_.right, nullptr, 0.0, nullptr);
  return sum;
}

Penetration GraspEnergy::penetration_terms(const PosedHand& left, const PosedHand& right) const {
  Penetration p;
  const bool use_l = hand::uses_left(mask_);
  const bool use_r = hand::uses_right(mask_);
  if (use_l) {
    p.objpen += objpen_impl(left, hands_.left, nullptr, 0.0, nullptr);
    p.selfpen += pair_impl(left, hands_.left, 0, left, hands_.left, 0, true, nullptr, nullptr, 0.0, nullptr);
  }
  if (use_r) {
    p.objpen += objpen_impl(right, hands_.right, nullptr, 0.0, nullptr);
    p.selfpen += pair_impl(right, hands_.right, 1, right, hands_.right, 1, true, nullptr, nullptr, 0.0, nullptr);
  }
  if (use_l && use_r)
    p.bimpen = pair_impl(left, hands_.left, 0, right, hands_.right, 1, false, nullptr, nullptr, 0.0, nullptr);
  return p;
}

double distance_energy(const PosedHand& left, const PosedHand& right, const ObjectModel& obj, hand::HandMask mask) {
  double sum = 0.0;
  auto add = [&](const PosedHand& p) {
    for (const Vec3& x : p.surface_points) sum += std::max(obj.shape->signed_distance(x), 0.0);
  };
  if (hand::uses_left(mask)) add(left);
  if (hand::uses_right(mask)) add(right);
  return sum;
}

Penetration penetration_energies(const PosedHand& left, const PosedHand& right, const hand::HandPair& hands,
                                 const ObjectModel& obj, double delta, double epsilon, hand::HandMask mask) {
  EnergyWeights w;
  w.delta = delta;
  w.epsilon = epsilon;
  return GraspEnergy(obj, hands, w, mask).penetration_terms(left, right);
}

EnergyBreakdown total_energy(const ObjectModel& obj, const hand::HandPair& hands, const hand::BimanualGrasp& g,
                             const EnergyWeights& w, hand::HandMask mask) {
  return GraspEnergy(obj, hands, w, mask).evaluate(g);
}

Eigen::VectorXd energy_gradient(const ObjectModel& obj, const hand::HandPair& hands, const hand::BimanualGrasp& g,
                                const EnergyWeights& w, hand::HandMask mask) {
  Eigen::VectorXd grad;
  GraspEnergy(obj, hands, w, mask).evaluate(g, &grad);
  return grad;
}

}  // namespace bigrasp::energy
