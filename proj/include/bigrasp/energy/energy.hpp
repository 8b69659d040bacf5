#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bigrasp/energy/contacts.hpp"
#include "bigrasp/hand/forward_kinematics.hpp"
#include "bigrasp/object.hpp"

namespace bigrasp::energy {

struct EnergyWeights {
  double w_dis = 1.0;
  double w_fc = 1.0;
  double w_vew = 0.01;
  double w_objpen = 500.0;
  double w_selfpen = 1e3;
  double w_bimpen = 1e3;
  double w_joint = 10.0;
  double delta = 0.002;    // penetration margin, m
  double epsilon = 0.001;  // anchor pairs closer than this (center to center) are skipped, m
  double ridge = 1e-8;     // lambda in det(G G^T + lambda I)

  void validate() const;
  EnergyWeights scaled(double k) const;
};

struct EnergyBreakdown {
  double dis = 0.0;
  double fc = 0.0;
  double vew = 0.0;
  double objpen = 0.0;
  double selfpen = 0.0;
  double bimpen = 0.0;
  double joint = 0.0;
  double total = 0.0;

  double score() const { return -total; }
};

struct Penetration {
  double objpen = 0.0;
  double selfpen = 0.0;
  double bimpen = 0.0;
};

// Identifies the smooth piece of the energy a configuration lies on: nearest
// features, active hinge sets, and selected contacts. Two configurations with
// equal signatures are connected by a region where the energy is smooth (to
// first order), which is what finite-difference checks need.
using EnergySignature = std::vector<std::int64_t>;

// Weighted grasp energy for one object and one hand pair. Construction
// precomputes per-link bounding spheres used to prune anchor pairs; the
// evaluation itself is a pure function and safe to call concurrently.
class GraspEnergy {
 public:
  GraspEnergy(ObjectModel obj, hand::HandPair hands, EnergyWeights weights,
              hand::HandMask mask = hand::HandMask::Both);

  EnergyBreakdown evaluate(const hand::BimanualGrasp& g) const { return evaluate(g, nullptr); }

  // `gradient` receives dE in the retract() tangent coordinates of both hands
  // (left block first); coordinates of an idle hand are zero.
  EnergyBreakdown evaluate(const hand::BimanualGrasp& g, Eigen::VectorXd* gradient,
                           EnergySignature* signature = nullptr) const;

  // Individual terms on already posed hands.
  double distance_term(const hand::PosedHand& left, const hand::PosedHand& right) const;
  Penetration penetration_terms(const hand::PosedHand& left, const hand::PosedHand& right) const;

  int tangent_dim() const { return 2 * hand::hand_tangent_dim(hands_.right.dof()); }
  const ObjectModel& object() const { return obj_; }
  const hand::HandPair& hands() const { return hands_; }
  const EnergyWeights& weights() const { return weights_; }
  hand::HandMask mask() const { return mask_; }

 private:
  struct LinkBound {
    Vec3 center = Vec3::Zero();  // link-local
    double radius = 0.0;         // covers every anchor sphere on the link
    std::vector<int> anchors;
  };

  double distance_impl(const hand::PosedHand& posed, const hand::HandKinematics& kin, hand::BodyGradient* bg,
                       double w, EnergySignature* sig) const;
  double objpen_impl(const hand::PosedHand& posed, const hand::HandKinematics& kin, hand::BodyGradient* bg, double w,
                     EnergySignature* sig) const;
  double pair_impl(const hand::PosedHand& a, const hand::HandKinematics& ka, int side_a, const hand::PosedHand& b,
                   const hand::HandKinematics& kb, int side_b, bool same_hand, hand::BodyGradient* ga,
                   hand::BodyGradient* gb, double w, EnergySignature* sig) const;
  void contact_impl(const hand::PosedHand& left, const hand::PosedHand& right, hand::BodyGradient* gl,
                      hand::BodyGradient* gr, EnergyBreakdown& out, EnergySignature* sig) const;

  ObjectModel obj_;
  hand::HandPair hands_;
  EnergyWeights weights_;
  hand::HandMask mask_;
  std::vector<LinkBound> bounds_[2];  // [0] left, [1] right
  std::vector<std::pair<int, int>> self_link_pairs_[2];
};

// Free-function forms of the individual terms.
double distance_energy(const hand::PosedHand& left, const hand::PosedHand& right, const ObjectModel& obj,
                       hand::HandMask mask = hand::HandMask::Both);
Penetration penetration_energies(const hand::PosedHand& left, const hand::PosedHand& right,
                                 const hand::HandPair& hands, const ObjectModel& obj, double delta,
                                 double epsilon = 0.001, hand::HandMask mask = hand::HandMask::Both);
EnergyBreakdown total_energy(const ObjectModel& obj, const hand::HandPair& hands, const hand::BimanualGrasp& g,
                             const EnergyWeights& w, hand::HandMask mask = hand::HandMask::Both);
Eigen::VectorXd energy_gradient(const ObjectModel& obj, const hand::HandPair& hands, const hand::BimanualGrasp& g,
                                const EnergyWeights& w, hand::HandMask mask = hand::HandMask::Both);

}  // namespace bigrasp::energy
