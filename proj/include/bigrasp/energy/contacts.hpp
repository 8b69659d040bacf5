#pragma once

#include <vector>

#include <Eigen/Core>

#include "bigrasp/hand/forward_kinematics.hpp"
#include "bigrasp/object.hpp"

namespace bigrasp::energy {

using geometry::Vec3;

inline constexpr int kContactsPerHand = 4;

struct Contact {
  Vec3 point = Vec3::Zero();             // nearest object surface point
  Vec3 normal = Vec3::UnitZ();           // object outward normal there
  Vec3 anchor_position = Vec3::Zero();   // world position of the hand anchor
  double distance = 0.0;                 // signed anchor-to-object distance
  int anchor = -1;                       // index into HandKinematics::contact_anchors
  bool left = false;
  geometry::NearestPoint nearest;        // full query result, kept for gradients
};

// Four contacts per participating hand, left hand first.
struct ContactSet {
  std::vector<Contact> contacts;

  int size() const { return static_cast<int>(contacts.size()); }
  // Stacked normals c (3 per contact).
  Eigen::VectorXd stacked_normals() const;
};

// Picks, per hand, the kContactsPerHand candidate anchors closest to the
// object surface (by |signed distance|, ties by ascending anchor index).
ContactSet select_contacts(const hand::PosedHand& left, const hand::PosedHand& right, const ObjectModel& obj,
                           hand::HandMask mask = hand::HandMask::Both);

// Contacts of a single posed hand, in candidate order of closeness.
std::vector<Contact> select_hand_contacts(const hand::PosedHand& posed, const ObjectModel& obj, bool left,
                                          int count = kContactsPerHand);

using GraspMatrix = Eigen::Matrix<double, 6, Eigen::Dynamic>;

// G = [I ... I ; R_1 ... R_m] with R_j the cross-product matrix of
// (x_j - origin).
GraspMatrix grasp_matrix(const ContactSet& cs, const Vec3& origin = Vec3::Zero());

Eigen::Matrix3d skew(const Vec3& v);

struct ForceClosure {
  double e_fc = 0.0;   // ||G c||
  double e_vew = 0.0;  // det(G G^T + ridge I)^(-1/2)
};

ForceClosure force_closure_terms(const GraspMatrix& G, const ContactSet& cs, double ridge);

// Derivatives of both terms with respect to each contact position x_j, with
// the contact normals held fixed. Rows follow the contact order.
struct ForceClosureGradient {
  ForceClosure value;
  std::vector<Vec3> d_fc;
  std::vector<Vec3> d_vew;
};

ForceClosureGradient force_closure_gradient(const ContactSet& cs, const Vec3& origin, double ridge);

}  // namespace bigrasp::energy
