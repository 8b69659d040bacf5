#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bigrasp/energy/contacts.hpp"
#include "bigrasp/hand/configuration.hpp"
#include "bigrasp/object.hpp"

namespace bigrasp::verify {

using geometry::Vec3;

struct VerifyConfig {
  double friction = 3.0;
  double gravity = 9.8;                // m / s^2
  int trials = 6;
  double penetration_budget = 0.0015;  // m, on the summed per-class maxima
  int cone_edges = 8;
  double max_normal_force = 20.0;      // N per contact
  double force_tolerance = 0.1;        // N
  double torque_tolerance = 0.01;      // N m
  double contact_margin = 0.005;       // m; anchors closer than this carry force
  int max_iterations = 20000;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class FailureCategory { None, HandObjectPenetration, SelfPenetration, InterHandPenetration, NoContact,
                             WrenchInfeasible };

std::string to_string(FailureCategory c);
FailureCategory failure_category_from_string(const std::string& s);

// Maximum overlap depth per class, in meters.
struct PenetrationDepths {
  double objpen = 0.0;
  double selfpen = 0.0;
  double interpen = 0.0;

  double total() const { return objpen + selfpen + interpen; }
  bool operator==(const PenetrationDepths&) const = default;
};

struct WrenchResult {
  bool feasible = false;
  double force_residual = 0.0;   // N
  double torque_residual = 0.0;  // N m
  int iterations = 0;
};

struct TrialReport {
  Vec3 gravity_direction = -Vec3::UnitZ();
  WrenchResult result;
};

struct VerificationReport {
  PenetrationDepths penetration;
  int contacts_left = 0;   // anchors within the contact margin
  int contacts_right = 0;
  std::vector<TrialReport> trials;  // empty when an earlier check failed
  bool success = false;
  FailureCategory category = FailureCategory::None;
};

PenetrationDepths penetration_report(const ObjectModel& obj, const hand::BimanualGrasp& g,
                                     const hand::HandPair& hands, hand::HandMask mask = hand::HandMask::Both);

// Every contact-candidate anchor within the margin, as a contact on the
// nearest object surface point.
energy::ContactSet margin_contacts(const ObjectModel& obj, const hand::BimanualGrasp& g, const hand::HandPair& hands,
                                   double margin, hand::HandMask mask = hand::HandMask::Both);

// Searches for friction-cone forces (k edges, capped normal force per contact)
// that balance the weight of `obj` pulling along `gravity_direction`.
// Torques are taken about the object centroid.
WrenchResult wrench_feasibility(const ObjectModel& obj, const energy::ContactSet& contacts,
                                const Vec3& gravity_direction, const VerifyConfig& cfg);

// Gravity directions of the trials: -z first, then a seeded rotation of a
// Fibonacci lattice on the sphere.
std::vector<Vec3> gravity_directions(int trials, std::uint64_t seed);

VerificationReport verify(const ObjectModel& obj, const hand::BimanualGrasp& g, const hand::HandPair& hands,
                          const VerifyConfig& cfg, hand::HandMask mask = hand::HandMask::Both);

}  // namespace bigrasp::verify
