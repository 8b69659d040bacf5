#pragma once

#include <cstdint>
#include <vector>

#include "bigrasp/hand/configuration.hpp"
#include "bigrasp/object.hpp"

namespace bigrasp::init {

struct InitConfig {
  double hull_offset = 0.1;      // initial inflation of the convex hull, m
  double shrink_step = 0.005;    // hull shrink per iteration, m
  int max_iterations = 200;
  double rotation_jitter = 0.1;  // std of the random root rotation, rad
  double joint_jitter = 0.1;     // std around the pregrasp pose, rad
  double axis_jitter = 0.1;      // std of the left approach direction off antipodal, rad
  double stop_margin = 0.002;    // stop once an anchor would come within this distance, m
  std::uint64_t seed = 0;

  void validate() const;
};

// Where a hand approaches from: its palm starts at `start` on the inflated
// hull and moves toward the object along -direction.
struct Approach {
  geometry::Vec3 direction = geometry::Vec3::UnitX();  // unit, from centroid outward
  geometry::Vec3 start = geometry::Vec3::Zero();
  int iterations = 0;                      // shrink steps taken
  std::vector<double> min_anchor_distance; // per shrink iteration, before stopping
};

struct InitCandidate {
  hand::BimanualGrasp grasp;
  Approach left;
  Approach right;
};

// Places both hands antipodally on the inflated convex hull, palms facing the
// centroid, and shrinks each hand's hull toward the object until one of its
// penetration anchors would come within stop_margin. A hand excluded by
// `mask` is parked one meter beyond its hull point.
std::vector<InitCandidate> init_candidates(const ObjectModel& obj, const hand::HandPair& hands,
                                           const InitConfig& cfg, int count,
                                           hand::HandMask mask = hand::HandMask::Both, unsigned threads = 1);

std::vector<hand::BimanualGrasp> init_bimanual(const ObjectModel& obj, const hand::HandPair& hands,
                                               const InitConfig& cfg, int count,
                                               hand::HandMask mask = hand::HandMask::Both, unsigned threads = 1);

// Smallest signed distance between any penetration anchor sphere of a posed
// hand and the object surface.
double min_anchor_distance(const hand::HandKinematics& kin, const hand::HandConfiguration& cfg,
                           const ObjectModel& obj);

}  // namespace bigrasp::init
