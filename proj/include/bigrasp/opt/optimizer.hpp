#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bigrasp/energy/energy.hpp"
#include "bigrasp/opt/mala.hpp"

namespace bigrasp::opt {

struct OptimizerConfig {
  int steps = 10000;
  // Proposal noise std per block at the initial temperature; the Langevin
  // drift uses eta = step^2 / (2 * temperature).
  double step_translation = 0.0007;  // m
  double step_rotation = 0.004;      // rad
  double step_joint = 0.02;          // rad
  double temperature = 1.0;
  double annealing = 0.999;
  // Drift bound per coordinate, in units of that block's step size; 0 turns
  // the bound off.
  double drift_limit = 1.0;
  bool noise = true;
  std::uint64_t seed = 0;

  void validate() const;
  static OptimizerConfig refinement() {
    OptimizerConfig c;
    c.steps = 100;
    // a short, nearly greedy polish
    c.step_translation = 0.001;
    c.step_rotation = 0.005;
    c.temperature = 0.01;
    return c;
  }
};

struct OptTrace {
  std::vector<double> energy;   // state energy after each step
  std::vector<char> accepted;
  double initial_energy = 0.0;
  energy::EnergyBreakdown final;  // of the returned (best) state
  int accepted_count = 0;

  double acceptance_rate() const {
    return energy.empty() ? 0.0 : static_cast<double>(accepted_count) / static_cast<double>(energy.size());
  }
  void write_csv(std::ostream& out) const;
};

struct OptResult {
  hand::BimanualGrasp grasp;  // best state visited
  OptTrace trace;
};

// Per-coordinate drift coefficients eta for the tangent layout of both hands;
// coordinates of a hand excluded by `mask` get zero.
Eigen::VectorXd step_coefficients(const OptimizerConfig& cfg, int dof, hand::HandMask mask);

// Per-coordinate drift bounds (drift_limit times the block step size), or an
// empty vector when the bound is off.
Eigen::VectorXd drift_caps(const OptimizerConfig& cfg, int dof);

// Annealed MALA from `init`: tau_t = tau_0 * annealing^t, joints clamped to
// their limits after every accepted move.
OptResult optimize(const energy::GraspEnergy& energy, const hand::BimanualGrasp& init, const OptimizerConfig& cfg);

}  // namespace bigrasp::opt
