#include "bigrasp/opt/optimizer.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "bigrasp/common/error.hpp"

namespace bigrasp::opt {

void OptimizerConfig::validate() const {
  if (steps < 1) throw Error("optimizer: steps must be at least 1");
  if (!(step_translation > 0.0 && step_rotation > 0.0 && step_joint > 0.0))
    throw Error("optimizer: step sizes must be positive");
  if (!(temperature > 0.0)) throw Error("optimizer: temperature must be positive");
  if (!(annealing > 0.0 && annealing <= 1.0)) throw Error("optimizer: annealing factor must lie in (0, 1]");
  if (!(drift_limit >= 0.0)) throw Error("optimizer: drift_limit must be nonnegative");
}

void OptTrace::write_csv(std::ostream& out) const {
  out << "step,energy,accepted\n";
  for (std::size_t t = 0; t < energy.size(); ++t)
    out << fmt::format("{},{:.17g},{}\n", t, energy[t], accepted[t] ? 1 : 0);
}

Eigen::VectorXd step_coefficients(const OptimizerConfig& cfg, int dof, hand::HandMask mask) {
  const int n = hand::hand_tangent_dim(dof);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(2 * n);
  const double scale = 1.0 / (2.0 * cfg.temperature);
  for (int side = 0; side < 2; ++side) {
    if (side == 0 && !hand::uses_left(mask)) continue;
    if (side == 1 && !hand::uses_right(mask)) continue;
    const int o = side * n;
    eta.segment<3>(o).setConstant(cfg.step_translation * cfg.step_translation * scale);
    eta.segment<3>(o + 3).setConstant(cfg.step_rotation * cfg.step_rotation * scale);
    eta.segment(o + 6, dof).setConstant(cfg.step_joint * cfg.step_joint * scale);
  }
  return eta;
}

Eigen::VectorXd drift_caps(const OptimizerConfig& cfg, int dof) {
  if (cfg.drift_limit == 0.0) return {};
  const int n = hand::hand_tangent_dim(dof);
  Eigen::VectorXd cap(2 * n);
  for (int o = 0; o < 2 * n; o += n) {
    cap.segment<3>(o).setConstant(cfg.drift_limit * cfg.step_translation);
    cap.segment<3>(o + 3).setConstant(cfg.drift_limit * cfg.step_rotation);
    cap.segment(o + 6, dof).setConstant(cfg.drift_limit * cfg.step_joint);
  }
  return cap;
}

OptResult optimize(const energy::GraspEnergy& energy, const hand::BimanualGrasp& init, const OptimizerConfig& cfg) {
  cfg.validate();
  const hand::HandPair& hands = energy.hands();
  const Eigen::VectorXd eta = step_coefficients(cfg, hands.right.dof(), energy.mask());
  const Eigen::VectorXd cap = drift_caps(cfg, hands.right.dof());
  auto eval = [&](const hand::BimanualGrasp& g, Eigen::VectorXd* grad) { return energy.evaluate(g, grad).total; };
  auto retract = [](const hand::BimanualGrasp& g, const Eigen::VectorXd& d) { return hand::retract(g, d); };
  auto clamp = [&](hand::BimanualGrasp& g) {
    const hand::BimanualGrasp before = g;
    hand::clamp_to_limits(g.left, hands.left);
    hand::clamp_to_limits(g.right, hands.right);
    return before.left.joints != g.left.joints || before.right.joints != g.right.joints;
  };

  Rng rng = make_rng(cfg.seed, {0x3a1a});
  OptResult out;
  OptTrace& trace = out.trace;
  trace.energy.reserve(cfg.steps);
  trace.accepted.reserve(cfg.steps);

  hand::BimanualGrasp x = init;
  Eigen::VectorXd g;
  double e = eval(x, &g);
  trace.initial_energy = e;
  out.grasp = x;
  double best = e;

  double tau = cfg.temperature;
  for (int t = 0; t < cfg.steps; ++t) {
    MalaResult<hand::BimanualGrasp> step = mala_step(x, e, g, eval, retract, eta, tau, rng, cfg.noise, cap);
    if (step.accepted) {
      x = std::move(step.state);
      e = step.energy;
      g = std::move(step.gradient);
      if (clamp(x)) e = eval(x, &g);
      ++trace.accepted_count;
    }
    trace.energy.push_back(e);
    trace.accepted.push_back(step.accepted ? 1 : 0);
    if (e < best) {
      best = e;
      out.grasp = x;
    }
    tau *= cfg.annealing;
  }
  trace.final = energy.evaluate(out.grasp);
  return out;
}

}  // namespace bigrasp::opt
