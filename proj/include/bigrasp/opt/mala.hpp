#pragma once

#include <cmath>
#include <random>

#include <Eigen/Core>

#include "bigrasp/common/rng.hpp"

namespace bigrasp::opt {

template <class State>
struct MalaResult {
  State state;
  double energy = 0.0;
  Eigen::VectorXd gradient;
  bool accepted = false;
  double log_acceptance = 0.0;  // log of the Metropolis-Hastings ratio; -inf for rejected non-finite proposals
};

// Langevin drift -eta * grad. With a nonempty `cap`, each coordinate is
// clamped to [-cap_i, cap_i] (truncated MALA); the drift stays a fixed
// function of the state, so the Metropolis-Hastings correction is exact.
inline Eigen::VectorXd langevin_drift(const Eigen::VectorXd& grad, const Eigen::VectorXd& eta,
                                      const Eigen::VectorXd& cap = Eigen::VectorXd()) {
  Eigen::VectorXd d = -eta.cwiseProduct(grad);
  if (cap.size() == d.size()) d = d.cwiseMax(-cap).cwiseMin(cap);
  return d;
}

// Log acceptance ratio of a move from x to x' = retract(x, delta) with
// drifts mu_x at x and mu_y at x':
// (E(x) - E(x'))/tau + log q(x | x') - log q(x' | x), with
// q(x' | x) = N(delta; mu_x, 2 * eta * tau) per coordinate. The reverse move
// is taken as -delta in the tangent at x'. Coordinates with eta = 0 are frozen.
inline double mala_log_ratio_drift(double e_x, const Eigen::VectorXd& mu_x, double e_y, const Eigen::VectorXd& mu_y,
                                   const Eigen::VectorXd& delta, const Eigen::VectorXd& eta, double tau) {
  double log_fwd = 0.0;
  double log_rev = 0.0;
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    if (eta[i] <= 0.0) continue;
    const double f = delta[i] - mu_x[i];
    const double r = -delta[i] - mu_y[i];
    log_fwd -= f * f / (4.0 * eta[i] * tau);
    log_rev -= r * r / (4.0 * eta[i] * tau);
  }
  return (e_x - e_y) / tau + log_rev - log_fwd;
}

// Plain (untruncated) MALA ratio from the gradients at both ends.
inline double mala_log_ratio(double e_x, const Eigen::VectorXd& g_x, double e_y, const Eigen::VectorXd& g_y,
                             const Eigen::VectorXd& delta, const Eigen::VectorXd& eta, double tau) {
  return mala_log_ratio_drift(e_x, langevin_drift(g_x, eta), e_y, langevin_drift(g_y, eta), delta, eta, tau);
}

// One Metropolis-adjusted Langevin step. `eval(state, &grad)` returns the
// energy and fills the tangent gradient; `retract(state, delta)` applies a
// tangent step. With `noise` off (or tau <= 0) the move is a plain gradient
// step accepted iff it lowers the energy. `cap` bounds the drift per
// coordinate (empty: no bound).
template <class State, class Eval, class Retract>
MalaResult<State> mala_step(const State& x, double e_x, const Eigen::VectorXd& g_x, const Eval& eval,
                            const Retract& retract, const Eigen::VectorXd& eta, double tau, Rng& rng,
                            bool noise = true, const Eigen::VectorXd& cap = Eigen::VectorXd()) {
  const bool stochastic = noise && tau > 0.0;
  const Eigen::VectorXd mu_x = langevin_drift(g_x, eta, cap);
  Eigen::VectorXd delta = mu_x;
  if (stochastic) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index i = 0; i < delta.size(); ++i) {
      const double xi = normal(rng);
      if (eta[i] > 0.0) delta[i] += std::sqrt(2.0 * eta[i] * tau) * xi;
    }
  }

  MalaResult<State> out{x, e_x, g_x, false, 0.0};
  State y = retract(x, delta);
  Eigen::VectorXd g_y;
  const double e_y = eval(y, &g_y);
  if (!std::isfinite(e_y) || !g_y.allFinite()) {
    out.log_acceptance = -INFINITY;
    return out;
  }
  bool accept = false;
  if (stochastic) {
    out.log_acceptance = mala_log_ratio_drift(e_x, mu_x, e_y, langevin_drift(g_y, eta, cap), delta, eta, tau);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double draw = u(rng);
    accept = out.log_acceptance >= 0.0 || std::log(draw) < out.log_acceptance;
  } else {
    out.log_acceptance = e_y < e_x ? 0.0 : -INFINITY;
    accept = e_y < e_x;
  }
  if (accept) {
    out.state = std::move(y);
    out.energy = e_y;
    out.gradient = std::move(g_y);
    out.accepted = true;
  }
  return out;
}

}  // namespace bigrasp::opt
