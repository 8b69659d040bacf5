#include <doctest.h>

#include <cmath>

#include "bigrasp/hand/kinematics.hpp"
#include "bigrasp/init/initializer.hpp"
#include "bigrasp/opt/optimizer.hpp"

using namespace bigrasp;
using Eigen::VectorXd;

namespace {

// E = 0.5 * |x|^2 in any dimension.
double quadratic(const VectorXd& x, VectorXd* g) {
  if (g) *g = x;
  return 0.5 * x.squaredNorm();
}

VectorXd add(const VectorXd& x, const VectorXd& d) { return x + d; }

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

const hand::HandPair& hands() {
  static const hand::HandPair p = hand::HandPair::from_right(hand::load_hand(hand::bundled_hand_path()));
  return p;
}

hand::BimanualGrasp start(const ObjectModel& obj, std::uint64_t seed, hand::HandMask mask = hand::HandMask::Both) {
  init::InitConfig cfg;
  cfg.seed = seed;
  return init::init_bimanual(obj, hands(), cfg, 1, mask).front();
}

}  // namespace

TEST_CASE("drift on a quadratic is -eta x") {
  const VectorXd x = vec({0.3, -1.2, 2.0});
  const VectorXd eta = vec({0.1, 0.01, 0.5});
  VectorXd g;
  quadratic(x, &g);
  const VectorXd d = opt::langevin_drift(g, eta);
  for (int i = 0; i < 3; ++i) CHECK(d[i] == doctest::Approx(-eta[i] * x[i]).epsilon(1e-15));
}

TEST_CASE("truncated drift clamps each coordinate") {
  const VectorXd d = opt::langevin_drift(vec({100.0, -100.0, 1.0}), vec({1.0, 1.0, 1.0}), vec({0.5, 0.2, 5.0}));
  CHECK(d[0] == -0.5);
  CHECK(d[1] == 0.2);
  CHECK(d[2] == -1.0);
  // a cap of the wrong size means no cap
  CHECK(opt::langevin_drift(vec({100.0}), vec({1.0}), VectorXd())[0] == -100.0);
}

TEST_CASE("acceptance ratio matches a hand computation") {
  // E = x^2, x = 1 -> y = 0.7, eta = 0.1, tau = 0.5.
  // forward residual -0.3 + 0.2 = -0.1, reverse residual 0.3 + 0.14 = 0.44,
  // variance term 4 eta tau = 0.2:
  // (1 - 0.49) / 0.5 - 0.44^2 / 0.2 + 0.1^2 / 0.2 = 1.02 - 0.968 + 0.05 = 0.102
  const double r = opt::mala_log_ratio(1.0, vec({2.0}), 0.49, vec({1.4}), vec({-0.3}), vec({0.1}), 0.5);
  CHECK(std::abs(r - 0.102) < 1e-12);

  // frozen coordinates contribute nothing
  const double r2 = opt::mala_log_ratio(1.0, vec({2.0, 7.0}), 0.49, vec({1.4, -3.0}), vec({-0.3, 0.0}),
                                         vec({0.1, 0.0}), 0.5);
  CHECK(std::abs(r2 - 0.102) < 1e-12);
}

TEST_CASE("without noise a move is accepted iff it lowers the energy") {
  Rng rng = make_rng(1);
  const VectorXd x = vec({1.0, -0.5});
  VectorXd g;
  const double e = quadratic(x, &g);

  const auto down = opt::mala_step(x, e, g, quadratic, add, vec({0.3, 0.3}), 1.0, rng, false);
  CHECK(down.accepted);
  CHECK(down.energy < e);
  CHECK((down.state - 0.7 * x).norm() < 1e-15);

  // eta = 2.5 overshoots to -1.5 x
  const auto up = opt::mala_step(x, e, g, quadratic, add, vec({2.5, 2.5}), 1.0, rng, false);
  CHECK_FALSE(up.accepted);
  CHECK(up.state == x);
  CHECK(up.energy == e);

  // tau = 0 behaves the same even with noise on
  const auto cold = opt::mala_step(x, e, g, quadratic, add, vec({2.5, 2.5}), 0.0, rng, true);
  CHECK_FALSE(cold.accepted);
}

TEST_CASE("non-finite proposals are rejected") {
  Rng rng = make_rng(2);
  auto bad = [](const VectorXd&, VectorXd* g) {
    if (g) *g = VectorXd::Zero(1);
    return NAN;
  };
  const auto r = opt::mala_step(vec({0.0}), 0.0, vec({0.0}), bad, add, vec({0.1}), 1.0, rng);
  CHECK_FALSE(r.accepted);
  CHECK(std::isinf(r.log_acceptance));
}

TEST_CASE("chain samples exp(-E / tau) with and without truncation") {
  // Target N(0, tau) for E = x^2 / 2. Monte Carlo moments over 200k steps.
  for (bool truncated : {false, true}) {
    CAPTURE(truncated);
    const double tau = 0.5;
    const VectorXd eta = vec({0.4});
    const VectorXd cap = truncated ? vec({0.05}) : VectorXd();
    Rng rng = make_rng(11, {truncated ? 1u : 0u});
    VectorXd x = vec({3.0});
    VectorXd g;
    double e = quadratic(x, &g);
    double sum = 0.0, sum2 = 0.0;
    int accepted = 0;
    const int burn = 2000, n = 200000;
    for (int t = 0; t < burn + n; ++t) {
      auto s = opt::mala_step(x, e, g, quadratic, add, eta, tau, rng, true, cap);
      if (s.accepted) {
        x = s.state;
        e = s.energy;
        g = s.gradient;
        ++accepted;
      }
      if (t >= burn) {
        sum += x[0];
        sum2 += x[0] * x[0];
      }
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.03);
    CHECK(var == doctest::Approx(tau).epsilon(0.05));
    CHECK(accepted > n / 2);
  }
}

TEST_CASE("step coefficients and caps follow the block layout") {
  opt::OptimizerConfig cfg;
  cfg.temperature = 2.0;
  const VectorXd eta = opt::step_coefficients(cfg, 22, hand::HandMask::RightOnly);
  REQUIRE(eta.size() == 56);
  CHECK(eta.head(28).isZero());
  CHECK(eta[28] == doctest::Approx(0.0007 * 0.0007 / 4.0));
  CHECK(eta[31] == doctest::Approx(0.004 * 0.004 / 4.0));
  CHECK(eta[34] == doctest::Approx(0.02 * 0.02 / 4.0));
  CHECK(eta[55] == doctest::Approx(0.02 * 0.02 / 4.0));

  const VectorXd cap = opt::drift_caps(cfg, 22);
  REQUIRE(cap.size() == 56);
  CHECK(cap[0] == doctest::Approx(0.0007));
  CHECK(cap[3] == doctest::Approx(0.004));
  CHECK(cap[6] == doctest::Approx(0.02));
  cfg.drift_limit = 0.0;
  CHECK(opt::drift_caps(cfg, 22).size() == 0);
}

TEST_CASE("optimizer config validation") {
  opt::OptimizerConfig cfg;
  cfg.steps = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.annealing = 1.5;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.step_joint = 0.0;
  CHECK_THROWS(cfg.validate());
  CHECK(opt::OptimizerConfig::refinement().steps == 100);
}

TEST_CASE("optimizer trace, determinism and limits") {
  const ObjectModel obj = make_fixture("sphere", 0.2, 2500.0);
  const energy::GraspEnergy energy(obj, hands(), {});
  const hand::BimanualGrasp g0 = start(obj, 4);

  opt::OptimizerConfig cfg;
  cfg.steps = 1;
  CHECK(opt::optimize(energy, g0, cfg).trace.energy.size() == 1);

  cfg.steps = 60;
  cfg.seed = 8;
  const opt::OptResult a = opt::optimize(energy, g0, cfg);
  const opt::OptResult b = opt::optimize(energy, g0, cfg);
  CHECK(hand::flatten(a.grasp) == hand::flatten(b.grasp));
  CHECK(a.trace.energy == b.trace.energy);
  REQUIRE(a.trace.energy.size() == 60);

  double lowest = a.trace.initial_energy;
  for (double e : a.trace.energy) lowest = std::min(lowest, e);
  CHECK(a.trace.final.total == doctest::Approx(lowest).epsilon(1e-12));
  CHECK(a.trace.final.total <= a.trace.initial_energy);
  CHECK(hand::joint_violation(hands().left, a.grasp.left).isZero());
  CHECK(hand::joint_violation(hands().right, a.grasp.right).isZero());

  cfg.noise = false;
  const opt::OptResult greedy = opt::optimize(energy, g0, cfg);
  double prev = greedy.trace.initial_energy;
  for (double e : greedy.trace.energy) {
    CHECK(e <= prev);
    prev = e;
  }
}

TEST_CASE("an idle hand does not move") {
  const ObjectModel obj = make_fixture("box", 0.2, 2500.0);
  const energy::GraspEnergy energy(obj, hands(), {}, hand::HandMask::RightOnly);
  const hand::BimanualGrasp g0 = start(obj, 2, hand::HandMask::RightOnly);
  opt::OptimizerConfig cfg;
  cfg.steps = 40;
  const opt::OptResult r = opt::optimize(energy, g0, cfg);
  CHECK(r.grasp.left.translation == g0.left.translation);
  CHECK(r.grasp.left.joints == g0.left.joints);
  CHECK(r.trace.accepted_count > 0);
}
