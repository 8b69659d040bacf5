#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bigrasp/energy/energy.hpp"
#include "bigrasp/hand/forward_kinematics.hpp"
#include "bigrasp/hand/kinematics.hpp"
#include "bigrasp/init/initializer.hpp"

using namespace bigrasp;
using geometry::Vec3;

namespace {

const hand::HandPair& hands() {
  static const hand::HandPair p = hand::HandPair::from_right(hand::load_hand(hand::bundled_hand_path()));
  return p;
}

}  // namespace

TEST_CASE("zero jitter on a sphere gives antipodal palms") {
  const ObjectModel obj = make_fixture("sphere", 0.2, 2500.0);
  init::InitConfig cfg;
  cfg.rotation_jitter = 0.0;
  cfg.joint_jitter = 0.0;
  cfg.axis_jitter = 0.0;
  cfg.seed = 3;
  for (const hand::BimanualGrasp& g : init::init_bimanual(obj, hands(), cfg, 8)) {
    const Vec3 l = hand::forward_kinematics(hands().left, g.left).palm_center - obj.centroid;
    const Vec3 r = hand::forward_kinematics(hands().right, g.right).palm_center - obj.centroid;
    const double angle = std::acos(std::clamp(l.normalized().dot(r.normalized()), -1.0, 1.0));
    CHECK(std::abs(angle - M_PI) * 180.0 / M_PI < 1e-6);
  }
}

TEST_CASE("palms face the object") {
  for (const char* kind : {"sphere", "box", "cylinder"}) {
    CAPTURE(kind);
    const ObjectModel obj = make_fixture(kind, 0.2, 2500.0);
    init::InitConfig cfg;
    cfg.seed = 17;
    for (const hand::BimanualGrasp& g : init::init_bimanual(obj, hands(), cfg, 16)) {
      for (bool left : {true, false}) {
        const hand::PosedHand p = hand::forward_kinematics(hands().side(left), left ? g.left : g.right);
        CHECK(p.palm_normal.dot(obj.centroid - p.palm_center) > 0.0);
      }
    }
  }
}

TEST_CASE("shrinking stops before penetration") {
  const ObjectModel cube = ObjectModel::from_mesh("cube", geometry::make_box(Vec3(0.5, 0.5, 0.5)), 1000.0);
  init::InitConfig cfg;
  cfg.seed = 5;
  const std::vector<hand::BimanualGrasp> gs = init::init_bimanual(cube, hands(), cfg, 64);
  REQUIRE(gs.size() == 64);
  double worst = 0.0;
  for (const hand::BimanualGrasp& g : gs) {
    const energy::Penetration p =
        energy::penetration_energies(hand::forward_kinematics(hands().left, g.left),
                                     hand::forward_kinematics(hands().right, g.right), hands(), cube, cfg.stop_margin);
    worst = std::max(worst, p.objpen);
    CHECK(init::min_anchor_distance(hands().left, g.left, cube) > cfg.stop_margin);
    CHECK(init::min_anchor_distance(hands().right, g.right, cube) > cfg.stop_margin);
  }
  CHECK(worst == 0.0);
}

TEST_CASE("candidates are reproducible and thread independent") {
  const ObjectModel obj = make_fixture("cylinder", 0.2, 2500.0);
  init::InitConfig cfg;
  cfg.seed = 99;
  const auto a = init::init_bimanual(obj, hands(), cfg, 6, hand::HandMask::Both, 1);
  const auto b = init::init_bimanual(obj, hands(), cfg, 6, hand::HandMask::Both, 3);
  cfg.seed = 100;
  const auto c = init::init_bimanual(obj, hands(), cfg, 6, hand::HandMask::Both, 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(hand::flatten(a[i]) == hand::flatten(b[i]));
    CHECK(hand::flatten(a[i]) != hand::flatten(c[i]));
  }
}

TEST_CASE("single-hand masks park the idle hand") {
  const ObjectModel obj = make_fixture("box", 0.2, 2500.0);
  init::InitConfig cfg;
  cfg.seed = 1;
  const auto gs = init::init_bimanual(obj, hands(), cfg, 4, hand::HandMask::RightOnly);
  for (const hand::BimanualGrasp& g : gs) {
    CHECK(init::min_anchor_distance(hands().left, g.left, obj) > 0.5);
    CHECK(init::min_anchor_distance(hands().right, g.right, obj) < 0.1);
  }
}

TEST_CASE("config validation") {
  init::InitConfig cfg;
  cfg.shrink_step = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.stop_margin = -1.0;
  CHECK_THROWS(cfg.validate());
}
