#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "bigrasp/data/dataset.hpp"
#include "bigrasp/hand/kinematics.hpp"
#include "support.hpp"

using namespace bigrasp;
using namespace bigrasp::data;

namespace {

GraspRecord random_record(std::mt19937_64& rng, int i) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GraspRecord r;
  r.object_id = i % 2 ? "box@0.2" : "meshes/mug.obj";
  r.object_index = i % 3;
  r.candidate = i;
  r.diameter = 0.1 + 0.01 * i;
  r.density = 2500.0;
  r.friction = 0.5 * (1 + i % 4);
  r.hands = i % 5 == 0 ? hand::HandMask::RightOnly : hand::HandMask::Both;
  r.grasp = Eigen::VectorXd::NullaryExpr(hand::kGraspDim, [&] { return u(rng) / 3.0; });
  r.energy.dis = std::abs(u(rng));
  r.energy.fc = std::abs(u(rng)) * 1e-3;
  r.energy.vew = 1.0 / 3.0;
  r.energy.total = r.energy.dis + r.energy.fc + 0.01 * r.energy.vew;
  r.verification.success = i % 3 == 0;
  r.verification.category =
      r.verification.success ? verify::FailureCategory::None : verify::FailureCategory::WrenchInfeasible;
  r.verification.penetration.objpen = 1e-4 * std::abs(u(rng));
  r.verification.contacts_left = i % 7;
  r.verification.contacts_right = 3;
  r.verification.trials = 6;
  r.verification.trials_passed = r.verification.success ? 6 : i % 6;
  r.generator = i % 2 ? Generator::Diffusion : Generator::Optimizer;
  r.seed = 0xfeedface00000000ULL + static_cast<std::uint64_t>(i);
  return r;
}

GraspRecord at(const Eigen::VectorXd& v, bool success = true, double friction = 1.0, double diameter = 0.2) {
  GraspRecord r;
  r.object_id = "sphere@0.2";
  r.grasp = v;
  r.friction = friction;
  r.diameter = diameter;
  r.verification.success = success;
  r.verification.category = success ? verify::FailureCategory::None : verify::FailureCategory::NoContact;
  return r;
}

EntropyRanges unit_ranges() {
  return {Eigen::VectorXd::Zero(hand::kGraspDim), Eigen::VectorXd::Ones(hand::kGraspDim)};
}

}  // namespace

TEST_CASE("100 records survive a file round trip bit for bit") {
  std::mt19937_64 rng(3);
  std::vector<GraspRecord> records;
  for (int i = 0; i < 100; ++i) records.push_back(random_record(rng, i));
  test::TempDir dir;
  const std::string path = (dir / "d.jsonl").string();
  save(records, path);
  const std::vector<GraspRecord> back = load(path);
  REQUIRE(back.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i] == records[i]);
    for (int d = 0; d < hand::kGraspDim; ++d) CHECK(back[i].grasp[d] == records[i].grasp[d]);
    CHECK(back[i].energy.vew == records[i].energy.vew);
    CHECK(back[i].seed == records[i].seed);
  }
}

TEST_CASE("load errors name the line") {
  std::mt19937_64 rng(4);
  std::ostringstream out;
  save({random_record(rng, 0), random_record(rng, 1)}, out);
  std::string text = out.str() + "{\"schema\": 1, \"oops\n";
  std::istringstream in(text);
  try {
    load(in, "bad.jsonl");
    FAIL("expected an error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).rfind("bad.jsonl:3:", 0) == 0);
  }

  std::istringstream empty("");
  CHECK(load(empty).empty());
  std::istringstream blanks("\n\n  \n");
  CHECK(load(blanks).empty());
  CHECK_THROWS(load("/nonexistent/dir/d.jsonl"));
}

TEST_CASE("schema and record validation") {
  std::mt19937_64 rng(5);
  nlohmann::json j = nlohmann::json::parse(to_json_line(random_record(rng, 0)));
  j["schema"] = 99;
  CHECK_THROWS_WITH(from_json_line(j.dump()), doctest::Contains("schema version 99"));

  GraspRecord r = random_record(rng, 2);
  r.grasp.conservativeResize(55);
  CHECK_THROWS(r.validate());
  r = random_record(rng, 3);
  r.grasp[7] = NAN;
  CHECK_THROWS(r.validate());
  r = random_record(rng, 3);
  r.verification.success = true;
  r.verification.category = verify::FailureCategory::NoContact;
  CHECK_THROWS(r.validate());
}

TEST_CASE("entropy of identical and uniformly spread grasps") {
  const EntropyRanges ranges = unit_ranges();
  std::vector<GraspRecord> same(10, at(Eigen::VectorXd::Constant(hand::kGraspDim, 0.3)));
  const EntropyStats s0 = diversity_entropy(same, ranges);
  CHECK(s0.mean == 0.0);
  CHECK(s0.stddev == 0.0);

  std::vector<GraspRecord> spread;
  for (int b = 0; b < 16; ++b) spread.push_back(at(Eigen::VectorXd::Constant(hand::kGraspDim, (b + 0.5) / 16.0)));
  const EntropyStats s1 = diversity_entropy(spread, ranges);
  CHECK(s1.mean == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(s1.per_dimension.minCoeff() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("two-cluster entropy matches a direct histogram") {
  // 3 grasps in one bin and 5 in another on the first 28 coordinates; all in
  // one bin on the rest. Failed records are ignored.
  std::vector<GraspRecord> rs;
  for (int i = 0; i < 8; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(hand::kGraspDim, 0.9);
    v.head(28).setConstant(i < 3 ? 0.1 : 0.6);
    rs.push_back(at(v));
  }
  rs.push_back(at(Eigen::VectorXd::Constant(hand::kGraspDim, 0.33), false));
  const double h = -(3.0 / 8 * std::log2(3.0 / 8) + 5.0 / 8 * std::log2(5.0 / 8));
  const EntropyStats s = diversity_entropy(rs, unit_ranges());
  CHECK(s.per_dimension[0] == doctest::Approx(h).epsilon(1e-12));
  CHECK(s.per_dimension[40] == 0.0);
  CHECK(s.mean == doctest::Approx(h / 2).epsilon(1e-12));
  CHECK(s.stddev == doctest::Approx(h / 2).epsilon(1e-12));  // half at h, half at 0

  // out-of-range values land in the edge bins
  std::vector<GraspRecord> edges{at(Eigen::VectorXd::Constant(hand::kGraspDim, -5.0)),
                                 at(Eigen::VectorXd::Constant(hand::kGraspDim, 0.01)),
                                 at(Eigen::VectorXd::Constant(hand::kGraspDim, 7.0))};
  CHECK(diversity_entropy(edges, unit_ranges()).mean ==
        doctest::Approx(-(2.0 / 3 * std::log2(2.0 / 3) + 1.0 / 3 * std::log2(1.0 / 3))).epsilon(1e-12));
  CHECK_THROWS(diversity_entropy({at(Eigen::VectorXd::Zero(hand::kGraspDim), false)}, unit_ranges()));
}

TEST_CASE("success rates by group") {
  const Eigen::VectorXd v = Eigen::VectorXd::Zero(hand::kGraspDim);
  std::vector<GraspRecord> rs{at(v, true, 1.0, 0.12), at(v, true, 1.0, 0.18), at(v, false, 3.0, 0.31),
                              at(v, true, 3.0, 0.35), at(v, true, 3.0, 0.05)};
  const auto by_mu = success_rate_by(rs, GroupKey::Friction);
  REQUIRE(by_mu.size() == 2);
  CHECK(by_mu[0].lo == 1.0);
  CHECK(by_mu[0].rate() == 1.0);
  CHECK(by_mu[1].count == 3);
  CHECK(by_mu[1].rate() == doctest::Approx(2.0 / 3.0));

  // bins [0, .1), [.1, .2), [.3, .4); [.2, .3) is empty and omitted
  const auto by_d = success_rate_by(rs, GroupKey::Diameter, 0.1);
  REQUIRE(by_d.size() == 3);
  CHECK(by_d[0].lo == doctest::Approx(0.0));
  CHECK(by_d[1].count == 2);
  CHECK(by_d[1].rate() == 1.0);
  CHECK(by_d[2].lo == doctest::Approx(0.3));
  CHECK(by_d[2].rate() == 0.5);

  CHECK(group_key_from_string("density") == GroupKey::Density);
  CHECK_THROWS(group_key_from_string("colour"));
  CHECK(success_rate_by({}, GroupKey::Friction).empty());
}

TEST_CASE("batch synthesis is deterministic and thread independent") {
  const hand::HandPair hands = hand::HandPair::from_right(hand::load_hand(hand::bundled_hand_path()));
  const std::vector<ObjectModel> objects{make_fixture("sphere", 0.2, 2500.0), make_fixture("box", 0.2, 2500.0)};
  SynthesisConfig cfg;
  cfg.candidates = 3;
  cfg.optimizer.steps = 15;
  cfg.seed = 12;
  cfg.threads = 1;
  const auto a = synthesize_batch(objects, hands, cfg);
  cfg.threads = 3;
  const auto b = synthesize_batch(objects, hands, cfg);
  REQUIRE(a.size() == 6);
  REQUIRE(b.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(to_json_line(a[i]) == to_json_line(b[i]));
    CHECK(a[i].object_index == static_cast<int>(i / 3));
    CHECK(a[i].candidate == static_cast<int>(i % 3));
    CHECK(a[i].seed == verifier_seed(12, a[i].object_index, a[i].candidate));
  }

  // a stored record reproduces its label and energy on reload
  const GraspRecord back = from_json_line(to_json_line(a[4]));
  verify::VerifyConfig vc = cfg.verify;
  vc.seed = back.seed;
  CHECK(VerificationSummary::from_report(reverify(back, objects[1], hands, vc)) == back.verification);
  const energy::GraspEnergy e(objects[1], hands, cfg.weights);
  CHECK(e.evaluate(hand::unflatten(back.grasp, hands.right)).total == back.energy.total);

  cfg.candidates = 0;
  CHECK_THROWS(synthesize_batch(objects, hands, cfg));
}

TEST_CASE("seed streams are distinct") {
  CHECK(object_seed(1, 0) != object_seed(1, 1));
  CHECK(optimizer_seed(1, 0, 0) != verifier_seed(1, 0, 0));
  CHECK(optimizer_seed(1, 0, 1) != optimizer_seed(1, 1, 0));
  CHECK(hand_mask_from_string(to_string(hand::HandMask::LeftOnly)) == hand::HandMask::LeftOnly);
  CHECK(generator_from_string(to_string(Generator::Diffusion)) == Generator::Diffusion);
}
