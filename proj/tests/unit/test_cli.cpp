#include <doctest.h>

#include <fstream>
#include <sstream>

#include "bigrasp/cli/cli.hpp"
#include "bigrasp/cli/config.hpp"
#include "bigrasp/data/dataset.hpp"
#include "bigrasp/hand/forward_kinematics.hpp"
#include "bigrasp/hand/kinematics.hpp"
#include "support.hpp"

using namespace bigrasp;
using namespace bigrasp::cli;
using geometry::Vec3;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run bigrasp_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Rate column of the grouped table, in row order.
std::vector<double> rates(const std::string& table) {
  std::istringstream in(table);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string label;
    int count = 0, ok = 0;
    double rate = 0.0;
    row >> label >> count >> ok >> rate;
    out.push_back(rate);
  }
  return out;
}

// One small dataset shared by the cases below.
const std::filesystem::path& sphere_dataset() {
  static test::TempDir dir;
  static const std::filesystem::path path = [] {
    const std::filesystem::path p = dir / "sphere.jsonl";
    const Run r = bigrasp_run({"synthesize", "--object", "sphere", "--count", "8", "--seed", "1", "--steps", "300",
                               "--out", p.string()});
    REQUIRE(r.code == 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("config text parsing") {
  PipelineConfig cfg;
  parse_config_text(cfg, "# comment\nweights.w_dis = 2.5\n\n optimizer.steps=17  # trailing\nrefine.noise = off\n",
                    "a.cfg");
  CHECK(cfg.weights.w_dis == 2.5);
  CHECK(cfg.optimizer.steps == 17);
  CHECK_FALSE(cfg.refine.noise);
  CHECK(get_config_value(cfg, "weights.w_dis") == "2.5");
  CHECK(cfg.init.stop_margin == cfg.weights.delta);

  CHECK_THROWS_WITH(parse_config_text(cfg, "weights.w_dis = 1\nbogus.key = 3\n", "a.cfg"),
                    doctest::Contains("a.cfg:2:"));
  CHECK_THROWS_WITH(parse_config_text(cfg, "optimizer.steps = 1.5\n", "b.cfg"), doctest::Contains("b.cfg:1:"));
  CHECK_THROWS_WITH(parse_config_text(cfg, "no equals sign\n", "c.cfg"), doctest::Contains("c.cfg:1:"));

  // dump -> parse is the identity
  PipelineConfig other;
  std::string text;
  for (const auto& [k, v] : dump_config(cfg)) text += k + " = " + v + "\n";
  parse_config_text(other, text, "dump");
  CHECK(dump_config(other) == dump_config(cfg));
  CHECK(dump_config(cfg).size() == config_keys().size());
}

TEST_CASE("object specifiers") {
  CHECK(resolve_object("box", 0.2, 2500.0).id == "box@0.2");
  const ObjectModel big = resolve_object("sphere@0.5", 0.2, 1000.0);
  CHECK(big.id == "sphere@0.5");
  CHECK(big.diameter == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(big.density == 1000.0);
  CHECK_THROWS(resolve_object("teapot", 0.2, 2500.0));
  CHECK_THROWS(resolve_object("box@-1", 0.2, 2500.0));

  test::TempDir dir;
  const std::string mesh = (dir / "c.obj").string();
  {
    std::ofstream f(mesh);
    f << "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n";
  }
  const ObjectModel m = resolve_object(mesh + "@0.3", 0.2, 2500.0);
  CHECK(m.diameter == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(resolve_object(m.id, 0.2, 2500.0).diameter == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("synthesize writes the requested records deterministically") {
  const std::vector<data::GraspRecord> records = data::load(sphere_dataset().string());
  REQUIRE(records.size() == 8);
  for (const data::GraspRecord& r : records) CHECK(r.object_id == "sphere@0.2");

  test::TempDir dir;
  const std::string again = (dir / "again.jsonl").string();
  REQUIRE(bigrasp_run({"synthesize", "--object", "sphere", "--count", "8", "--seed", "1", "--steps", "300",
                       "--threads", "2", "--out", again})
              .code == 0);
  CHECK(slurp(again) == slurp(sphere_dataset()));
  CHECK(std::filesystem::exists(again + ".manifest.json"));
}

TEST_CASE("friction sweep reports one non-decreasing rate per coefficient") {
  const Run r = bigrasp_run({"verify", sphere_dataset().string(), "--friction", "0", "--friction", "0.1", "--friction",
                             "0.3", "--friction", "1", "--friction", "2", "--friction", "3"});
  REQUIRE(r.code == 0);
  const std::vector<double> rs = rates(r.out);
  REQUIRE(rs.size() == 6);
  for (std::size_t i = 1; i < rs.size(); ++i) CHECK(rs[i] >= rs[i - 1]);

  // stored labels are reproduced without a fresh seed
  test::TempDir dir;
  const std::string out = (dir / "v.jsonl").string();
  REQUIRE(bigrasp_run({"verify", sphere_dataset().string(), "--out", out}).code == 0);
  const auto a = data::load(sphere_dataset().string());
  const auto b = data::load(out);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].verification == b[i].verification);
}

TEST_CASE("domain and usage errors") {
  test::TempDir dir;
  const Run missing_hand = bigrasp_run({"synthesize", "--object", "sphere", "--count", "1", "--hand",
                                        (dir / "nohand.json").string(), "--out", (dir / "x.jsonl").string()});
  CHECK(missing_hand.code == kExitDomain);
  CHECK(missing_hand.err.find("nohand.json") != std::string::npos);

  const std::string empty = (dir / "empty.jsonl").string();
  std::ofstream(empty).close();
  const Run e = bigrasp_run({"verify", empty});
  CHECK(e.code == kExitOk);
  CHECK(e.err.find("no records") != std::string::npos);

  const std::string bad = (dir / "bad.jsonl").string();
  {
    std::ofstream f(bad);
    f << slurp(sphere_dataset()).substr(0, slurp(sphere_dataset()).find('\n') + 1) << "{broken\n";
  }
  const Run b = bigrasp_run({"stats", bad});
  CHECK(b.code == kExitDomain);
  CHECK(b.err.find("bad.jsonl:2:") != std::string::npos);

  CHECK(bigrasp_run({"synthesize", "--bogus"}).code == kExitUsage);
  CHECK(bigrasp_run({"frobnicate"}).code == kExitUsage);
  CHECK(bigrasp_run({"synthesize", "--count", "3"}).code == kExitUsage);
  CHECK(bigrasp_run({"train", sphere_dataset().string(), "--steps", "3", "--epochs", "1"}).code == kExitUsage);
  CHECK(bigrasp_run({"--help"}).code == kExitOk);
}

TEST_CASE("scene export") {
  test::TempDir dir;
  const std::string obj = (dir / "scene.obj").string();
  REQUIRE(bigrasp_run({"export-scene", sphere_dataset().string(), "--index", "0", "--out", obj}).code == 0);
  const std::string text = slurp(obj);
  std::vector<std::string> groups;
  std::vector<Vec3> right;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("g ", 0) == 0) groups.push_back(line.substr(2));
    if (line.rfind("v ", 0) == 0 && !groups.empty() && groups.back() == "right_hand") {
      std::istringstream v(line.substr(2));
      Vec3 p;
      v >> p.x() >> p.y() >> p.z();
      right.push_back(p);
    }
  }
  CHECK(groups == std::vector<std::string>{"object", "left_hand", "right_hand"});

  // first right-hand vertex is link 0's first mesh vertex under its FK pose
  const hand::HandKinematics kin = hand::load_hand(hand::bundled_hand_path());
  const data::GraspRecord r = data::load(sphere_dataset().string()).front();
  const hand::BimanualGrasp g = hand::unflatten(r.grasp, kin);
  const hand::PosedHand posed = hand::forward_kinematics(kin, g.right);
  REQUIRE_FALSE(right.empty());
  const Vec3 expect = posed.link_poses[0] * kin.link_mesh(0).vertices.front();
  CHECK((right.front() - expect).norm() < 1e-9);

  const Run out_of_range = bigrasp_run({"export-scene", sphere_dataset().string(), "--index", "8", "--out", obj});
  CHECK(out_of_range.code == kExitDomain);
  CHECK(out_of_range.err.find("out of range") != std::string::npos);
}

TEST_CASE("replay reproduces a run") {
  test::TempDir dir;
  const std::string cfg = (dir / "run.cfg").string();
  std::ofstream(cfg) << "optimizer.steps = 25\nweights.w_fc = 2\n";
  const std::string first = (dir / "a.jsonl").string();
  REQUIRE(bigrasp_run({"synthesize", "--object", "box", "--count", "2", "--seed", "4", "--config", cfg, "--out",
                       first})
              .code == 0);
  std::filesystem::remove(cfg);  // replay must not need the config file
  const std::string second = (dir / "b.jsonl").string();
  const Run r = bigrasp_run({"replay", first + ".manifest.json", "--out", second});
  REQUIRE(r.code == 0);
  CHECK(slurp(second) == slurp(first));
  CHECK(bigrasp_run({"replay", (dir / "nothing.json").string()}).code == kExitDomain);
}
