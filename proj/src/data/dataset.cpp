#include "bigrasp/data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "bigrasp/common/error.hpp"
#include "bigrasp/common/parallel.hpp"
#include "bigrasp/common/rng.hpp"

namespace bigrasp::data {

using json = nlohmann::ordered_json;

std::string to_string(Generator g) { return g == Generator::Optimizer ? "optimizer" : "diffusion"; }

Generator generator_from_string(const std::string& s) {
  if (s == "optimizer") return Generator::Optimizer;
  if (s == "diffusion") return Generator::Diffusion;
  throw Error("unknown generator '" + s + "'");
}

std::string to_string(hand::HandMask m) {
  switch (m) {
    case hand::HandMask::Both: return "both";
    case hand::HandMask::LeftOnly: return "left";
    case hand::HandMask::RightOnly: return "right";
  }
  return "both";
}

hand::HandMask hand_mask_from_string(const std::string& s) {
  if (s == "both") return hand::HandMask::Both;
  if (s == "left") return hand::HandMask::LeftOnly;
  if (s == "right") return hand::HandMask::RightOnly;
  throw Error("unknown hand selection '" + s + "' (expected both, left or right)");
}

VerificationSummary VerificationSummary::from_report(const verify::VerificationReport& r) {
  VerificationSummary s;
  s.success = r.success;
  s.category = r.category;
  s.penetration = r.penetration;
  s.contacts_left = r.contacts_left;
  s.contacts_right = r.contacts_right;
  s.trials = static_cast<int>(r.trials.size());
  s.trials_passed = static_cast<int>(
      std::count_if(r.trials.begin(), r.trials.end(), [](const verify::TrialReport& t) { return t.result.feasible; }));
  return s;
}

void GraspRecord::validate() const {
  if (grasp.size() != hand::kGraspDim)
    throw Error("grasp record: expected " + std::to_string(hand::kGraspDim) + " grasp values, got " +
                std::to_string(grasp.size()));
  if (!grasp.allFinite()) throw Error("grasp record: grasp vector has non-finite values");
  if (verification.success != (verification.category == verify::FailureCategory::None))
    throw Error("grasp record: label does not match failure category");
}

namespace {

bool same_energy(const energy::EnergyBreakdown& a, const energy::EnergyBreakdown& b) {
  return a.dis == b.dis && a.fc == b.fc && a.vew == b.vew && a.objpen == b.objpen && a.selfpen == b.selfpen &&
         a.bimpen == b.bimpen && a.joint == b.joint && a.total == b.total;
}

}  // namespace

bool GraspRecord::operator==(const GraspRecord& o) const {
  return object_id == o.object_id && object_index == o.object_index && candidate == o.candidate &&
         diameter == o.diameter && density == o.density && friction == o.friction && hands == o.hands &&
         grasp.size() == o.grasp.size() && grasp == o.grasp && same_energy(energy, o.energy) &&
         verification == o.verification && generator == o.generator && seed == o.seed;
}

std::string to_json_line(const GraspRecord& r) {
  const energy::EnergyBreakdown& e = r.energy;
  const VerificationSummary& v = r.verification;
  json j;
  j["schema"] = kSchemaVersion;
  j["object"] = r.object_id;
  j["object_index"] = r.object_index;
  j["candidate"] = r.candidate;
  j["diameter"] = r.diameter;
  j["density"] = r.density;
  j["friction"] = r.friction;
  j["hands"] = to_string(r.hands);
  j["generator"] = to_string(r.generator);
  j["seed"] = r.seed;
  j["grasp"] = std::vector<double>(r.grasp.data(), r.grasp.data() + r.grasp.size());
  j["energy"] = {{"dis", e.dis},         {"fc", e.fc},         {"vew", e.vew},     {"objpen", e.objpen},
                 {"selfpen", e.selfpen}, {"bimpen", e.bimpen}, {"joint", e.joint}, {"total", e.total}};
  j["verification"] = {{"success", v.success},
                       {"category", verify::to_string(v.category)},
                       {"penetration", {{"object", v.penetration.objpen},
                                        {"self", v.penetration.selfpen},
                                        {"inter_hand", v.penetration.interpen}}},
                       {"contacts_left", v.contacts_left},
                       {"contacts_right", v.contacts_right},
                       {"trials", v.trials},
                       {"trials_passed", v.trials_passed}};
  return j.dump();
}

GraspRecord from_json_line(const std::string& line) {
  const json j = json::parse(line);
  if (!j.is_object()) throw Error("record is not a JSON object");
  const int version = j.at("schema").get<int>();
  if (version != kSchemaVersion)
    throw Error("schema version " + std::to_string(version) + " is not supported (expected " +
                std::to_string(kSchemaVersion) + ")");
  GraspRecord r;
  r.object_id = j.at("object").get<std::string>();
  r.object_index = j.at("object_index").get<int>();
  r.candidate = j.at("candidate").get<int>();
  r.diameter = j.at("diameter").get<double>();
  r.density = j.at("density").get<double>();
  r.friction = j.at("friction").get<double>();
  r.hands = hand_mask_from_string(j.at("hands").get<std::string>());
  r.generator = generator_from_string(j.at("generator").get<std::string>());
  r.seed = j.at("seed").get<std::uint64_t>();
  const std::vector<double> g = j.at("grasp").get<std::vector<double>>();
  r.grasp = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
  const json& e = j.at("energy");
  r.energy.dis = e.at("dis").get<double>();
  r.energy.fc = e.at("fc").get<double>();
  r.energy.vew = e.at("vew").get<double>();
  r.energy.objpen = e.at("objpen").get<double>();
  r.energy.selfpen = e.at("selfpen").get<double>();
  r.energy.bimpen = e.at("bimpen").get<double>();
  r.energy.joint = e.at("joint").get<double>();
  r.energy.total = e.at("total").get<double>();
  const json& v = j.at("verification");
  r.verification.success = v.at("success").get<bool>();
  r.verification.category = verify::failure_category_from_string(v.at("category").get<std::string>());
  const json& p = v.at("penetration");
  r.verification.penetration.objpen = p.at("object").get<double>();
  r.verification.penetration.selfpen = p.at("self").get<double>();
  r.verification.penetration.interpen = p.at("inter_hand").get<double>();
  r.verification.contacts_left = v.at("contacts_left").get<int>();
  r.verification.contacts_right = v.at("contacts_right").get<int>();
  r.verification.trials = v.at("trials").get<int>();
  r.verification.trials_passed = v.at("trials_passed").get<int>();
  r.validate();
  return r;
}

void save(const std::vector<GraspRecord>& records, std::ostream& out) {
  for (const GraspRecord& r : records) out << to_json_line(r) << '\n';
  if (!out) throw Error("failed writing grasp records");
}

void save(const std::vector<GraspRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  save(records, out);
}

std::vector<GraspRecord> load(std::istream& in, const std::string& source) {
  std::vector<GraspRecord> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    try {
      out.push_back(from_json_line(line));
    } catch (const std::exception& e) {
      throw Error(source + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::vector<GraspRecord> load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  return load(in, path);
}

std::uint64_t object_seed(std::uint64_t seed, int object_index) {
  return derive_seed(seed, {static_cast<std::uint64_t>(object_index)});
}

std::uint64_t optimizer_seed(std::uint64_t seed, int object_index, int candidate) {
  return derive_seed(seed, {static_cast<std::uint64_t>(object_index), static_cast<std::uint64_t>(candidate), 1});
}

std::uint64_t verifier_seed(std::uint64_t seed, int object_index, int candidate) {
  return derive_seed(seed, {static_cast<std::uint64_t>(object_index), static_cast<std::uint64_t>(candidate), 2});
}

GraspRecord make_record(const ObjectModel& obj, const hand::HandPair& hands, const hand::BimanualGrasp& g,
                        const energy::EnergyWeights& w, const verify::VerifyConfig& vcfg, hand::HandMask mask,
                        Generator generator) {
  GraspRecord r;
  r.object_id = obj.id;
  r.diameter = obj.diameter;
  r.density = obj.density;
  r.friction = vcfg.friction;
  r.hands = mask;
  r.generator = generator;
  r.seed = vcfg.seed;
  r.grasp = hand::flatten(g);
  const hand::BimanualGrasp canonical = hand::unflatten(r.grasp, hands.right);
  r.energy = energy::total_energy(obj, hands, canonical, w, mask);
  r.verification = VerificationSummary::from_report(verify::verify(obj, canonical, hands, vcfg, mask));
  return r;
}

std::vector<GraspRecord> synthesize_batch(const std::vector<ObjectModel>& objects, const hand::HandPair& hands,
                                          const SynthesisConfig& cfg) {
  if (objects.empty()) throw Error("synthesize: no objects given");
  if (cfg.candidates < 1) throw Error("synthesize: candidate count must be at least 1");
  cfg.weights.validate();
  cfg.optimizer.validate();
  cfg.verify.validate();

  struct Slot {
    GraspRecord record;
  };
  std::vector<GraspRecord> out;
  for (std::size_t oi = 0; oi < objects.size(); ++oi) {
    const ObjectModel& obj = objects[oi];
    const int o = static_cast<int>(oi);
    try {
      init::InitConfig icfg = cfg.init;
      icfg.seed = object_seed(cfg.seed, o);
      const std::vector<hand::BimanualGrasp> inits =
          init::init_bimanual(obj, hands, icfg, cfg.candidates, cfg.hands, cfg.threads);
      const energy::GraspEnergy energy(obj, hands, cfg.weights, cfg.hands);
      std::vector<Slot> slots(inits.size());
      parallel_for(inits.size(), cfg.threads, [&](std::size_t c) {
        const int ci = static_cast<int>(c);
        opt::OptimizerConfig ocfg = cfg.optimizer;
        ocfg.seed = optimizer_seed(cfg.seed, o, ci);
        const opt::OptResult res = opt::optimize(energy, inits[c], ocfg);
        verify::VerifyConfig vcfg = cfg.verify;
        vcfg.seed = verifier_seed(cfg.seed, o, ci);
        slots[c].record = make_record(obj, hands, res.grasp, cfg.weights, vcfg, cfg.hands, Generator::Optimizer);
        slots[c].record.object_index = o;
        slots[c].record.candidate = ci;
      });
      for (Slot& s : slots) out.push_back(std::move(s.record));
      const auto ok = std::count_if(slots.begin(), slots.end(),
                                    [](const Slot& s) { return s.record.verification.success; });
      spdlog::info("object {} '{}': {}/{} verified", o, obj.id, ok, slots.size());
    } catch (const std::exception& e) {
      spdlog::warn("object {} '{}' skipped: {}", o, obj.id, e.what());
    }
  }
  return out;
}

verify::VerificationReport reverify(const GraspRecord& r, const ObjectModel& obj, const hand::HandPair& hands,
                                    const verify::VerifyConfig& cfg) {
  r.validate();
  return verify::verify(obj, hand::unflatten(r.grasp, hands.right), hands, cfg, r.hands);
}

EntropyRanges EntropyRanges::defaults(const hand::HandPair& hands, double translation_range) {
  EntropyRanges r;
  r.lo.resize(hand::kGraspDim);
  r.hi.resize(hand::kGraspDim);
  const int n = hand::hand_tangent_dim(hand::kHandDof);
  for (int side = 0; side < 2; ++side) {
    const hand::HandKinematics& k = hands.side(side == 0);
    const int o = side * n;
    r.lo.segment<3>(o).setConstant(-translation_range);
    r.hi.segment<3>(o).setConstant(translation_range);
    r.lo.segment<3>(o + 3).setConstant(-std::numbers::pi);
    r.hi.segment<3>(o + 3).setConstant(std::numbers::pi);
    r.lo.segment(o + 6, k.dof()) = k.lower_limits();
    r.hi.segment(o + 6, k.dof()) = k.upper_limits();
  }
  return r;
}

EntropyStats diversity_entropy(const std::vector<GraspRecord>& records, const EntropyRanges& ranges, int bins) {
  if (bins < 1) throw Error("entropy: bin count must be at least 1");
  if (ranges.lo.size() != hand::kGraspDim || ranges.hi.size() != hand::kGraspDim)
    throw Error("entropy: ranges must cover all 56 coordinates");
  std::vector<const GraspRecord*> ok;
  for (const GraspRecord& r : records)
    if (r.verification.success) ok.push_back(&r);
  if (ok.empty()) throw Error("entropy: no successful records");

  EntropyStats s;
  s.per_dimension.resize(hand::kGraspDim);
  std::vector<int> counts(bins);
  for (int d = 0; d < hand::kGraspDim; ++d) {
    std::fill(counts.begin(), counts.end(), 0);
    const double lo = ranges.lo[d];
    const double width = ranges.hi[d] - lo;
    if (!(width > 0.0)) throw Error("entropy: empty range for coordinate " + std::to_string(d));
    for (const GraspRecord* r : ok) {
      const double u = (r->grasp[d] - lo) / width * bins;
      const int b = std::clamp(static_cast<int>(std::floor(u)), 0, bins - 1);
      ++counts[b];
    }
    double h = 0.0;
    for (int c : counts) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / static_cast<double>(ok.size());
      h -= p * std::log2(p);
    }
    s.per_dimension[d] = h;
  }
  s.mean = s.per_dimension.mean();
  s.stddev = std::sqrt((s.per_dimension.array() - s.mean).square().mean());
  return s;
}

GroupKey group_key_from_string(const std::string& s) {
  if (s == "diameter") return GroupKey::Diameter;
  if (s == "density") return GroupKey::Density;
  if (s == "friction") return GroupKey::Friction;
  throw Error("unknown grouping key '" + s + "' (expected diameter, density or friction)");
}

std::vector<GroupRate> success_rate_by(const std::vector<GraspRecord>& records, GroupKey key, double diameter_bin) {
  if (key == GroupKey::Diameter && !(diameter_bin > 0.0)) throw Error("diameter bin width must be positive");
  std::map<double, GroupRate> groups;
  for (const GraspRecord& r : records) {
    double lo = 0.0;
    double hi = 0.0;
    switch (key) {
      case GroupKey::Diameter: {
        // Nudge so a diameter sitting on a bin edge lands in the upper bin
        // despite rounding in the division.
        const double k = std::floor(r.diameter / diameter_bin + 1e-9);
        lo = k * diameter_bin;
        hi = (k + 1.0) * diameter_bin;
        break;
      }
      case GroupKey::Density: lo = hi = r.density; break;
      case GroupKey::Friction: lo = hi = r.friction; break;
    }
    GroupRate& g = groups[lo];
    if (g.count == 0) {
      g.lo = lo;
      g.hi = hi;
      std::ostringstream label;
      if (key == GroupKey::Diameter) label << "[" << lo << ", " << hi << ")";
      else label << lo;
      g.label = label.str();
    }
    ++g.count;
    if (r.verification.success) ++g.successes;
  }
  std::vector<GroupRate> out;
  out.reserve(groups.size());
  for (auto& [k, g] : groups) out.push_back(std::move(g));
  return out;
}

DatasetStats dataset_stats(const std::vector<GraspRecord>& records, GroupKey key, const EntropyRanges& ranges) {
  DatasetStats s;
  s.count = static_cast<int>(records.size());
  for (const GraspRecord& r : records) s.successes += r.verification.success ? 1 : 0;
  s.groups = success_rate_by(records, key);
  if (s.successes > 0) {
    s.entropy = diversity_entropy(records, ranges);
    s.has_entropy = true;
  }
  return s;
}

}  // namespace bigrasp::data
