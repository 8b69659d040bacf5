#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bigrasp/energy/energy.hpp"
#include "bigrasp/init/initializer.hpp"
#include "bigrasp/opt/optimizer.hpp"
#include "bigrasp/verify/verifier.hpp"

namespace bigrasp::data {

inline constexpr int kSchemaVersion = 1;

enum class Generator { Optimizer, Diffusion };
std::string to_string(Generator g);
Generator generator_from_string(const std::string& s);

std::string to_string(hand::HandMask m);
hand::HandMask hand_mask_from_string(const std::string& s);

// Label and the fields of a VerificationReport that the statistics need.
struct VerificationSummary {
  bool success = false;
  verify::FailureCategory category = verify::FailureCategory::None;
  verify::PenetrationDepths penetration;  // m
  int contacts_left = 0;
  int contacts_right = 0;
  int trials = 0;
  int trials_passed = 0;

  static VerificationSummary from_report(const verify::VerificationReport& r);
  bool operator==(const VerificationSummary&) const = default;
};

struct GraspRecord {
  std::string object_id;
  int object_index = 0;
  int candidate = 0;
  double diameter = 0.0;  // m
  double density = 0.0;   // kg / m^3
  double friction = 0.0;
  hand::HandMask hands = hand::HandMask::Both;
  Eigen::VectorXd grasp;  // flatten() layout, 56 values
  energy::EnergyBreakdown energy;
  VerificationSummary verification;
  Generator generator = Generator::Optimizer;
  std::uint64_t seed = 0;  // seed of the verification run

  // Throws if the grasp vector is not 56 finite values or the label
  // disagrees with the stored category.
  void validate() const;
  bool operator==(const GraspRecord& o) const;
};

// One JSON object per line; see docs/dataset.md.
std::string to_json_line(const GraspRecord& r);
GraspRecord from_json_line(const std::string& line);

void save(const std::vector<GraspRecord>& records, std::ostream& out);
void save(const std::vector<GraspRecord>& records, const std::string& path);
// Blank lines are skipped. Errors name the offending line.
std::vector<GraspRecord> load(std::istream& in, const std::string& source = "<stream>");
std::vector<GraspRecord> load(const std::string& path);

struct SynthesisConfig {
  init::InitConfig init;
  energy::EnergyWeights weights;
  opt::OptimizerConfig optimizer;
  verify::VerifyConfig verify;
  int candidates = 8;
  hand::HandMask hands = hand::HandMask::Both;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency
};

// Streams of a batch run, all derived from cfg.seed:
//   init:      derive_seed(seed, {object index}) fed to the initializer
//   optimizer: derive_seed(seed, {object index, candidate, 1})
//   verifier:  derive_seed(seed, {object index, candidate, 2})
std::uint64_t object_seed(std::uint64_t seed, int object_index);
std::uint64_t optimizer_seed(std::uint64_t seed, int object_index, int candidate);
std::uint64_t verifier_seed(std::uint64_t seed, int object_index, int candidate);

// The stored vector is the canonical form: the grasp is flattened and
// unflattened before its final energy and verification, so reloading a record
// reproduces both exactly.
GraspRecord make_record(const ObjectModel& obj, const hand::HandPair& hands, const hand::BimanualGrasp& g,
                        const energy::EnergyWeights& w, const verify::VerifyConfig& vcfg, hand::HandMask mask,
                        Generator generator);

// init -> optimize -> verify for every object; records come out in (object,
// candidate) order regardless of thread count. An object whose pipeline
// throws is logged and skipped.
std::vector<GraspRecord> synthesize_batch(const std::vector<ObjectModel>& objects, const hand::HandPair& hands,
                                          const SynthesisConfig& cfg);

// Re-runs the verifier on a stored record, optionally with other physical
// parameters.
verify::VerificationReport reverify(const GraspRecord& r, const ObjectModel& obj, const hand::HandPair& hands,
                                    const verify::VerifyConfig& cfg);

// Histogram ranges for the entropy metric, per coordinate of the 56-vector.
struct EntropyRanges {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  // Joint limits for joints; [-t, t] for translations and [-pi, pi] for the
  // axis-angle coordinates.
  static EntropyRanges defaults(const hand::HandPair& hands, double translation_range = 0.5);
};

struct EntropyStats {
  double mean = 0.0;  // bits
  double stddev = 0.0;
  Eigen::VectorXd per_dimension;
};

// Shannon entropy of a `bins`-bin histogram per coordinate, over successful
// records only. Values outside the range fall into the edge bins.
EntropyStats diversity_entropy(const std::vector<GraspRecord>& records, const EntropyRanges& ranges, int bins = 16);

enum class GroupKey { Diameter, Density, Friction };
GroupKey group_key_from_string(const std::string& s);

struct GroupRate {
  std::string label;
  double lo = 0.0;  // group value, or bin bounds for diameter
  double hi = 0.0;
  int count = 0;
  int successes = 0;
  double rate() const { return count > 0 ? static_cast<double>(successes) / count : 0.0; }
};

// Empty groups are omitted. Diameter bins are [k w, (k + 1) w).
std::vector<GroupRate> success_rate_by(const std::vector<GraspRecord>& records, GroupKey key,
                                       double diameter_bin = 0.1);

struct DatasetStats {
  int count = 0;
  int successes = 0;
  std::vector<GroupRate> groups;
  bool has_entropy = false;
  EntropyStats entropy;

  double rate() const { return count > 0 ? static_cast<double>(successes) / count : 0.0; }
};

DatasetStats dataset_stats(const std::vector<GraspRecord>& records, GroupKey key, const EntropyRanges& ranges);

}  // namespace bigrasp::data
