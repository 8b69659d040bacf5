#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bigrasp/common/rng.hpp"
#include "bigrasp/data/dataset.hpp"
#include "bigrasp/diffusion/network.hpp"

namespace bigrasp::diffusion {

struct DiffusionConfig {
  int steps = 100;  // T
  double beta_start = 1e-4;
  double beta_end = 0.1;
  int cloud_points = 256;
  std::uint64_t cloud_seed = 0;  // surface sampling of conditioning clouds
  NetworkShape network;
  // Per-coordinate affine map of the 56-vector: h = (x - mean) / scale.
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  void validate() const;
};

// Linear beta schedule; index k holds step t = k + 1.
struct Schedule {
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;      // 1 - beta
  Eigen::VectorXd alpha_bar;  // running product of alpha

  static Schedule linear(int steps, double beta_start, double beta_end);
  int steps() const { return static_cast<int>(beta.size()); }
};

// sqrt(alpha_bar_t) h0 + sqrt(1 - alpha_bar_t) eps, for 1 <= t <= T.
Eigen::VectorXd forward_noise(const Eigen::VectorXd& h0, int t, const Eigen::VectorXd& eps, const Schedule& s);

struct DiffusionModel {
  DiffusionConfig config;
  DenoiserParams params;

  Schedule schedule() const { return Schedule::linear(config.steps, config.beta_start, config.beta_end); }
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
  Eigen::VectorXd denormalize(const Eigen::VectorXd& h) const;
};

// Plain-text checkpoint: a versioned header, the configuration, then every
// tensor with a shape line. Values are written with round-trip precision.
void save_checkpoint(const DiffusionModel& m, std::ostream& out);
void save_checkpoint(const DiffusionModel& m, const std::string& path);
DiffusionModel load_checkpoint(std::istream& in, const std::string& source = "<stream>");
DiffusionModel load_checkpoint(const std::string& path);

// Object clouds used for conditioning, sampled from the surface per seed.
CloudMatrix object_cloud(const ObjectModel& obj, int points, std::uint64_t seed);

struct TrainingSet {
  std::vector<CloudMatrix> clouds;
  std::vector<std::string> object_ids;  // parallel to clouds
  std::vector<Eigen::VectorXd> grasps;  // raw 56-vectors
  std::vector<int> cloud_of;            // per grasp
};

// Successful records only; every record's object must be in `objects`
// (matched by id). Clouds use cfg.cloud_points and cfg.cloud_seed.
TrainingSet training_set(const std::vector<data::GraspRecord>& records, const std::vector<ObjectModel>& objects,
                         const DiffusionConfig& cfg);

// Fits the normalization on `data` and draws initial weights.
DiffusionModel init_model(DiffusionConfig cfg, const TrainingSet& data, std::uint64_t seed);

struct TrainConfig {
  int steps = 2000;
  int batch = 64;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
};

// Stochastic gradient with momentum; batches, steps and noise are drawn from
// the seed, so a run is reproducible.
class Trainer {
 public:
  Trainer(DiffusionModel& model, const TrainingSet& data, const TrainConfig& cfg);
  // Loss of the batch before the update.
  double step();
  int steps_done() const { return done_; }

 private:
  DiffusionModel& model_;
  const TrainingSet& data_;
  TrainConfig cfg_;
  Schedule schedule_;
  std::vector<Eigen::VectorXd> normalized_;
  Eigen::VectorXd velocity_;
  Rng rng_;
  int done_ = 0;
};

// Runs cfg.steps updates and returns the per-step losses.
std::vector<double> train(DiffusionModel& model, const TrainingSet& data, const TrainConfig& cfg);

// Normalized-space noise predictor for one sample: (h_t, t) -> eps_hat.
using StepPredictor = std::function<Eigen::VectorXd(const Eigen::VectorXd& h_t, int t)>;

// Ancestral sampling from h_T ~ N(0, I) down to h_0, in normalized units, with
// sigma_t^2 = beta_t and no noise on the last step.
Eigen::VectorXd sample_normalized(const StepPredictor& f, const Schedule& s, int dim, std::uint64_t seed);

// De-normalized 56-vector for the object with feature `feature`.
Eigen::VectorXd sample(const DiffusionModel& m, const Eigen::VectorXd& feature, std::uint64_t seed);

struct GeneratedGrasp {
  hand::BimanualGrasp raw;
  hand::BimanualGrasp refined;
  energy::EnergyBreakdown raw_energy;
  energy::EnergyBreakdown refined_energy;
  verify::VerificationReport report;
};

// n samples -> unflatten -> clamp joints -> refinement -> verify. Sample i uses
// derive_seed(seed, {i}) for sampling, refinement and verification streams.
std::vector<GeneratedGrasp> generate(const ObjectModel& obj, const hand::HandPair& hands, const DiffusionModel& m,
                                     int n, const energy::EnergyWeights& weights, const opt::OptimizerConfig& refine,
                                     const verify::VerifyConfig& vcfg, std::uint64_t seed, unsigned threads = 0);

}  // namespace bigrasp::diffusion
