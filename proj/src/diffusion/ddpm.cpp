#include "bigrasp/diffusion/ddpm.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "bigrasp/common/error.hpp"
#include "bigrasp/common/parallel.hpp"
#include "bigrasp/geometry/sampling.hpp"

namespace bigrasp::diffusion {

void DiffusionConfig::validate() const {
  if (steps < 1) throw Error("diffusion: step count must be at least 1");
  if (!(beta_start > 0.0 && beta_start < 1.0 && beta_end > 0.0 && beta_end < 1.0))
    throw Error("diffusion: betas must lie in (0, 1)");
  if (cloud_points < kMinCloudPoints)
    throw Error("diffusion: conditioning clouds need at least " + std::to_string(kMinCloudPoints) + " points");
  network.validate();
  if (mean.size() != network.grasp_dim || scale.size() != network.grasp_dim)
    throw Error("diffusion: normalization must cover every grasp coordinate");
  if (!mean.allFinite() || !(scale.array() > 0.0).all() || !scale.allFinite())
    throw Error("diffusion: normalization scales must be positive and finite");
}

Schedule Schedule::linear(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw Error("schedule: step count must be at least 1");
  Schedule s;
  s.beta = steps == 1 ? Eigen::VectorXd::Constant(1, beta_start)
                      : Eigen::VectorXd::LinSpaced(steps, beta_start, beta_end).eval();
  s.alpha = 1.0 - s.beta.array();
  s.alpha_bar.resize(steps);
  double running = 1.0;
  for (int k = 0; k < steps; ++k) {
    running *= s.alpha[k];
    s.alpha_bar[k] = running;
  }
  return s;
}

Eigen::VectorXd forward_noise(const Eigen::VectorXd& h0, int t, const Eigen::VectorXd& eps, const Schedule& s) {
  if (t < 1 || t > s.steps()) throw Error(fmt::format("forward_noise: step {} outside 1..{}", t, s.steps()));
  if (h0.size() != eps.size()) throw Error("forward_noise: h0 and eps differ in size");
  const double ab = s.alpha_bar[t - 1];
  return std::sqrt(ab) * h0 + std::sqrt(1.0 - ab) * eps;
}

Eigen::VectorXd DiffusionModel::normalize(const Eigen::VectorXd& x) const {
  return (x - config.mean).cwiseQuotient(config.scale);
}

Eigen::VectorXd DiffusionModel::denormalize(const Eigen::VectorXd& h) const {
  return h.cwiseProduct(config.scale) + config.mean;
}

namespace {

constexpr const char* kCheckpointMagic = "bigrasp-ddpm";
constexpr int kCheckpointVersion = 1;

void write_vector(std::ostream& out, const char* name, const Eigen::Ref<const Eigen::VectorXd>& v) {
  out << name << ' ' << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << fmt::format("{:.17g}", v[i]);
  out << '\n';
}

void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << fmt::format("{:.17g}", m(i, j));
    out << '\n';
  }
}

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) fail("unexpected end of file");
    return w;
  }
  void expect(const std::string& w) {
    const std::string got = word();
    if (got != w) fail("expected '" + w + "', found '" + got + "'");
  }
  template <class T>
  T number() {
    T v{};
    if (!(in_ >> v)) fail("expected a number");
    return v;
  }
  double real() {
    const std::string w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end == w.c_str() || *end != '\0' || !std::isfinite(v)) fail("bad value '" + w + "'");
    return v;
  }
  Eigen::VectorXd vector(const std::string& name, Eigen::Index expected) {
    expect(name);
    const Eigen::Index n = number<Eigen::Index>();
    if (n != expected) fail(fmt::format("{} has {} entries, expected {}", name, n, expected));
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = real();
    return v;
  }
  void matrix(const std::string& name, Eigen::MatrixXd& m) {
    expect("tensor");
    expect(name);
    const Eigen::Index r = number<Eigen::Index>();
    const Eigen::Index c = number<Eigen::Index>();
    if (r != m.rows() || c != m.cols())
      fail(fmt::format("tensor {} is {}x{}, the configuration needs {}x{}", name, r, c, m.rows(), m.cols()));
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = real();
  }
  [[noreturn]] void fail(const std::string& what) const { throw Error("checkpoint " + source_ + ": " + what); }

 private:
  std::istream& in_;
  std::string source_;
};

}  // namespace

void save_checkpoint(const DiffusionModel& m, std::ostream& out) {
  const DiffusionConfig& c = m.config;
  c.validate();
  const NetworkShape& s = c.network;
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "steps " << c.steps << '\n';
  out << "beta_start " << fmt::format("{:.17g}", c.beta_start) << '\n';
  out << "beta_end " << fmt::format("{:.17g}", c.beta_end) << '\n';
  out << "cloud_points " << c.cloud_points << '\n';
  out << "cloud_seed " << c.cloud_seed << '\n';
  out << "grasp_dim " << s.grasp_dim << '\n';
  out << "feature_width " << s.feature_width << '\n';
  out << "time_width " << s.time_width << '\n';
  out << "hidden_width " << s.hidden_width << '\n';
  out << "blocks " << s.blocks << '\n';
  out << "point_width " << s.point_width << '\n';
  out << "pool_width " << s.pool_width << '\n';
  write_vector(out, "mean", c.mean);
  write_vector(out, "scale", c.scale);
  const std::vector<const Linear*> layers = m.params.layers();
  const std::vector<std::string> names = m.params.layer_names();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    write_matrix(out, names[k] + ".w", layers[k]->w);
    write_matrix(out, names[k] + ".b", layers[k]->b);
  }
  out << "end\n";
  if (!out) throw Error("failed writing checkpoint");
}

void save_checkpoint(const DiffusionModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  save_checkpoint(m, out);
}

DiffusionModel load_checkpoint(std::istream& in, const std::string& source) {
  Reader r(in, source);
  r.expect(kCheckpointMagic);
  const int version = r.number<int>();
  if (version != kCheckpointVersion) r.fail(fmt::format("version {} is not supported", version));
  DiffusionConfig c;
  r.expect("steps");
  c.steps = r.number<int>();
  r.expect("beta_start");
  c.beta_start = r.real();
  r.expect("beta_end");
  c.beta_end = r.real();
  r.expect("cloud_points");
  c.cloud_points = r.number<int>();
  r.expect("cloud_seed");
  c.cloud_seed = r.number<std::uint64_t>();
  NetworkShape& s = c.network;
  r.expect("grasp_dim");
  s.grasp_dim = r.number<int>();
  r.expect("feature_width");
  s.feature_width = r.number<int>();
  r.expect("time_width");
  s.time_width = r.number<int>();
  r.expect("hidden_width");
  s.hidden_width = r.number<int>();
  r.expect("blocks");
  s.blocks = r.number<int>();
  r.expect("point_width");
  s.point_width = r.number<int>();
  r.expect("pool_width");
  s.pool_width = r.number<int>();
  c.mean = r.vector("mean", s.grasp_dim);
  c.scale = r.vector("scale", s.grasp_dim);
  try {
    c.validate();
  } catch (const Error& e) {
    r.fail(e.what());
  }
  DiffusionModel m{c, DenoiserParams(s)};
  const std::vector<Linear*> layers = m.params.layers();
  const std::vector<std::string> names = m.params.layer_names();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    r.matrix(names[k] + ".w", layers[k]->w);
    Eigen::MatrixXd b = layers[k]->b;
    r.matrix(names[k] + ".b", b);
    layers[k]->b = b.col(0);
  }
  r.expect("end");
  return m;
}

DiffusionModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  return load_checkpoint(in, path);
}

CloudMatrix object_cloud(const ObjectModel& obj, int points, std::uint64_t seed) {
  const geometry::PointCloud pc = geometry::sample_surface(obj.mesh(), static_cast<std::size_t>(points), seed);
  CloudMatrix m(3, static_cast<Eigen::Index>(pc.size()));
  for (std::size_t i = 0; i < pc.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = pc.points[i];
  return m;
}

TrainingSet training_set(const std::vector<data::GraspRecord>& records, const std::vector<ObjectModel>& objects,
                         const DiffusionConfig& cfg) {
  TrainingSet set;
  std::map<std::string, int> index;
  for (const data::GraspRecord& r : records) {
    if (!r.verification.success) continue;
    r.validate();
    auto it = index.find(r.object_id);
    if (it == index.end()) {
      const ObjectModel* obj = nullptr;
      for (const ObjectModel& o : objects)
        if (o.id == r.object_id) obj = &o;
      if (!obj) throw Error("training set: no object named '" + r.object_id + "'");
      it = index.emplace(r.object_id, static_cast<int>(set.clouds.size())).first;
      set.clouds.push_back(object_cloud(*obj, cfg.cloud_points, cfg.cloud_seed));
      set.object_ids.push_back(r.object_id);
    }
    set.grasps.push_back(r.grasp);
    set.cloud_of.push_back(it->second);
  }
  if (set.grasps.empty()) throw Error("training set: no successful records");
  return set;
}

DiffusionModel init_model(DiffusionConfig cfg, const TrainingSet& data, std::uint64_t seed) {
  if (data.grasps.empty()) throw Error("init_model: empty training set");
  const int dim = cfg.network.grasp_dim;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const Eigen::VectorXd& g : data.grasps) {
    if (g.size() != dim) throw Error("init_model: grasp has the wrong dimension");
    mean += g;
  }
  mean /= static_cast<double>(data.grasps.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const Eigen::VectorXd& g : data.grasps) var += (g - mean).cwiseAbs2();
  var /= static_cast<double>(data.grasps.size());
  // Floor keeps coordinates that never vary (one-grasp sets, locked joints)
  // from dividing by zero.
  cfg.mean = mean;
  cfg.scale = var.cwiseSqrt().cwiseMax(1e-3);
  cfg.validate();
  return {cfg, DenoiserParams::random(cfg.network, seed)};
}

void TrainConfig::validate() const {
  if (steps < 0) throw Error("train: step count must be nonnegative");
  if (batch < 1) throw Error("train: batch size must be at least 1");
  if (!(learning_rate > 0.0)) throw Error("train: learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error("train: momentum must lie in [0, 1)");
}

Trainer::Trainer(DiffusionModel& model, const TrainingSet& data, const TrainConfig& cfg)
    : model_(model), data_(data), cfg_(cfg), schedule_(model.schedule()), rng_(make_rng(cfg.seed, {0x7a1e})) {
  cfg_.validate();
  model_.config.validate();
  if (data_.grasps.empty()) throw Error("train: empty training set");
  for (const Eigen::VectorXd& g : data_.grasps) normalized_.push_back(model_.normalize(g));
  velocity_ = Eigen::VectorXd::Zero(model_.params.size());
}

double Trainer::step() {
  const int dim = model_.config.network.grasp_dim;
  std::uniform_int_distribution<std::size_t> pick(0, normalized_.size() - 1);
  std::uniform_int_distribution<int> step(1, schedule_.steps());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<NoisyExample> batch(static_cast<std::size_t>(cfg_.batch));
  for (NoisyExample& e : batch) {
    const std::size_t i = pick(rng_);
    e.h0 = normalized_[i];
    e.cloud = data_.cloud_of[i];
    e.t = step(rng_);
    e.eps.resize(dim);
    for (int d = 0; d < dim; ++d) e.eps[d] = normal(rng_);
  }
  DenoiserParams grad;
  const double loss = noise_loss(model_.params, data_.clouds, schedule_.alpha_bar, batch, &grad);
  const Eigen::VectorXd g = grad.pack();
  if (!std::isfinite(loss) || !g.allFinite())
    throw Error(fmt::format("train: non-finite loss {} at step {} (learning rate {}, batch {})", loss, done_,
                            cfg_.learning_rate, cfg_.batch));
  velocity_ = cfg_.momentum * velocity_ + g;
  model_.params.unpack(model_.params.pack() - cfg_.learning_rate * velocity_);
  ++done_;
  return loss;
}

std::vector<double> train(DiffusionModel& model, const TrainingSet& data, const TrainConfig& cfg) {
  Trainer trainer(model, data, cfg);
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(cfg.steps));
  for (int s = 0; s < cfg.steps; ++s) losses.push_back(trainer.step());
  return losses;
}

Eigen::VectorXd sample_normalized(const StepPredictor& f, const Schedule& s, int dim, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x5a3b});
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd h(dim);
  for (int d = 0; d < dim; ++d) h[d] = normal(rng);
  for (int t = s.steps(); t >= 1; --t) {
    const int k = t - 1;
    const Eigen::VectorXd eps_hat = f(h, t);
    Eigen::VectorXd next = (h - (s.beta[k] / std::sqrt(1.0 - s.alpha_bar[k])) * eps_hat) / std::sqrt(s.alpha[k]);
    if (t > 1) {
      const double sigma = std::sqrt(s.beta[k]);
      for (int d = 0; d < dim; ++d) next[d] += sigma * normal(rng);
    }
    h = std::move(next);
  }
  return h;
}

Eigen::VectorXd sample(const DiffusionModel& m, const Eigen::VectorXd& feature, std::uint64_t seed) {
  if (feature.size() != m.config.network.feature_width) throw Error("sample: feature has the wrong width");
  const Eigen::MatrixXd features = feature;
  auto f = [&](const Eigen::VectorXd& h, int t) -> Eigen::VectorXd {
    return predict_noise(m.params, h, {t}, features).col(0);
  };
  return m.denormalize(sample_normalized(f, m.schedule(), m.config.network.grasp_dim, seed));
}

std::vector<GeneratedGrasp> generate(const ObjectModel& obj, const hand::HandPair& hands, const DiffusionModel& m,
                                     int n, const energy::EnergyWeights& weights, const opt::OptimizerConfig& refine,
                                     const verify::VerifyConfig& vcfg, std::uint64_t seed, unsigned threads) {
  if (n < 1) throw Error("generate: sample count must be at least 1");
  const Eigen::VectorXd feature = encode_object(object_cloud(obj, m.config.cloud_points, m.config.cloud_seed), m.params);
  const energy::GraspEnergy energy(obj, hands, weights);
  std::vector<GeneratedGrasp> out(static_cast<std::size_t>(n));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    const std::uint64_t s = derive_seed(seed, {i});
    GeneratedGrasp& g = out[i];
    g.raw = hand::unflatten(sample(m, feature, derive_seed(s, {0})), hands.right);
    g.raw_energy = energy.evaluate(g.raw);
    hand::BimanualGrasp start = g.raw;
    hand::clamp_to_limits(start.left, hands.left);
    hand::clamp_to_limits(start.right, hands.right);
    opt::OptimizerConfig ocfg = refine;
    ocfg.seed = derive_seed(s, {1});
    const opt::OptResult res = opt::optimize(energy, start, ocfg);
    g.refined = res.grasp;
    g.refined_energy = res.trace.final;
    verify::VerifyConfig v = vcfg;
    v.seed = derive_seed(s, {2});
    g.report = verify::verify(obj, g.refined, hands, v);
  });
  return out;
}

}  // namespace bigrasp::diffusion
