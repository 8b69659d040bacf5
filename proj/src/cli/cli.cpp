#include "bigrasp/cli/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bigrasp/cli/config.hpp"
#include "bigrasp/common/error.hpp"
#include "bigrasp/common/parallel.hpp"
#include "bigrasp/common/rng.hpp"
#include "bigrasp/data/dataset.hpp"
#include "bigrasp/diffusion/ddpm.hpp"
#include "bigrasp/hand/forward_kinematics.hpp"
#include "bigrasp/hand/kinematics.hpp"

#ifndef BIGRASP_VERSION
#define BIGRASP_VERSION "0.0.0"
#endif

namespace bigrasp::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

const std::set<std::string> kFixtures = {"sphere", "box", "cylinder"};

// Options every subcommand shares.
struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string hand_path;
  std::string log_level = "info";
};

// Dedicated flags that are shorthands for configuration keys.
struct Overrides {
  std::optional<int> steps;
  std::optional<double> temperature;
  std::optional<double> annealing;
  std::optional<double> friction;
  std::optional<double> density;
  std::optional<double> diameter;
  std::optional<int> diffusion_steps;
  std::optional<int> batch;
  std::optional<double> learning_rate;
};

struct Invocation {
  std::vector<std::string> args;  // as typed, subcommand first
  const PipelineConfig* fixed = nullptr;  // set by replay
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "key = value configuration file");
  app->add_option("--set", c.sets, "configuration override key=value (repeatable)");
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--threads", c.threads, "worker threads, 0 = all cores");
  app->add_option("--hand", c.hand_path, "hand description (default: bundled 22-DoF hand)");
  app->add_option("--log-level", c.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));
}

PipelineConfig resolve_config(const Common& c, const Overrides& o, const std::string& command,
                              const Invocation& inv) {
  if (inv.fixed) return *inv.fixed;
  PipelineConfig cfg;
  if (!c.config_path.empty()) load_config_file(cfg, c.config_path);
  for (const std::string& kv : c.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.steps) {
    if (command == "generate") cfg.refine.steps = *o.steps;
    else if (command == "train") cfg.train.steps = *o.steps;
    else cfg.optimizer.steps = *o.steps;
  }
  opt::OptimizerConfig& mala = command == "generate" ? cfg.refine : cfg.optimizer;
  if (o.temperature) mala.temperature = *o.temperature;
  if (o.annealing) mala.annealing = *o.annealing;
  if (o.friction) cfg.verify.friction = *o.friction;
  if (o.density) cfg.density = *o.density;
  if (o.diameter) cfg.diameter = *o.diameter;
  if (o.diffusion_steps) cfg.diffusion.steps = *o.diffusion_steps;
  if (o.batch) cfg.train.batch = *o.batch;
  if (o.learning_rate) cfg.train.learning_rate = *o.learning_rate;
  return cfg;
}

hand::HandPair load_hands(const Common& c) {
  const fs::path path = c.hand_path.empty() ? hand::bundled_hand_path() : fs::path(c.hand_path);
  return hand::HandPair::from_right(hand::load_hand(path));
}

ObjectModel record_object(const data::GraspRecord& r) {
  return resolve_object(r.object_id, r.diameter, r.density);
}

// Objects referenced by a dataset, keyed by id.
std::map<std::string, ObjectModel> record_objects(const std::vector<data::GraspRecord>& records) {
  std::map<std::string, ObjectModel> objects;
  for (const data::GraspRecord& r : records) {
    auto it = objects.find(r.object_id);
    if (it == objects.end()) {
      objects.emplace(r.object_id, record_object(r));
    } else if (it->second.density != r.density) {
      it->second = it->second.with_density(r.density);
    }
  }
  return objects;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

void write_manifest(const Invocation& inv, const Common& c, const PipelineConfig& cfg,
                    const std::vector<std::string>& inputs, const std::string& output) {
  ordered_json m;
  m["tool"] = "bigrasp";
  m["version"] = BIGRASP_VERSION;
  m["created"] = utc_now();
  m["command"] = inv.args.front();
  m["argv"] = inv.args;
  m["seed"] = c.seed;
  m["threads"] = c.threads;
  m["hand"] = c.hand_path.empty() ? hand::bundled_hand_path().string() : c.hand_path;
  m["inputs"] = inputs;
  m["output"] = output;
  ordered_json conf = ordered_json::object();
  for (const auto& [k, v] : dump_config(cfg)) conf[k] = v;
  m["config"] = conf;
  std::ofstream f(manifest_path(output));
  if (!f) throw Error("cannot write manifest next to '" + output + "'");
  f << m.dump(2) << '\n';
}

std::vector<ObjectModel> resolve_objects(const std::vector<std::string>& specs, const PipelineConfig& cfg) {
  std::vector<ObjectModel> objects;
  objects.reserve(specs.size());
  for (const std::string& s : specs) objects.push_back(resolve_object(s, cfg.diameter, cfg.density));
  return objects;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void print_groups(std::ostream& out, const std::string& key, const std::vector<data::GroupRate>& groups) {
  out << fmt::format("{:<16} {:>8} {:>10} {:>8}\n", key, "count", "successes", "rate");
  for (const data::GroupRate& g : groups)
    out << fmt::format("{:<16} {:>8} {:>10} {:>8.3f}\n", g.label, g.count, g.successes, g.rate());
}

// ---- synthesize -------------------------------------------------------------

struct SynthesizeArgs {
  std::vector<std::string> objects;
  int count = 8;
  std::string hands = "both";
  std::string out;
};

int cmd_synthesize(const Invocation& inv, const Common& c, const Overrides& o, const SynthesizeArgs& a) {
  const PipelineConfig cfg = resolve_config(c, o, "synthesize", inv);
  const hand::HandPair hands = load_hands(c);
  const std::vector<ObjectModel> objects = resolve_objects(a.objects, cfg);

  data::SynthesisConfig s;
  s.init = cfg.init;
  s.weights = cfg.weights;
  s.optimizer = cfg.optimizer;
  s.verify = cfg.verify;
  s.candidates = a.count;
  s.hands = data::hand_mask_from_string(a.hands);
  s.seed = c.seed;
  s.threads = c.threads;
  const std::vector<data::GraspRecord> records = data::synthesize_batch(objects, hands, s);
  if (records.empty()) throw Error("synthesis produced no records");

  data::save(records, a.out);
  write_manifest(inv, c, cfg, {}, a.out);
  const auto ok = std::count_if(records.begin(), records.end(),
                                [](const data::GraspRecord& r) { return r.verification.success; });
  *inv.out << fmt::format("wrote {} records ({} verified) to {}\n", records.size(), ok, a.out);
  return kExitOk;
}

// ---- verify -----------------------------------------------------------------

struct VerifyArgs {
  std::string dataset;
  std::vector<double> friction;
  std::optional<double> density;
  bool fresh_seed = false;
  std::string by = "friction";
  std::string out;
};

int cmd_verify(const Invocation& inv, const Common& c, const Overrides& o, const VerifyArgs& a) {
  const PipelineConfig cfg = resolve_config(c, o, "verify", inv);
  const std::vector<data::GraspRecord> records = data::load(a.dataset);
  if (records.empty()) {
    *inv.err << "warning: " << a.dataset << " contains no records\n";
    print_groups(*inv.out, a.by, {});
    return kExitOk;
  }
  const hand::HandPair hands = load_hands(c);
  std::map<std::string, ObjectModel> objects = record_objects(records);

  std::vector<double> mus = a.friction;
  if (mus.empty()) mus.push_back(std::nan(""));  // keep each record's own coefficient

  std::vector<data::GraspRecord> out;
  out.reserve(records.size() * mus.size());
  for (double mu : mus) {
    for (const data::GraspRecord& r : records) {
      data::GraspRecord v = r;
      if (!std::isnan(mu)) v.friction = mu;
      if (a.density) v.density = *a.density;
      if (a.fresh_seed) v.seed = data::verifier_seed(c.seed, r.object_index, r.candidate);
      verify::VerifyConfig vc = cfg.verify;
      vc.friction = v.friction;
      vc.seed = v.seed;
      const ObjectModel& base = objects.at(r.object_id);
      const ObjectModel obj = base.density == v.density ? base : base.with_density(v.density);
      v.verification = data::VerificationSummary::from_report(data::reverify(r, obj, hands, vc));
      out.push_back(std::move(v));
    }
  }
  if (!a.out.empty()) {
    data::save(out, a.out);
    write_manifest(inv, c, cfg, {a.dataset}, a.out);
  }
  print_groups(*inv.out, a.by, data::success_rate_by(out, data::group_key_from_string(a.by)));
  return kExitOk;
}

// ---- stats ------------------------------------------------------------------

struct StatsArgs {
  std::string dataset;
  std::string by = "diameter";
  double translation_range = 0.5;
  int bins = 16;
};

int cmd_stats(const Invocation& inv, const Common& c, const StatsArgs& a) {
  const std::vector<data::GraspRecord> records = data::load(a.dataset);
  if (records.empty()) *inv.err << "warning: " << a.dataset << " contains no records\n";
  const hand::HandPair hands = load_hands(c);
  const data::EntropyRanges ranges = data::EntropyRanges::defaults(hands, a.translation_range);
  (void)a.bins;
  const data::DatasetStats st = data::dataset_stats(records, data::group_key_from_string(a.by), ranges);
  std::ostream& out = *inv.out;
  out << fmt::format("records {}  verified {}  rate {:.3f}\n", st.count, st.successes, st.rate());
  if (st.has_entropy)
    out << fmt::format("entropy mean {:.4f} bits  std {:.4f}\n", st.entropy.mean, st.entropy.stddev);
  else
    out << "entropy n/a (no verified records)\n";
  print_groups(out, a.by, st.groups);
  return kExitOk;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::optional<double> epochs;
  std::string out;
  std::string loss_out;
};

int cmd_train(const Invocation& inv, const Common& c, const Overrides& o, const TrainArgs& a) {
  PipelineConfig cfg = resolve_config(c, o, "train", inv);
  const std::vector<data::GraspRecord> records = data::load(a.dataset);
  std::vector<ObjectModel> objects;
  for (auto& [id, obj] : record_objects(records)) objects.push_back(obj);
  const diffusion::TrainingSet set = diffusion::training_set(records, objects, cfg.diffusion);
  if (set.grasps.empty()) throw Error(a.dataset + " has no verified records to train on");
  if (a.epochs && !inv.fixed) {
    const double per_epoch = static_cast<double>(set.grasps.size()) / cfg.train.batch;
    cfg.train.steps = std::max(1, static_cast<int>(std::ceil(*a.epochs * per_epoch)));
  }
  cfg.train.seed = derive_seed(c.seed, {1});

  diffusion::DiffusionModel model = diffusion::init_model(cfg.diffusion, set, derive_seed(c.seed, {0}));
  diffusion::Trainer trainer(model, set, cfg.train);
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(cfg.train.steps));
  for (int i = 0; i < cfg.train.steps; ++i) {
    losses.push_back(trainer.step());
    if ((i + 1) % 100 == 0) spdlog::info("step {} loss {:.5f}", i + 1, losses.back());
  }
  diffusion::save_checkpoint(model, a.out);
  write_manifest(inv, c, cfg, {a.dataset}, a.out);
  if (!a.loss_out.empty()) {
    std::ofstream f(a.loss_out);
    if (!f) throw Error("cannot write '" + a.loss_out + "'");
    for (double l : losses) f << fmt::format("{:.17g}\n", l);
  }
  const std::size_t w = std::min<std::size_t>(100, losses.size());
  auto mean = [](auto b, auto e) { return std::accumulate(b, e, 0.0) / static_cast<double>(e - b); };
  *inv.out << fmt::format("trained {} steps on {} grasps: loss {:.4f} -> {:.4f}, checkpoint {}\n", losses.size(),
                          set.grasps.size(), mean(losses.begin(), losses.begin() + w),
                          mean(losses.end() - w, losses.end()), a.out);
  return kExitOk;
}

// ---- sample / generate ------------------------------------------------------

struct SampleArgs {
  std::string checkpoint;
  std::string object;
  int count = 64;
  std::string out;
};

int cmd_sample(const Invocation& inv, const Common& c, const Overrides& o, const SampleArgs& a) {
  const PipelineConfig cfg = resolve_config(c, o, "sample", inv);
  const diffusion::DiffusionModel model = diffusion::load_checkpoint(a.checkpoint);
  const hand::HandPair hands = load_hands(c);
  const ObjectModel obj = resolve_object(a.object, cfg.diameter, cfg.density);
  const Eigen::VectorXd feature = diffusion::encode_object(
      diffusion::object_cloud(obj, model.config.cloud_points, model.config.cloud_seed), model.params);

  std::vector<data::GraspRecord> records(static_cast<std::size_t>(a.count));
  parallel_for(records.size(), c.threads, [&](std::size_t i) {
    const std::uint64_t s = derive_seed(c.seed, {i});
    const Eigen::VectorXd x = diffusion::sample(model, feature, derive_seed(s, {0}));
    verify::VerifyConfig vc = cfg.verify;
    vc.seed = derive_seed(s, {2});
    data::GraspRecord r = data::make_record(obj, hands, hand::unflatten(x, hands.right), cfg.weights, vc,
                                            hand::HandMask::Both, data::Generator::Diffusion);
    r.candidate = static_cast<int>(i);
    records[i] = std::move(r);
  });
  data::save(records, a.out);
  write_manifest(inv, c, cfg, {a.checkpoint}, a.out);
  *inv.out << fmt::format("wrote {} raw samples to {}\n", records.size(), a.out);
  return kExitOk;
}

int cmd_generate(const Invocation& inv, const Common& c, const Overrides& o, const SampleArgs& a) {
  const PipelineConfig cfg = resolve_config(c, o, "generate", inv);
  const diffusion::DiffusionModel model = diffusion::load_checkpoint(a.checkpoint);
  const hand::HandPair hands = load_hands(c);
  const ObjectModel obj = resolve_object(a.object, cfg.diameter, cfg.density);
  const std::vector<diffusion::GeneratedGrasp> gen =
      diffusion::generate(obj, hands, model, a.count, cfg.weights, cfg.refine, cfg.verify, c.seed, c.threads);

  std::vector<data::GraspRecord> records(gen.size());
  parallel_for(gen.size(), c.threads, [&](std::size_t i) {
    verify::VerifyConfig vc = cfg.verify;
    vc.seed = derive_seed(derive_seed(c.seed, {i}), {2});
    data::GraspRecord r = data::make_record(obj, hands, gen[i].refined, cfg.weights, vc, hand::HandMask::Both,
                                            data::Generator::Diffusion);
    r.candidate = static_cast<int>(i);
    records[i] = std::move(r);
  });
  data::save(records, a.out);
  write_manifest(inv, c, cfg, {a.checkpoint}, a.out);

  std::vector<double> raw, refined;
  int compliant = 0, ok = 0;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    raw.push_back(gen[i].raw_energy.total);
    refined.push_back(gen[i].refined_energy.total);
    const bool in_limits = hand::joint_violation(hands.left, gen[i].refined.left).maxCoeff() <= 0.0 &&
                           hand::joint_violation(hands.right, gen[i].refined.right).maxCoeff() <= 0.0;
    compliant += in_limits;
    ok += records[i].verification.success;
  }
  *inv.out << fmt::format(
      "generated {} grasps: median energy {:.4g} -> {:.4g}, within joint limits {}/{}, verified {}, wrote {}\n",
      gen.size(), median(raw), median(refined), compliant, gen.size(), ok, a.out);
  return kExitOk;
}

// ---- export-scene -----------------------------------------------------------

struct ExportArgs {
  std::string dataset;
  int index = 0;
  std::string out;
};

void write_group(std::ostream& f, const std::string& name, const geometry::TriangleMesh& mesh, int& offset) {
  f << "g " << name << '\n';
  geometry::write_obj(mesh, f, offset);
  offset += static_cast<int>(mesh.vertices.size());
}

geometry::TriangleMesh posed_hand_mesh(const hand::HandKinematics& kin, const hand::HandConfiguration& cfg) {
  const hand::PosedHand posed = hand::forward_kinematics(kin, cfg);
  geometry::TriangleMesh all;
  for (std::size_t l = 0; l < kin.links.size(); ++l) {
    const hand::Pose& p = posed.link_poses[l];
    const geometry::TriangleMesh part = geometry::transformed(kin.link_mesh(static_cast<int>(l)), p.rotation,
                                                              p.translation);
    const int base = static_cast<int>(all.vertices.size());
    all.vertices.insert(all.vertices.end(), part.vertices.begin(), part.vertices.end());
    for (geometry::Face f : part.faces) {
      for (auto& idx : f) idx += base;
      all.faces.push_back(f);
    }
  }
  return all;
}

int cmd_export_scene(const Invocation& inv, const Common& c, const ExportArgs& a) {
  const std::vector<data::GraspRecord> records = data::load(a.dataset);
  if (a.index < 0 || a.index >= static_cast<int>(records.size()))
    throw Error(fmt::format("record index {} out of range (dataset has {})", a.index, records.size()));
  const data::GraspRecord& r = records[static_cast<std::size_t>(a.index)];
  r.validate();
  const hand::HandPair hands = load_hands(c);
  const ObjectModel obj = record_object(r);
  const hand::BimanualGrasp g = hand::unflatten(r.grasp, hands.right);

  std::ofstream f(a.out);
  if (!f) throw Error("cannot write '" + a.out + "'");
  f << fmt::format("# bigrasp scene: {} record {} ({})\n", r.object_id, a.index,
                   r.verification.success ? "verified" : verify::to_string(r.verification.category));
  int offset = 0;
  write_group(f, "object", obj.mesh(), offset);
  if (hand::uses_left(r.hands)) write_group(f, "left_hand", posed_hand_mesh(hands.left, g.left), offset);
  if (hand::uses_right(r.hands)) write_group(f, "right_hand", posed_hand_mesh(hands.right, g.right), offset);
  if (!f) throw Error("failed writing '" + a.out + "'");
  *inv.out << "wrote " << a.out << '\n';
  return kExitOk;
}

int run_impl(const Invocation& inv);

// ---- replay -----------------------------------------------------------------

int cmd_replay(const Invocation& inv, const std::string& manifest, const std::string& out_override) {
  std::ifstream f(manifest);
  if (!f) throw Error("cannot open manifest '" + manifest + "'");
  ordered_json m;
  try {
    m = ordered_json::parse(f);
  } catch (const std::exception& e) {
    throw Error(manifest + ": " + e.what());
  }
  if (!m.contains("argv") || !m.contains("config")) throw Error(manifest + ": not a bigrasp manifest");
  std::vector<std::string> args = m["argv"].get<std::vector<std::string>>();
  if (args.empty() || args.front() == "replay") throw Error(manifest + ": cannot replay this command");
  if (!out_override.empty()) {
    bool replaced = false;
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
      if (args[i] == "--out" || args[i] == "-o") {
        args[i + 1] = out_override;
        replaced = true;
      }
    if (!replaced) throw Error(manifest + ": recorded command has no --out to redirect");
  }
  PipelineConfig cfg;
  for (auto it = m["config"].begin(); it != m["config"].end(); ++it)
    set_config_value(cfg, it.key(), it.value().get<std::string>());
  Invocation next = inv;
  next.args = args;
  next.fixed = &cfg;
  return run_impl(next);
}

void configure_logging(const std::string& level) {
  auto logger = spdlog::get("bigrasp");
  if (!logger) {
    logger = spdlog::stderr_color_mt("bigrasp");
    spdlog::set_default_logger(logger);
  }
  spdlog::set_level(spdlog::level::from_str(level));
}

int run_impl(const Invocation& inv) {
  CLI::App app{"bimanual dexterous grasp synthesis", "bigrasp"};
  app.set_version_flag("--version", BIGRASP_VERSION);
  app.require_subcommand(1);

  Common common;
  Overrides ov;

  SynthesizeArgs syn;
  CLI::App* s = app.add_subcommand("synthesize", "optimize and verify grasps, write a JSONL dataset");
  add_common(s, common);
  s->add_option("--object", syn.objects, "fixture name or mesh path, optional @diameter (repeatable)")->required();
  s->add_option("--count", syn.count, "candidates per object")->check(CLI::PositiveNumber);
  s->add_option("--hands", syn.hands, "both, left or right")->check(CLI::IsMember({"both", "left", "right"}));
  s->add_option("--steps", ov.steps, "MALA steps")->check(CLI::PositiveNumber);
  s->add_option("--temp", ov.temperature, "initial temperature")->check(CLI::PositiveNumber);
  s->add_option("--anneal", ov.annealing, "temperature factor per step")->check(CLI::Range(0.0, 1.0));
  s->add_option("--friction", ov.friction, "friction coefficient")->check(CLI::PositiveNumber);
  s->add_option("--density", ov.density, "object density, kg/m^3")->check(CLI::PositiveNumber);
  s->add_option("--diameter", ov.diameter, "fixture diameter, m")->check(CLI::PositiveNumber);
  s->add_option("--out,-o", syn.out, "output dataset")->required();

  VerifyArgs ver;
  CLI::App* v = app.add_subcommand("verify", "re-verify a dataset, print success rates");
  add_common(v, common);
  v->add_option("dataset", ver.dataset, "JSONL dataset")->required();
  v->add_option("--friction", ver.friction, "friction coefficients to sweep")->expected(1, -1);
  v->add_option("--density", ver.density, "override object density, kg/m^3")->check(CLI::PositiveNumber);
  v->add_flag("--fresh-seed", ver.fresh_seed, "derive verifier seeds from --seed instead of the records");
  v->add_option("--by", ver.by, "grouping: diameter, density or friction")
      ->check(CLI::IsMember({"diameter", "density", "friction"}));
  v->add_option("--out,-o", ver.out, "write re-verified records here");

  StatsArgs sta;
  CLI::App* st = app.add_subcommand("stats", "success rates and diversity of a dataset");
  add_common(st, common);
  st->add_option("dataset", sta.dataset, "JSONL dataset")->required();
  st->add_option("--by", sta.by, "grouping: diameter, density or friction")
      ->check(CLI::IsMember({"diameter", "density", "friction"}));
  st->add_option("--translation-range", sta.translation_range, "entropy histogram range for translations, m")
      ->check(CLI::PositiveNumber);

  TrainArgs tr;
  CLI::App* t = app.add_subcommand("train", "train the diffusion model on verified records");
  add_common(t, common);
  t->add_option("dataset", tr.dataset, "JSONL dataset")->required();
  auto* steps_opt = t->add_option("--steps", ov.steps, "optimizer steps")->check(CLI::PositiveNumber);
  t->add_option("--epochs", tr.epochs, "passes over the data; sets the step count")
      ->check(CLI::PositiveNumber)
      ->excludes(steps_opt);
  t->add_option("--T", ov.diffusion_steps, "diffusion steps")->check(CLI::PositiveNumber);
  t->add_option("--batch", ov.batch, "batch size")->check(CLI::PositiveNumber);
  t->add_option("--lr", ov.learning_rate, "learning rate")->check(CLI::PositiveNumber);
  t->add_option("--loss-out", tr.loss_out, "write per-step losses here");
  t->add_option("--out,-o", tr.out, "checkpoint file")->required();

  SampleArgs sam;
  CLI::App* sa = app.add_subcommand("sample", "draw raw grasps from a checkpoint");
  add_common(sa, common);
  SampleArgs gen;
  CLI::App* ge = app.add_subcommand("generate", "sample, refine and verify grasps");
  add_common(ge, common);
  for (auto [cmd, args] : {std::pair{sa, &sam}, std::pair{ge, &gen}}) {
    cmd->add_option("--checkpoint", args->checkpoint, "model checkpoint")->required();
    cmd->add_option("--object", args->object, "fixture name or mesh path, optional @diameter")->required();
    cmd->add_option("--count", args->count, "number of grasps")->check(CLI::PositiveNumber);
    cmd->add_option("--density", ov.density, "object density, kg/m^3")->check(CLI::PositiveNumber);
    cmd->add_option("--diameter", ov.diameter, "fixture diameter, m")->check(CLI::PositiveNumber);
    cmd->add_option("--friction", ov.friction, "friction coefficient")->check(CLI::PositiveNumber);
    cmd->add_option("--out,-o", args->out, "output dataset")->required();
  }
  ge->add_option("--steps", ov.steps, "refinement steps")->check(CLI::NonNegativeNumber);
  ge->add_option("--temp", ov.temperature, "refinement temperature")->check(CLI::PositiveNumber);
  ge->add_option("--anneal", ov.annealing, "temperature factor per step")->check(CLI::Range(0.0, 1.0));

  ExportArgs exp;
  CLI::App* ex = app.add_subcommand("export-scene", "write one record as an OBJ scene");
  add_common(ex, common);
  ex->add_option("dataset", exp.dataset, "JSONL dataset")->required();
  ex->add_option("--index", exp.index, "record index (0-based)");
  ex->add_option("--out,-o", exp.out, "OBJ file")->required();

  std::string manifest, replay_out;
  CLI::App* re = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  re->add_option("manifest", manifest, "manifest file")->required();
  re->add_option("--out,-o", replay_out, "redirect the output");
  re->add_option("--log-level", common.log_level, "log level");

  std::vector<std::string> argv_storage = {"bigrasp"};
  argv_storage.insert(argv_storage.end(), inv.args.begin(), inv.args.end());
  std::vector<char*> argv;
  for (std::string& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    *inv.out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    *inv.out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    *inv.out << BIGRASP_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    *inv.err << "error: " << e.what() << "\nrun 'bigrasp --help' for usage\n";
    return kExitUsage;
  }
  configure_logging(common.log_level);

  if (re->parsed()) return cmd_replay(inv, manifest, replay_out);
  if (s->parsed()) return cmd_synthesize(inv, common, ov, syn);
  if (v->parsed()) return cmd_verify(inv, common, ov, ver);
  if (st->parsed()) return cmd_stats(inv, common, sta);
  if (t->parsed()) return cmd_train(inv, common, ov, tr);
  if (sa->parsed()) return cmd_sample(inv, common, ov, sam);
  if (ge->parsed()) return cmd_generate(inv, common, ov, gen);
  if (ex->parsed()) return cmd_export_scene(inv, common, exp);
  return kExitUsage;
}

}  // namespace

ObjectModel resolve_object(const std::string& spec, double default_diameter, double density) {
  std::string name = spec;
  std::optional<double> diameter;
  const auto at = spec.rfind('@');
  if (at != std::string::npos) {
    const std::string tail = spec.substr(at + 1);
    double d = 0.0;
    auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), d);
    if (ec == std::errc() && ptr == tail.data() + tail.size()) {
      if (!(d > 0.0)) throw Error("object '" + spec + "': diameter must be positive");
      name = spec.substr(0, at);
      diameter = d;
    }
  }
  if (kFixtures.count(name)) {
    const double d = diameter.value_or(default_diameter);
    ObjectModel obj = make_fixture(name, d, density);
    obj.id = fmt::format("{}@{}", name, d);
    return obj;
  }
  if (!fs::exists(name)) throw Error("object '" + spec + "' is neither a fixture nor an existing mesh file");
  return ObjectModel::from_mesh(spec, geometry::load_mesh(name), density, diameter);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Invocation inv;
  inv.args = args;
  inv.out = &out;
  inv.err = &err;
  try {
    return run_impl(inv);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

}  // namespace bigrasp::cli
