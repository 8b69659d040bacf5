#include "bigrasp/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "bigrasp/common/error.hpp"

namespace bigrasp::cli {

PipelineConfig::PipelineConfig() {
  // The initializer stops at the margin the penetration hinge starts at.
  init.stop_margin = weights.delta;
}

namespace {

struct Entry {
  ConfigKey key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) throw Error("config: bad value '" + text + "' for " + key);
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw Error("config: bad boolean '" + text + "' for " + key);
}

template <class T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
  else return fmt::format("{}", v);  // shortest round-trip form
}

template <class Section, class T>
Entry make_entry(std::string name, Section PipelineConfig::*section, T Section::*field, std::string description) {
  Entry e;
  e.key = {name, std::move(description)};
  e.set = [name, section, field](PipelineConfig& c, const std::string& text) {
    if constexpr (std::is_same_v<T, bool>) (c.*section).*field = parse_bool(name, text);
    else (c.*section).*field = parse_number<T>(name, text);
  };
  e.get = [section, field](const PipelineConfig& c) { return format_value((c.*section).*field); };
  return e;
}

template <class T>
Entry make_top(std::string name, T PipelineConfig::*field, std::string description) {
  Entry e;
  e.key = {name, std::move(description)};
  e.set = [name, field](PipelineConfig& c, const std::string& text) { c.*field = parse_number<T>(name, text); };
  e.get = [field](const PipelineConfig& c) { return format_value(c.*field); };
  return e;
}

template <class T>
Entry make_network(std::string name, T diffusion::NetworkShape::*field, std::string description) {
  Entry e;
  e.key = {name, std::move(description)};
  e.set = [name, field](PipelineConfig& c, const std::string& text) {
    c.diffusion.network.*field = parse_number<T>(name, text);
  };
  e.get = [field](const PipelineConfig& c) { return format_value(c.diffusion.network.*field); };
  return e;
}

const std::vector<Entry>& registry() {
  using P = PipelineConfig;
  static const std::vector<Entry> entries = [] {
    std::vector<Entry> v;
    v.push_back(make_top("object.diameter", &P::diameter, "fixture bounding-sphere diameter, m"));
    v.push_back(make_top("object.density", &P::density, "object density, kg/m^3"));

    v.push_back(make_entry("init.hull_offset", &P::init, &init::InitConfig::hull_offset, "initial hull inflation, m"));
    v.push_back(make_entry("init.shrink_step", &P::init, &init::InitConfig::shrink_step, "hull shrink per iteration, m"));
    v.push_back(make_entry("init.max_iterations", &P::init, &init::InitConfig::max_iterations, "shrink iteration cap"));
    v.push_back(make_entry("init.rotation_jitter", &P::init, &init::InitConfig::rotation_jitter, "root rotation std, rad"));
    v.push_back(make_entry("init.joint_jitter", &P::init, &init::InitConfig::joint_jitter, "joint angle std, rad"));
    v.push_back(make_entry("init.axis_jitter", &P::init, &init::InitConfig::axis_jitter, "left approach axis std, rad"));
    v.push_back(make_entry("init.stop_margin", &P::init, &init::InitConfig::stop_margin, "shrink stop distance, m"));

    using W = energy::EnergyWeights;
    v.push_back(make_entry("weights.w_dis", &P::weights, &W::w_dis, "hand-object distance weight"));
    v.push_back(make_entry("weights.w_fc", &P::weights, &W::w_fc, "force closure weight"));
    v.push_back(make_entry("weights.w_vew", &P::weights, &W::w_vew, "wrench ellipse volume weight"));
    v.push_back(make_entry("weights.w_objpen", &P::weights, &W::w_objpen, "hand-object penetration weight"));
    v.push_back(make_entry("weights.w_selfpen", &P::weights, &W::w_selfpen, "self penetration weight"));
    v.push_back(make_entry("weights.w_bimpen", &P::weights, &W::w_bimpen, "inter-hand penetration weight"));
    v.push_back(make_entry("weights.w_joint", &P::weights, &W::w_joint, "joint limit weight"));
    v.push_back(make_entry("weights.delta", &P::weights, &W::delta, "penetration margin, m"));
    v.push_back(make_entry("weights.epsilon", &P::weights, &W::epsilon, "pair distance floor, m"));
    v.push_back(make_entry("weights.ridge", &P::weights, &W::ridge, "ridge added to G G^T"));

    using O = opt::OptimizerConfig;
    for (auto [prefix, member] : {std::pair{"optimizer", &P::optimizer}, std::pair{"refine", &P::refine}}) {
      const std::string p = prefix;
      v.push_back(make_entry(p + ".steps", member, &O::steps, "MALA steps"));
      v.push_back(make_entry(p + ".step_translation", member, &O::step_translation, "translation step, m"));
      v.push_back(make_entry(p + ".step_rotation", member, &O::step_rotation, "rotation step, rad"));
      v.push_back(make_entry(p + ".step_joint", member, &O::step_joint, "joint step, rad"));
      v.push_back(make_entry(p + ".temperature", member, &O::temperature, "initial temperature"));
      v.push_back(make_entry(p + ".annealing", member, &O::annealing, "temperature factor per step"));
      v.push_back(make_entry(p + ".drift_limit", member, &O::drift_limit, "drift bound in step units, 0 = off"));
      v.push_back(make_entry(p + ".noise", member, &O::noise, "Langevin noise on/off"));
    }

    using V = verify::VerifyConfig;
    v.push_back(make_entry("verify.friction", &P::verify, &V::friction, "friction coefficient"));
    v.push_back(make_entry("verify.gravity", &P::verify, &V::gravity, "gravity, m/s^2"));
    v.push_back(make_entry("verify.trials", &P::verify, &V::trials, "gravity directions"));
    v.push_back(make_entry("verify.penetration_budget", &P::verify, &V::penetration_budget, "penetration budget, m"));
    v.push_back(make_entry("verify.cone_edges", &P::verify, &V::cone_edges, "friction cone edges"));
    v.push_back(make_entry("verify.max_normal_force", &P::verify, &V::max_normal_force, "normal force cap, N"));
    v.push_back(make_entry("verify.force_tolerance", &P::verify, &V::force_tolerance, "force residual tolerance, N"));
    v.push_back(make_entry("verify.torque_tolerance", &P::verify, &V::torque_tolerance, "torque residual tolerance, N m"));
    v.push_back(make_entry("verify.contact_margin", &P::verify, &V::contact_margin, "contact distance, m"));
    v.push_back(make_entry("verify.max_iterations", &P::verify, &V::max_iterations, "solver iteration cap"));

    using D = diffusion::DiffusionConfig;
    v.push_back(make_entry("diffusion.steps", &P::diffusion, &D::steps, "diffusion steps T"));
    v.push_back(make_entry("diffusion.beta_start", &P::diffusion, &D::beta_start, "beta_1"));
    v.push_back(make_entry("diffusion.beta_end", &P::diffusion, &D::beta_end, "beta_T"));
    v.push_back(make_entry("diffusion.cloud_points", &P::diffusion, &D::cloud_points, "conditioning cloud size"));
    v.push_back(make_entry("diffusion.cloud_seed", &P::diffusion, &D::cloud_seed, "conditioning cloud seed"));
    using N = diffusion::NetworkShape;
    v.push_back(make_network("diffusion.feature_width", &N::feature_width, "object feature width"));
    v.push_back(make_network("diffusion.time_width", &N::time_width, "time embedding width"));
    v.push_back(make_network("diffusion.hidden_width", &N::hidden_width, "residual block width"));
    v.push_back(make_network("diffusion.blocks", &N::blocks, "residual blocks"));
    v.push_back(make_network("diffusion.point_width", &N::point_width, "first per-point layer width"));
    v.push_back(make_network("diffusion.pool_width", &N::pool_width, "pooled channel count"));

    using T = diffusion::TrainConfig;
    v.push_back(make_entry("train.steps", &P::train, &T::steps, "training steps"));
    v.push_back(make_entry("train.batch", &P::train, &T::batch, "batch size"));
    v.push_back(make_entry("train.learning_rate", &P::train, &T::learning_rate, "learning rate"));
    v.push_back(make_entry("train.momentum", &P::train, &T::momentum, "momentum"));
    return v;
  }();
  return entries;
}

const Entry& find_entry(const std::string& key) {
  for (const Entry& e : registry())
    if (e.key.name == key) return e;
  throw Error("config: unknown key '" + key + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const Entry& e : registry()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  find_entry(key).set(cfg, trim(value));
}

std::string get_config_value(const PipelineConfig& cfg, const std::string& key) { return find_entry(key).get(cfg); }

std::vector<std::pair<std::string, std::string>> dump_config(const PipelineConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Entry& e : registry()) out.emplace_back(e.key.name, e.get(cfg));
  return out;
}

void parse_config_text(PipelineConfig& cfg, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    try {
      if (eq == std::string::npos) throw Error("expected 'key = value'");
      set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::exception& e) {
      throw Error(source + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void load_config_file(PipelineConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  parse_config_text(cfg, ss.str(), path);
}

}  // namespace bigrasp::cli
