#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bigrasp/diffusion/ddpm.hpp"
#include "bigrasp/energy/energy.hpp"
#include "bigrasp/init/initializer.hpp"
#include "bigrasp/opt/optimizer.hpp"
#include "bigrasp/verify/verifier.hpp"

namespace bigrasp::cli {

// Every tunable of the pipeline under one roof, addressable by dotted keys
// ("weights.w_dis", "optimizer.steps", ...). See docs/configuration.md.
struct PipelineConfig {
  init::InitConfig init;
  energy::EnergyWeights weights;
  opt::OptimizerConfig optimizer;
  opt::OptimizerConfig refine = opt::OptimizerConfig::refinement();
  verify::VerifyConfig verify;
  diffusion::DiffusionConfig diffusion;
  diffusion::TrainConfig train;
  double diameter = 0.2;    // fixture bounding-sphere diameter, m
  double density = 2500.0;  // kg / m^3

  PipelineConfig();
};

struct ConfigKey {
  std::string name;
  std::string description;
};

const std::vector<ConfigKey>& config_keys();

// Throws on unknown keys or unparsable values.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const PipelineConfig& cfg, const std::string& key);

// Every key with its current value, in registry order.
std::vector<std::pair<std::string, std::string>> dump_config(const PipelineConfig& cfg);

// `key = value` lines; '#' starts a comment. Errors name the line.
void load_config_file(PipelineConfig& cfg, const std::string& path);
void parse_config_text(PipelineConfig& cfg, const std::string& text, const std::string& source);

}  // namespace bigrasp::cli
