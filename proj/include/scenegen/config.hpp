#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scenegen/assembly.hpp"
#include "scenegen/curation.hpp"
#include "scenegen/hierarchy.hpp"

namespace scenegen::config {

struct FitConfig {
  int components = 4;
  double lambda = 0.01;
  int min_count = 8;
  double tol = 1e-5;
  int max_iters = 60;
};

struct GenerationConfig {
  std::string scene_type = "bedroom";
  int n_max = 8;
  double k = 1.0;
  int scene_count = 10;
};

// Single configuration document feeding every command.
struct EngineConfig {
  std::vector<std::string> taxonomy;
  hierarchy::TemplateTable templates;
  curation::CurationConfig curation;
  FitConfig fit;
  Aabb boundary{{0, 0, 0}, {5, 4, 3}};
  assembly::AssemblyConfig assembly;
  GenerationConfig generation;
  assembly::AssetLibrary assets;
  std::uint64_t master_seed = 12345;
};

// Built-in bedroom setup: taxonomy, base template, canonical asset sizes
// and the functional rule table. `config print-defaults` dumps it.
EngineConfig default_config();

// Throws ValidationError naming the offending field path.
void validate(const EngineConfig& config);

EngineConfig from_json(const std::string& text);
std::string to_json(const EngineConfig& config);

EngineConfig load(const std::string& path);  // read + parse + validate

}  // namespace scenegen::config
