#pragma once

// A synthetic two-persona experiment small enough to run in seconds.

#include <filesystem>
#include <string>

#include "persona/config.hpp"
#include "persona/synthetic.hpp"

namespace persona::testing {

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("persona_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline ExperimentConfig tiny_experiment(const std::filesystem::path& data_dir) {
  SyntheticExperimentOptions o;
  o.scenes = 30;
  o.turns = 10;
  o.contexts = 40;
  auto cfg = load_config(write_synthetic_experiment(data_dir, o));
  cfg.model.layers = 1;
  cfg.model.hidden = 8;
  cfg.model.batch_size = 32;
  cfg.data.validation_count = 10;
  cfg.training.pretrain_iterations = 1;
  cfg.training.finetune_iterations = 1;
  cfg.profile = {4, 20};
  cfg.generation.max_response_length = 8;
  cfg.filter.n = 1;
  cfg.evaluation.n_samples = 6;
  cfg.evaluation.sample_size = 8;
  cfg.evaluation.folds = 2;
  cfg.evaluation.iterations = 2;
  cfg.evaluation.c_grid = {1.0};
  cfg.evaluation.bow_top_n = 20;
  return cfg;
}

}  // namespace persona::testing
