#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "persona/evaluation.hpp"
#include "persona/generate.hpp"
#include "persona/seq2seq.hpp"

namespace persona {

struct DataConfig {
  std::string series = "series";
  std::vector<std::string> transcripts;   // scene/speaker/text files of one series
  std::string subtitles;                  // optional pretraining corpus
  std::string contexts;                   // optional held-out evaluation contexts, one per line
  std::string lexicon;
  std::string norms;
  std::string traits;
  std::size_t min_turns = 100;
  std::size_t validation_count = 50;
  std::size_t heldout_contexts = 400;     // used when `contexts` is empty
  std::size_t max_contexts = 0;           // 0 keeps every context
};

struct TrainingConfig {
  std::size_t pretrain_iterations = 15;
  std::size_t finetune_iterations = 30;
};

struct ProfileConfig {
  std::size_t n_samples = 50;
  std::size_t sample_size = 100;
};

struct FilterConfig {
  std::size_t n = 5;
  FilterMode mode = FilterMode::kCommon;
};

struct ExtremeConfig {
  bool enabled = true;
  double high = 6.5;
  double rest = 3.5;
};

// ModelConfig defaults with a 5000-word vocabulary cap.
ModelConfig desk_model();

/// Everything one experiment run depends on. Defaults are desk scale.
struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  DataConfig data;
  ModelConfig model = desk_model();   // vocab_size is the vocabulary cap
  TrainingConfig training;
  ProfileConfig profile;
  GenerationConfig generation;
  FilterConfig filter;
  EvaluationParams evaluation{50, 100, 5, 10, {0.1, 1.0, 10.0, 100.0}};
  ExtremeConfig extreme;

  void validate() const;

  /// Canonical `[section]` / `key = value` text of one section ("" for the
  /// whole file); equal configs give equal text.
  std::string canonical(const std::string& section = "") const;
};

// Sections: run, data, model, training, profile, generation, filter,
// evaluation, extreme. Relative paths are resolved against the config
// file's directory. Unknown keys are errors.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& source = "<config>");

// Full-scale settings for the parts that have them.
ExperimentConfig full_scale_config();

}  // namespace persona
