#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "persona/config.hpp"
#include "persona/ocean.hpp"
#include "persona/recogniser.hpp"

namespace persona {

inline constexpr std::string_view kCodeVersion = "persona 0.1.0";

enum class EvalCondition { kBaseline, kGold, kSpeaker, kPersonality, kBow };

std::string_view to_string(EvalCondition c);
std::optional<EvalCondition> parse_condition(std::string_view s);

/// A stage failed; what() starts with the stage name.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error("stage " + stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Profiles every speaker of `utterances_by_speaker`; a speaker with fewer
// than sample_size utterances is an error naming the speaker.
std::map<std::string, OceanScores> cmd_profile(const std::map<std::string, std::vector<Words>>& utterances_by_speaker,
                                               const ProfileConfig& config, std::uint64_t seed,
                                               const OceanRecogniser& recogniser);

// Short type names for the five one-trait-high vectors.
inline constexpr std::array<std::string_view, kTraitCount> kExtremeTypeNames = {
    "open", "conscientious", "extravert", "agreeable", "neurotic"};

/// Runs the experiment stages inside one output directory.
///
/// Each stage writes into `<out>/<stage>/` and finishes by writing a
/// manifest.json with the stage's config hash, the code version, the master
/// seed and a hash of every output file. A stage whose manifest matches the
/// current config hash and whose outputs are intact is not recomputed.
/// Stages pull in the stages they depend on. The directory is locked for the
/// lifetime of the object.
class Experiment {
 public:
  Experiment(ExperimentConfig config, std::filesystem::path out_dir, std::ostream* log = nullptr);
  ~Experiment();
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;

  std::string ingest();
  std::string profile();
  std::string pretrain();
  std::string train(Conditioning mode);
  std::string generate(Conditioning mode);
  std::string filter(Conditioning mode);
  std::string evaluate(EvalCondition condition);
  std::string significance();
  std::string extreme();

  // Runs every stage the report needs and writes <out>/report/report.txt.
  std::filesystem::path report();

  // The full experiment; returns the report path.
  std::filesystem::path run();

  const ExperimentConfig& config() const { return config_; }
  const std::filesystem::path& out_dir() const { return out_; }
  // Stages computed (not resumed) by this object, in order.
  const std::vector<std::string>& executed() const { return executed_; }

 private:
  template <typename Body>
  std::string stage(const std::string& name, const std::string& material, Body&& body);
  std::string recogniser_material() const;
  std::string base_material() const;
  void say(const std::string& line) const;

  ExperimentConfig config_;
  std::filesystem::path out_;
  std::ostream* log_;
  std::filesystem::path lock_;
  std::map<std::string, std::string> done_;
  std::vector<std::string> executed_;
};

/// Condition table (and, when present, the extreme-type table) plus one key=value
/// record per row, rendered from the evaluation manifests found in out_dir.
/// Throws when no evaluation manifest exists.
std::string render_report(const std::filesystem::path& out_dir);

std::string stage_dir_name(EvalCondition c);

// "0.61 (σ=.01)"-style cell.
std::string format_metric(double value, double sigma);

}  // namespace persona
