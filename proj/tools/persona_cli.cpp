// Command-line driver for the experiment stages.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "persona/config.hpp"
#include "persona/pipeline.hpp"
#include "persona/recogniser.hpp"
#include "persona/synthetic.hpp"
#include "persona/text_util.hpp"

namespace fs = std::filesystem;
using namespace persona;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

ExperimentConfig load(const Globals& g) {
  if (g.config.empty()) throw std::invalid_argument("--config is required for this command");
  auto c = load_config(g.config);
  if (g.seed) c.master_seed = *g.seed;
  return c;
}

Conditioning mode_of(const std::string& s) {
  auto m = parse_conditioning(s);
  if (!m || *m == Conditioning::kNone) throw std::invalid_argument("--mode must be speaker or personality");
  return *m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persona-conditioned dialogue generation and OCEAN-based evaluation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "experiment config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.fallthrough();

  std::string mode, condition;
  SyntheticExperimentOptions synth;

  auto* ingest = app.add_subcommand("ingest", "read transcripts, build pairs, vocabulary and contexts");
  auto* profile = app.add_subcommand("profile", "assign OCEAN scores to every retained speaker");
  auto* pretrain = app.add_subcommand("pretrain", "train the unconditioned base model");
  auto* train = app.add_subcommand("train", "fine-tune a persona model");
  train->add_option("--mode", mode, "speaker or personality")->required();
  auto* generate = app.add_subcommand("generate", "sample responses for the evaluation contexts");
  generate->add_option("--mode", mode, "speaker or personality")->required();
  auto* filter = app.add_subcommand("filter", "drop the most frequent common responses");
  filter->add_option("--mode", mode, "speaker or personality")->required();
  auto* evaluate = app.add_subcommand("evaluate", "classify OCEAN samples under cross-validation");
  evaluate->add_option("--condition", condition, "gold, speaker, personality, baseline or bow")->required();
  auto* extreme = app.add_subcommand("extreme", "five one-trait-high personalities as a 5-class problem");
  auto* significance = app.add_subcommand("significance", "pairwise tests between conditions");
  auto* report = app.add_subcommand("report", "render tables from the evaluation manifests in --out");
  auto* run = app.add_subcommand("run", "the whole experiment");
  auto* synth_cmd = app.add_subcommand("synth", "write the synthetic two-persona corpus and a desk config to --out");
  synth_cmd->add_option("--lexicon", synth.lexicon, "lexicon whose categories supply the styles");
  synth_cmd->add_option("--scenes", synth.scenes)->capture_default_str();
  synth_cmd->add_option("--turns", synth.turns, "turns per scene")->capture_default_str();
  synth_cmd->add_option("--contexts", synth.contexts, "held-out contexts")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) {
      if (g.seed) synth.seed = *g.seed;
      std::cout << "wrote " << write_synthetic_experiment(g.out, synth).string() << "\n";
      return 0;
    }
    if (report->parsed() && g.config.empty()) {
      std::cout << render_report(g.out);
      return 0;
    }
    Experiment exp(load(g), g.out, &std::cerr);
    if (ingest->parsed()) exp.ingest();
    if (profile->parsed()) {
      exp.profile();
      std::cout << read_file((fs::path(g.out) / "profile" / "ocean.tsv").string());
    }
    if (pretrain->parsed()) exp.pretrain();
    if (train->parsed()) exp.train(mode_of(mode));
    if (generate->parsed()) exp.generate(mode_of(mode));
    if (filter->parsed()) exp.filter(mode_of(mode));
    if (evaluate->parsed()) {
      auto c = parse_condition(condition);
      if (!c) throw std::invalid_argument("unknown condition '" + condition + "'");
      exp.evaluate(*c);
      std::cout << render_report(g.out);
    }
    if (extreme->parsed()) exp.extreme();
    if (significance->parsed()) exp.significance();
    if (report->parsed() || run->parsed()) std::cout << read_file(exp.report().string());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
