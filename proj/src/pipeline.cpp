#include "persona/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "persona/checkpoint.hpp"
#include "persona/corpus.hpp"
#include "persona/evaluation.hpp"
#include "persona/generate.hpp"
#include "persona/rng.hpp"
#include "persona/seq2seq.hpp"
#include "persona/text_util.hpp"

namespace persona {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
// Persona written for pretraining pairs, which carry no speaker.
constexpr const char* kNoPersona = "-";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const fs::path& p) { return hex64(fnv1a64(read_file(p.string()))); }

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) { write_file(p.string(), j.dump(2) + "\n"); }

template <typename Fn>
void write_with(const fs::path& p, Fn&& fn) {
  std::ostringstream s;
  fn(s);
  write_file(p.string(), s.str());
}

std::string mode_name(Conditioning mode) { return std::string(to_string(mode)); }

void require_persona_mode(Conditioning mode) {
  if (mode == Conditioning::kNone) throw std::invalid_argument("persona stages need speaker or personality mode");
}

std::vector<TextPair> read_dataset_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return read_dataset(in, p.string());
}

Vocabulary read_vocab(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return Vocabulary::load(in, p.string());
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(read_file(p.string()));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::map<std::string, OceanScores> read_ocean_table(const fs::path& p) {
  std::map<std::string, OceanScores> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(p)) {
    ++lineno;
    auto f = split(line, '\t');
    auto o = f.size() == 2 ? OceanScores::parse(f[1]) : std::nullopt;
    if (!o) throw ParseError(p.string(), lineno, "expected speaker<TAB>o,c,e,a,n");
    out[std::string(f[0])] = *o;
  }
  return out;
}

// `speaker<TAB>text` lines into per-speaker word lists.
std::map<std::string, std::vector<Words>> read_speaker_lines(const fs::path& p) {
  std::map<std::string, std::vector<Words>> out;
  std::size_t lineno = 0;
  for (const auto& line : read_lines(p)) {
    ++lineno;
    auto f = split(line, '\t');
    if (f.size() != 2) throw ParseError(p.string(), lineno, "expected persona<TAB>text");
    out[std::string(f[0])].push_back(tokenize(f[1]));
  }
  return out;
}

json metrics_json(const ClassMetrics& m) {
  return json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

json report_json(const ClassificationReport& r, const std::vector<std::string>& classes) {
  json per_class = json::array();
  for (std::size_t k = 0; k < r.per_class.size(); ++k) {
    auto m = metrics_json(r.per_class[k]);
    m["name"] = classes.at(k);
    per_class.push_back(m);
  }
  return json{{"c", r.c},
              {"folds", r.folds},
              {"iterations", r.iterations},
              {"mean", metrics_json(r.mean)},
              {"stddev", metrics_json(r.stddev)},
              {"per_class", per_class},
              {"iteration_f1", r.iteration_f1}};
}

// Responses of each class, in class order, dropping empty responses.
std::vector<ClassCorpus> classes_from(const std::map<std::string, std::vector<Words>>& by_class,
                                      const std::vector<std::string>& order) {
  std::vector<ClassCorpus> out;
  for (const auto& name : order) {
    ClassCorpus c{name, {}};
    auto it = by_class.find(name);
    if (it != by_class.end()) {
      for (const auto& w : it->second) {
        if (!w.empty()) c.utterances.push_back(w);
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string two_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  // Counts UTF-8 code points so the sigma sign does not skew columns.
  std::size_t len = 0;
  for (unsigned char c : s) len += (c & 0xC0) != 0x80;
  if (len < width) s.append(width - len, ' ');
  return s;
}

std::string record_line(const std::string& prefix, const json& r) {
  std::ostringstream s;
  s << prefix;
  for (const char* key : {"precision", "recall", "f1"}) {
    s << ' ' << key << '=' << format_double(r["mean"][key].get<double>()) << ' ' << key
      << "_sd=" << format_double(r["stddev"][key].get<double>());
  }
  s << " c=" << format_double(r["c"].get<double>()) << " iterations=" << r["iterations"].get<std::size_t>();
  return s.str();
}

std::string table_row(const std::string& label, const json& m, const json& sd) {
  return pad(label, 16) + pad(format_metric(m["precision"].get<double>(), sd["precision"].get<double>()), 16) +
         pad(format_metric(m["recall"].get<double>(), sd["recall"].get<double>()), 16) +
         two_decimals(m["f1"].get<double>()) + "\n";
}

std::string table_header(const std::string& first) {
  return pad(first, 16) + pad("Precision", 16) + pad("Recall", 16) + "F1\n";
}

std::string format_p(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, p != 0.0 && p < 1e-3 ? "%.1e" : "%.3f", p);
  return buf;
}

}  // namespace

std::string_view to_string(EvalCondition c) {
  switch (c) {
    case EvalCondition::kBaseline: return "baseline";
    case EvalCondition::kGold: return "gold";
    case EvalCondition::kSpeaker: return "speaker";
    case EvalCondition::kPersonality: return "personality";
    case EvalCondition::kBow: return "bow";
  }
  return "?";
}

std::optional<EvalCondition> parse_condition(std::string_view s) {
  for (auto c : {EvalCondition::kBaseline, EvalCondition::kGold, EvalCondition::kSpeaker, EvalCondition::kPersonality,
                 EvalCondition::kBow}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::string stage_dir_name(EvalCondition c) { return "evaluate_" + std::string(to_string(c)); }

std::string format_metric(double value, double sigma) {
  auto sd = two_decimals(sigma);
  if (sd.starts_with("0.")) sd.erase(0, 1);
  return two_decimals(value) + " (σ=" + sd + ")";
}

std::map<std::string, OceanScores> cmd_profile(const std::map<std::string, std::vector<Words>>& utterances_by_speaker,
                                               const ProfileConfig& config, std::uint64_t seed,
                                               const OceanRecogniser& recogniser) {
  std::map<std::string, OceanScores> out;
  for (const auto& [speaker, utts] : utterances_by_speaker) {
    if (utts.size() < config.sample_size) {
      throw std::invalid_argument("speaker '" + speaker + "' has " + std::to_string(utts.size()) +
                                  " utterances, fewer than the profile sample size " +
                                  std::to_string(config.sample_size));
    }
    out[speaker] = profile_speaker(utts, config.n_samples, config.sample_size, derive_seed(seed, speaker), recogniser);
  }
  return out;
}

Experiment::Experiment(ExperimentConfig config, fs::path out_dir, std::ostream* log)
    : config_(std::move(config)), out_(std::move(out_dir)), log_(log) {
  config_.validate();
  fs::create_directories(out_);
  lock_ = out_ / ".lock";
  int fd = ::open(lock_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw std::runtime_error(out_.string() + " is in use by another run (remove " + lock_.string() +
                               " if that run is gone)");
    }
    throw std::runtime_error("cannot create " + lock_.string() + ": " + std::strerror(errno));
  }
  auto pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

Experiment::~Experiment() {
  std::error_code ec;
  fs::remove(lock_, ec);
}

void Experiment::say(const std::string& line) const {
  if (log_) *log_ << line << std::endl;
}

std::string Experiment::recogniser_material() const {
  return "lexicon " + file_hash(config_.data.lexicon) + "\nnorms " + file_hash(config_.data.norms) + "\ntraits " +
         file_hash(config_.data.traits) + "\n";
}

std::string Experiment::base_material() const { return config_.canonical("run"); }

template <typename Body>
std::string Experiment::stage(const std::string& name, const std::string& material, Body&& body) {
  if (auto it = done_.find(name); it != done_.end()) return it->second;
  const std::string hash =
      hex64(fnv1a64(std::string(kCodeVersion) + "\n" + name + "\n" + base_material() + material));
  const fs::path dir = out_ / name;
  const fs::path manifest_path = dir / kManifest;

  if (fs::exists(manifest_path)) {
    bool intact = false;
    try {
      auto m = read_json(manifest_path);
      intact = m.at("config_hash") == hash && m.at("code_version") == kCodeVersion;
      for (auto& [file, h] : m.at("outputs").items()) {
        if (!intact) break;
        intact = fs::exists(dir / file) && h == file_hash(dir / file);
      }
    } catch (const std::exception&) {
      intact = false;
    }
    if (intact) {
      say("[" + name + "] up to date");
      done_[name] = hash;
      return hash;
    }
  }

  say("[" + name + "] running");
  const std::uint64_t seed = derive_seed(config_.master_seed, name);
  json results;
  try {
    fs::remove_all(dir);
    fs::create_directories(dir);
    results = body(dir, seed);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }

  json outputs = json::object();
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() != kManifest) files.push_back(entry.path());
  }
  for (const auto& f : files) outputs[f.filename().string()] = file_hash(f);
  json manifest{{"stage", name},
                {"config_hash", hash},
                {"code_version", kCodeVersion},
                {"master_seed", config_.master_seed},
                {"stage_seed", seed},
                {"outputs", outputs},
                {"results", results}};
  write_json(manifest_path, manifest);
  done_[name] = hash;
  executed_.push_back(name);
  return hash;
}

std::string Experiment::ingest() {
  std::string material = config_.canonical("data") + "vocab_size " + std::to_string(config_.model.vocab_size) +
                         "\nmax_input_length " + std::to_string(config_.model.max_input_length) + "\n";
  for (const auto& t : config_.data.transcripts) material += "transcript " + file_hash(t) + "\n";
  if (!config_.data.subtitles.empty()) material += "subtitles " + file_hash(config_.data.subtitles) + "\n";
  if (!config_.data.contexts.empty()) material += "contexts " + file_hash(config_.data.contexts) + "\n";

  return stage("ingest", material, [&](const fs::path& dir, std::uint64_t seed) {
    const auto& d = config_.data;
    std::vector<Utterance> utts;
    for (const auto& t : d.transcripts) {
      auto part = ingest_transcript_file(t);
      utts.insert(utts.end(), part.begin(), part.end());
    }
    auto speakers = filter_speakers(utts, d.min_turns);
    if (speakers.size() < 2) {
      throw std::runtime_error(std::to_string(speakers.size()) + " speakers have at least " +
                               std::to_string(d.min_turns) + " turns; need 2");
    }
    auto pairs = retain_responses(pair_consecutive(utts), speakers);

    std::vector<Words> contexts;
    if (!d.contexts.empty()) {
      for (auto& u : ingest_subtitles_file(d.contexts)) {
        if (!u.words.empty()) contexts.push_back(std::move(u.words));
      }
    } else {
      auto held = split_dataset(pairs, d.heldout_contexts, derive_seed(seed, "heldout"));
      for (auto& p : held.validation) contexts.push_back(std::move(p.context));
      pairs = std::move(held.train);
    }
    if (d.max_contexts > 0 && contexts.size() > d.max_contexts) contexts.resize(d.max_contexts);
    if (contexts.empty()) throw std::runtime_error("no evaluation contexts");

    auto split = split_dataset(pairs, d.validation_count, derive_seed(seed, "validation"));

    std::vector<TextPair> pretrain_pairs;
    if (!d.subtitles.empty()) {
      for (auto& p : pair_consecutive(ingest_subtitles_file(d.subtitles))) {
        p.persona = std::string(kNoPersona);
        pretrain_pairs.push_back(std::move(p));
      }
    } else {
      for (auto p : split.train) {
        p.persona = std::string(kNoPersona);
        pretrain_pairs.push_back(std::move(p));
      }
    }
    std::vector<TextPair> vocab_source = split.train;
    if (!d.subtitles.empty()) vocab_source.insert(vocab_source.end(), pretrain_pairs.begin(), pretrain_pairs.end());
    auto vocab = build_vocabulary(vocab_source, config_.model.vocab_size);

    write_with(dir / "train.tsv", [&](std::ostream& o) { write_dataset(o, split.train); });
    write_with(dir / "valid.tsv", [&](std::ostream& o) { write_dataset(o, split.validation); });
    write_with(dir / "pretrain.tsv", [&](std::ostream& o) { write_dataset(o, pretrain_pairs); });
    write_with(dir / "vocab.txt", [&](std::ostream& o) { vocab.save(o); });
    write_with(dir / "contexts.txt", [&](std::ostream& o) {
      for (const auto& c : contexts) o << detokenize(c) << '\n';
    });
    write_with(dir / "speakers.txt", [&](std::ostream& o) {
      for (const auto& s : speakers) o << s << '\n';
    });
    write_with(dir / "utterances.tsv", [&](std::ostream& o) {
      for (const auto& u : utts) {
        if (speakers.count(u.speaker_id) && !u.words.empty()) o << u.speaker_id << '\t' << detokenize(u.words) << '\n';
      }
    });
    say("[ingest] " + std::to_string(speakers.size()) + " speakers, " + std::to_string(split.train.size()) +
        " train / " + std::to_string(split.validation.size()) + " validation pairs, " +
        std::to_string(contexts.size()) + " contexts, |V| = " + std::to_string(vocab.size()));
    return json{{"speakers", std::vector<std::string>(speakers.begin(), speakers.end())},
                {"train_pairs", split.train.size()},
                {"validation_pairs", split.validation.size()},
                {"pretrain_pairs", pretrain_pairs.size()},
                {"contexts", contexts.size()},
                {"vocab_size", vocab.size()}};
  });
}

std::string Experiment::profile() {
  const auto upstream = ingest();
  return stage("profile", "ingest " + upstream + "\n" + config_.canonical("profile") + recogniser_material(),
               [&](const fs::path& dir, std::uint64_t seed) {
                 auto rec = LinearRecogniser::load_files(config_.data.lexicon, config_.data.norms, config_.data.traits);
                 auto table = cmd_profile(read_speaker_lines(out_ / "ingest" / "utterances.tsv"), config_.profile,
                                          seed, rec);
                 write_with(dir / "ocean.tsv", [&](std::ostream& o) {
                   for (const auto& [s, v] : table) o << s << '\t' << v.to_string() << '\n';
                 });
                 json j = json::object();
                 for (const auto& [s, v] : table) j[s] = v.values;
                 return json{{"ocean", j}};
               });
}

std::string Experiment::pretrain() {
  const auto upstream = ingest();
  const std::string material = "ingest " + upstream + "\n" + config_.canonical("model") +
                               "pretrain_iterations " + std::to_string(config_.training.pretrain_iterations) + "\n";
  return stage("pretrain", material, [&](const fs::path& dir, std::uint64_t seed) {
    auto vocab = read_vocab(out_ / "ingest" / "vocab.txt");
    ModelConfig mc = config_.model;
    mc.vocab_size = vocab.size();
    mc.conditioning = Conditioning::kNone;
    PersonaModel model(mc, {}, derive_seed(seed, "init"));
    json history = json::array();
    if (config_.training.pretrain_iterations > 0) {
      auto train_pairs = encode_pairs(read_dataset_file(out_ / "ingest" / "pretrain.tsv"), vocab, mc.max_input_length);
      auto valid = encode_pairs(read_dataset_file(out_ / "ingest" / "valid.tsv"), vocab, mc.max_input_length);
      std::ostringstream log;
      TrainOptions opt;
      opt.iterations = config_.training.pretrain_iterations;
      opt.log = &log;
      Rng rng(derive_seed(seed, "train"));
      auto result = persona::train(model, train_pairs, valid, opt, rng);
      write_file((dir / "train.log").string(), log.str());
      for (const auto& r : result.history) history.push_back({r.iteration, r.train_loss, r.validation_perplexity});
    }
    save_checkpoint_file(model, (dir / "model.ckpt").string());
    return json{{"history", history}};
  });
}

std::string Experiment::train(Conditioning mode) {
  require_persona_mode(mode);
  const auto ingest_hash = ingest();
  const auto pre_hash = pretrain();
  std::string material = "ingest " + ingest_hash + "\npretrain " + pre_hash + "\n" + config_.canonical("model") +
                         "finetune_iterations " + std::to_string(config_.training.finetune_iterations) + "\n";
  if (mode == Conditioning::kPersonality) material += "profile " + profile() + "\n";
  const std::string name = "train_" + mode_name(mode);

  return stage(name, material, [&](const fs::path& dir, std::uint64_t seed) {
    auto vocab = read_vocab(out_ / "ingest" / "vocab.txt");
    auto speakers = read_lines(out_ / "ingest" / "speakers.txt");
    auto base = load_checkpoint_file((out_ / "pretrain" / "model.ckpt").string());
    auto train_text = read_dataset_file(out_ / "ingest" / "train.tsv");
    auto valid_text = read_dataset_file(out_ / "ingest" / "valid.tsv");
    std::map<std::string, OceanScores> table;
    if (mode == Conditioning::kPersonality) {
      table = read_ocean_table(out_ / "profile" / "ocean.tsv");
      train_text = annotate_with_ocean(train_text, table);
      valid_text = annotate_with_ocean(valid_text, table);
    }
    auto model = initialise_from(base, mode, speakers, table, derive_seed(seed, "init"));
    const auto max_len = model.config().max_input_length;
    auto train_pairs = encode_pairs(train_text, vocab, max_len);
    auto valid = encode_pairs(valid_text, vocab, max_len);
    std::ostringstream log;
    TrainOptions opt;
    opt.iterations = config_.training.finetune_iterations;
    opt.log = &log;
    Rng rng(derive_seed(seed, "train"));
    auto result = persona::train(model, train_pairs, valid, opt, rng);
    write_file((dir / "train.log").string(), log.str());
    save_checkpoint_file(model, (dir / "model.ckpt").string());
    json history = json::array();
    for (const auto& r : result.history) history.push_back({r.iteration, r.train_loss, r.validation_perplexity});
    if (!result.history.empty()) {
      say("[" + std::string("train_") + mode_name(mode) + "] validation perplexity " +
          format_double(result.initial_validation_perplexity) + " -> " +
          format_double(result.history.back().validation_perplexity));
    }
    return json{{"initial_validation_perplexity", result.initial_validation_perplexity}, {"history", history}};
  });
}

std::string Experiment::generate(Conditioning mode) {
  require_persona_mode(mode);
  const auto ingest_hash = ingest();
  const auto model_hash = train(mode);
  const std::string name = "generate_" + mode_name(mode);
  const std::string material =
      "ingest " + ingest_hash + "\nmodel " + model_hash + "\n" + config_.canonical("generation");
  return stage(name, material, [&](const fs::path& dir, std::uint64_t seed) {
    auto vocab = read_vocab(out_ / "ingest" / "vocab.txt");
    const auto ckpt = out_ / ("train_" + mode_name(mode)) / "model.ckpt";
    auto model = load_checkpoint_file(ckpt.string());
    std::vector<TokenIds> contexts;
    for (const auto& line : read_lines(out_ / "ingest" / "contexts.txt")) {
      auto ids = vocab.encode(tokenize(line));
      if (ids.size() > model.config().max_input_length) ids.resize(model.config().max_input_length);
      contexts.push_back(std::move(ids));
    }
    // Personality models map each speaker id through their OCEAN table.
    std::vector<Persona> personas;
    for (const auto& s : model.speakers()) personas.emplace_back(s);
    if (mode == Conditioning::kPersonality) {
      personas.clear();
      for (const auto& [s, _] : model.ocean_table()) personas.emplace_back(s);
    }
    GenerationConfig g = config_.generation;
    g.seed = seed;
    auto responses = generate_corpus(model, vocab, contexts, personas, g);
    write_with(dir / "generated.tsv", [&](std::ostream& o) { write_generated(o, responses); });
    return json{{"checkpoint", file_hash(ckpt)}, {"responses", responses.size()}, {"seed", seed}};
  });
}

std::string Experiment::filter(Conditioning mode) {
  require_persona_mode(mode);
  const auto upstream = generate(mode);
  const std::string name = "filter_" + mode_name(mode);
  return stage(name, "generate " + upstream + "\n" + config_.canonical("filter"), [&](const fs::path& dir,
                                                                                      std::uint64_t) {
    std::ifstream in(out_ / ("generate_" + mode_name(mode)) / "generated.tsv");
    ResponsesByPersona grouped;
    for (const auto& r : read_generated(in)) grouped[r.persona].push_back(r.text);
    auto removed = most_frequent_common(grouped, config_.filter.n, config_.filter.mode);
    auto kept = filter_common_frequent(grouped, config_.filter.n, config_.filter.mode);
    write_with(dir / "filtered.tsv", [&](std::ostream& o) {
      for (const auto& [p, list] : kept) {
        for (const auto& r : list) o << p << '\t' << r << '\n';
      }
    });
    write_with(dir / "removed.txt", [&](std::ostream& o) {
      for (const auto& r : removed) o << r << '\n';
    });
    json counts = json::object();
    for (const auto& [p, list] : kept) counts[p] = list.size();
    return json{{"removed", removed}, {"kept", counts}};
  });
}

std::string Experiment::evaluate(EvalCondition condition) {
  const auto ingest_hash = ingest();
  std::string material = "ingest " + ingest_hash + "\n" + config_.canonical("evaluation") + recogniser_material();
  fs::path source = out_ / "ingest" / "utterances.tsv";
  if (condition == EvalCondition::kSpeaker || condition == EvalCondition::kPersonality) {
    const auto mode = condition == EvalCondition::kSpeaker ? Conditioning::kSpeaker : Conditioning::kPersonality;
    material += "filter " + filter(mode) + "\n";
    source = out_ / ("filter_" + mode_name(mode)) / "filtered.tsv";
  }

  return stage(stage_dir_name(condition), material, [&](const fs::path& dir, std::uint64_t seed) {
    const auto& ep = config_.evaluation;
    auto speakers = read_lines(out_ / "ingest" / "speakers.txt");
    auto classes = classes_from(read_speaker_lines(source), speakers);
    // Every condition draws its bundles from the same stream.
    const std::uint64_t sample_seed = derive_seed(config_.master_seed, "eval_samples");
    LabeledSamples samples;
    if (condition == EvalCondition::kBow) {
      samples = bow_features(classes, ep.bow_top_n, ep.n_samples, ep.sample_size, sample_seed,
                             ep.bow_remove_stop_words);
    } else {
      auto rec = LinearRecogniser::load_files(config_.data.lexicon, config_.data.norms, config_.data.traits);
      samples = make_eval_samples(classes, rec, ep.n_samples, ep.sample_size, sample_seed);
    }
    json result;
    if (condition == EvalCondition::kBaseline) {
      result = report_json(shuffle_baseline(samples, ep, seed), speakers);
    } else {
      result = report_json(evaluate_samples(samples, ep, seed), speakers);
      result["baseline"] = report_json(shuffle_baseline(samples, ep, derive_seed(seed, "baseline")), speakers);
    }
    result["condition"] = to_string(condition);
    result["series"] = config_.data.series;
    write_json(dir / "report.json", result);
    say("[" + stage_dir_name(condition) + "] macro F1 " + two_decimals(result["mean"]["f1"].get<double>()));
    return json{{"f1", result["mean"]["f1"]}};
  });
}

std::string Experiment::significance() {
  const std::vector<EvalCondition> conds = {EvalCondition::kBaseline, EvalCondition::kGold, EvalCondition::kSpeaker,
                                            EvalCondition::kPersonality};
  std::string material;
  for (auto c : conds) material += std::string(to_string(c)) + " " + evaluate(c) + "\n";
  return stage("significance", material, [&](const fs::path& dir, std::uint64_t) {
    std::vector<ClassificationReport> reports;
    for (auto c : conds) {
      auto j = read_json(out_ / stage_dir_name(c) / "report.json");
      ClassificationReport r;
      r.iteration_f1 = j["iteration_f1"].get<std::vector<double>>();
      reports.push_back(std::move(r));
    }
    json matrix = json::array();
    std::ostringstream tsv;
    tsv << "condition_a\tcondition_b\tlevene_p\ttest\tt\tdof\tp\n";
    for (std::size_t a = 0; a < conds.size(); ++a) {
      for (std::size_t b = a + 1; b < conds.size(); ++b) {
        auto s = compare_conditions(reports[a], reports[b]);
        matrix.push_back(json{{"a", to_string(conds[a])},
                              {"b", to_string(conds[b])},
                              {"levene_statistic", s.levene.statistic},
                              {"levene_p", s.levene.p_value},
                              {"test", to_string(s.t.variant)},
                              {"t", s.t.statistic},
                              {"dof", s.t.dof},
                              {"p", s.t.p_value}});
        tsv << to_string(conds[a]) << '\t' << to_string(conds[b]) << '\t' << format_double(s.levene.p_value) << '\t'
            << to_string(s.t.variant) << '\t' << format_double(s.t.statistic) << '\t' << format_double(s.t.dof)
            << '\t' << format_double(s.t.p_value) << '\n';
      }
    }
    write_file((dir / "significance.tsv").string(), tsv.str());
    write_json(dir / "significance.json", matrix);
    return json{{"pairs", matrix.size()}};
  });
}

std::string Experiment::extreme() {
  const auto ingest_hash = ingest();
  const auto model_hash = train(Conditioning::kPersonality);
  const std::string material = "ingest " + ingest_hash + "\nmodel " + model_hash + "\n" +
                               config_.canonical("generation") + config_.canonical("filter") +
                               config_.canonical("evaluation") + config_.canonical("extreme") + recogniser_material();
  return stage("extreme", material, [&](const fs::path& dir, std::uint64_t seed) {
    auto vocab = read_vocab(out_ / "ingest" / "vocab.txt");
    auto model = load_checkpoint_file((out_ / "train_personality" / "model.ckpt").string());
    std::vector<TokenIds> contexts;
    for (const auto& line : read_lines(out_ / "ingest" / "contexts.txt")) {
      auto ids = vocab.encode(tokenize(line));
      if (ids.size() > model.config().max_input_length) ids.resize(model.config().max_input_length);
      contexts.push_back(std::move(ids));
    }
    std::vector<Persona> personas;
    std::map<std::string, std::string> type_of;
    std::vector<std::string> types;
    for (std::size_t t = 0; t < kTraitCount; ++t) {
      auto o = extreme_personality(static_cast<Trait>(t), config_.extreme.high, config_.extreme.rest);
      personas.emplace_back(o);
      type_of[persona_label(o)] = std::string(kExtremeTypeNames[t]);
      types.emplace_back(kExtremeTypeNames[t]);
    }
    GenerationConfig g = config_.generation;
    g.seed = derive_seed(seed, "generate");
    auto responses = generate_corpus(model, vocab, contexts, personas, g);
    write_with(dir / "generated.tsv", [&](std::ostream& o) { write_generated(o, responses); });

    ResponsesByPersona grouped;
    for (const auto& r : responses) grouped[type_of.at(persona_label(r.persona))].push_back(r.text);
    auto kept = filter_common_frequent(grouped, config_.filter.n, config_.filter.mode);
    std::map<std::string, std::vector<Words>> by_type;
    for (const auto& [type, list] : kept) {
      for (const auto& r : list) by_type[type].push_back(tokenize(r));
    }
    auto classes = classes_from(by_type, types);
    const auto& ep = config_.evaluation;
    auto rec = LinearRecogniser::load_files(config_.data.lexicon, config_.data.norms, config_.data.traits);
    auto samples = make_eval_samples(classes, rec, ep.n_samples, ep.sample_size, derive_seed(seed, "samples"));
    json result = report_json(evaluate_samples(samples, ep, derive_seed(seed, "evaluate")), types);
    result["baseline"] = report_json(shuffle_baseline(samples, ep, derive_seed(seed, "baseline")), types);
    result["condition"] = "extreme";
    result["series"] = config_.data.series;
    write_json(dir / "report.json", result);
    say("[extreme] average F1 " + two_decimals(result["mean"]["f1"].get<double>()));
    return json{{"f1", result["mean"]["f1"]}};
  });
}

fs::path Experiment::report() {
  std::string material;
  for (auto c : {EvalCondition::kBaseline, EvalCondition::kGold, EvalCondition::kSpeaker,
                 EvalCondition::kPersonality, EvalCondition::kBow}) {
    material += std::string(to_string(c)) + " " + evaluate(c) + "\n";
  }
  material += "significance " + significance() + "\n";
  if (config_.extreme.enabled) material += "extreme " + extreme() + "\n";
  stage("report", material, [&](const fs::path& dir, std::uint64_t) {
    write_file((dir / "report.txt").string(), render_report(out_));
    return json::object();
  });
  return out_ / "report" / "report.txt";
}

fs::path Experiment::run() { return report(); }

std::string render_report(const fs::path& out_dir) {
  std::map<EvalCondition, json> reports;
  for (auto c : {EvalCondition::kBaseline, EvalCondition::kGold, EvalCondition::kSpeaker,
                 EvalCondition::kPersonality, EvalCondition::kBow}) {
    const auto p = out_dir / stage_dir_name(c) / "report.json";
    if (fs::exists(p)) reports[c] = read_json(p);
  }
  const auto extreme_path = out_dir / "extreme" / "report.json";
  std::optional<json> extreme;
  if (fs::exists(extreme_path)) extreme = read_json(extreme_path);
  if (reports.empty() && !extreme) throw std::runtime_error("no evaluation manifests in " + out_dir.string());

  std::ostringstream out;
  std::vector<std::string> records;
  const json& any = reports.empty() ? *extreme : reports.begin()->second;
  out << "Series: " << any["series"].get<std::string>() << "\n\n";

  const std::pair<EvalCondition, const char*> rows[] = {{EvalCondition::kBaseline, "Baseline"},
                                                        {EvalCondition::kGold, "Gold"},
                                                        {EvalCondition::kSpeaker, "Speaker"},
                                                        {EvalCondition::kPersonality, "Personality"}};
  bool table = false;
  for (const auto& [c, label] : rows) {
    auto it = reports.find(c);
    if (it == reports.end()) continue;
    if (!table) out << table_header("Condition");
    table = true;
    out << table_row(label, it->second["mean"], it->second["stddev"]);
  }
  if (table) out << "\n";
  if (auto it = reports.find(EvalCondition::kBow); it != reports.end()) {
    out << "Bag-of-words gold F1: " << two_decimals(it->second["mean"]["f1"].get<double>()) << "\n\n";
  }
  for (const auto& [c, r] : reports) {
    records.push_back(record_line("condition=" + std::string(to_string(c)), r));
    if (r.contains("baseline")) {
      records.push_back(record_line("condition=" + std::string(to_string(c)) + "_shuffled", r["baseline"]));
    }
  }

  if (extreme) {
    const auto& e = *extreme;
    out << table_header("Type");
    for (const auto& pc : e["per_class"]) {
      out << pad(pc["name"].get<std::string>(), 16) << pad(two_decimals(pc["precision"].get<double>()), 16) << pad(two_decimals(pc["recall"].get<double>()), 16)
          << two_decimals(pc["f1"].get<double>()) << "\n";
    }
    out << table_row("Average", e["mean"], e["stddev"]);
    out << table_row("Baseline", e["baseline"]["mean"], e["baseline"]["stddev"]) << "\n";
    records.push_back(record_line("condition=extreme", e));
    records.push_back(record_line("condition=extreme_shuffled", e["baseline"]));
    for (const auto& pc : e["per_class"]) {
      records.push_back("condition=extreme type=" + pc["name"].get<std::string>() +
                        " precision=" + format_double(pc["precision"].get<double>()) +
                        " recall=" + format_double(pc["recall"].get<double>()) +
                        " f1=" + format_double(pc["f1"].get<double>()));
    }
  }

  const auto sig_path = out_dir / "significance" / "significance.json";
  if (fs::exists(sig_path)) {
    out << "Significance (Levene, then Student or Welch t-test on iteration F1)\n";
    for (const auto& s : read_json(sig_path)) {
      out << pad(s["a"].get<std::string>() + " vs " + s["b"].get<std::string>(), 28) << pad(s["test"].get<std::string>(), 9)
          << "p = " << format_p(s["p"].get<double>()) << "\n";
      records.push_back("significance a=" + s["a"].get<std::string>() + " b=" + s["b"].get<std::string>() +
                        " test=" + s["test"].get<std::string>() + " t=" + format_double(s["t"].get<double>()) +
                        " dof=" + format_double(s["dof"].get<double>()) +
                        " p=" + format_double(s["p"].get<double>()) +
                        " levene_p=" + format_double(s["levene_p"].get<double>()));
    }
    out << "\n";
  }

  out << "# records\n";
  for (const auto& r : records) out << r << "\n";
  return out.str();
}

}  // namespace persona
