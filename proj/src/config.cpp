#include "persona/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "persona/text_util.hpp"

namespace persona {

namespace pt = boost::property_tree;

namespace {

std::string filter_mode_name(FilterMode m) { return m == FilterMode::kCommon ? "common" : "global"; }

std::string join_numbers(const std::vector<double>& v) {
  std::vector<std::string> parts;
  for (double x : v) parts.push_back(format_double(x));
  return join(parts, ",");
}

// One key: how to read it and how to print it back.
struct Key {
  std::function<void(const std::string&)> read;
  std::function<std::string()> write;
};

using Schema = std::map<std::string, std::map<std::string, Key>>;

std::size_t to_count(const std::string& v) {
  auto n = parse_int(trim(v));
  if (!n || *n < 0) throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(*n);
}

double to_double(const std::string& v) {
  auto d = parse_double(trim(v));
  if (!d) throw std::invalid_argument("expected a number, got '" + v + "'");
  return *d;
}

bool to_bool(const std::string& v) {
  auto t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::uint64_t to_u64(const std::string& v) {
  const auto t = std::string(trim(v));
  std::size_t used = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(t, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != t.size() || t.front() == '-') throw std::invalid_argument("expected a seed, got '" + v + "'");
  return n;
}

Key count_key(std::size_t& field) {
  return {[&field](const std::string& v) { field = to_count(v); }, [&field] { return std::to_string(field); }};
}
Key double_key(double& field) {
  return {[&field](const std::string& v) { field = to_double(v); }, [&field] { return format_double(field); }};
}
Key string_key(std::string& field) {
  return {[&field](const std::string& v) { field = std::string(trim(v)); }, [&field] { return field; }};
}

Schema schema(ExperimentConfig& c) {
  Schema s;
  s["run"]["seed"] = {[&c](const std::string& v) { c.master_seed = to_u64(v); },
                      [&c] { return std::to_string(c.master_seed); }};

  auto& d = s["data"];
  d["series"] = string_key(c.data.series);
  d["transcripts"] = {[&c](const std::string& v) {
                        c.data.transcripts.clear();
                        for (auto p : split(v, ',')) {
                          if (!trim(p).empty()) c.data.transcripts.emplace_back(trim(p));
                        }
                      },
                      [&c] { return join(c.data.transcripts, ","); }};
  d["subtitles"] = string_key(c.data.subtitles);
  d["contexts"] = string_key(c.data.contexts);
  d["lexicon"] = string_key(c.data.lexicon);
  d["norms"] = string_key(c.data.norms);
  d["traits"] = string_key(c.data.traits);
  d["min_turns"] = count_key(c.data.min_turns);
  d["validation_count"] = count_key(c.data.validation_count);
  d["heldout_contexts"] = count_key(c.data.heldout_contexts);
  d["max_contexts"] = count_key(c.data.max_contexts);

  auto& m = s["model"];
  m["layers"] = count_key(c.model.layers);
  m["hidden"] = count_key(c.model.hidden);
  m["vocab_size"] = count_key(c.model.vocab_size);
  m["max_input_length"] = count_key(c.model.max_input_length);
  m["batch_size"] = count_key(c.model.batch_size);
  m["dropout"] = double_key(c.model.dropout);
  m["learning_rate"] = double_key(c.model.learning_rate);
  m["halve_after"] = count_key(c.model.halve_after);
  m["clip_threshold"] = double_key(c.model.clip_threshold);
  m["init_range"] = double_key(c.model.init_range);

  s["training"]["pretrain_iterations"] = count_key(c.training.pretrain_iterations);
  s["training"]["finetune_iterations"] = count_key(c.training.finetune_iterations);

  s["profile"]["n_samples"] = count_key(c.profile.n_samples);
  s["profile"]["sample_size"] = count_key(c.profile.sample_size);

  s["generation"]["top_k"] = count_key(c.generation.top_k);
  s["generation"]["max_response_length"] = count_key(c.generation.max_response_length);

  s["filter"]["n"] = count_key(c.filter.n);
  s["filter"]["mode"] = {[&c](const std::string& v) {
                           auto mode = parse_filter_mode(trim(v));
                           if (!mode) throw std::invalid_argument("filter mode must be common or global");
                           c.filter.mode = *mode;
                         },
                         [&c] { return filter_mode_name(c.filter.mode); }};

  auto& e = s["evaluation"];
  e["n_samples"] = count_key(c.evaluation.n_samples);
  e["sample_size"] = count_key(c.evaluation.sample_size);
  e["folds"] = count_key(c.evaluation.folds);
  e["iterations"] = count_key(c.evaluation.iterations);
  e["c_grid"] = {[&c](const std::string& v) {
                   c.evaluation.c_grid.clear();
                   for (auto p : split(v, ',')) c.evaluation.c_grid.push_back(to_double(std::string(p)));
                 },
                 [&c] { return join_numbers(c.evaluation.c_grid); }};

  e["bow_top_n"] = count_key(c.evaluation.bow_top_n);
  e["bow_remove_stop_words"] = {[&c](const std::string& v) { c.evaluation.bow_remove_stop_words = to_bool(v); },
                                [&c] { return std::string(c.evaluation.bow_remove_stop_words ? "true" : "false"); }};

  s["extreme"]["enabled"] = {[&c](const std::string& v) { c.extreme.enabled = to_bool(v); },
                             [&c] { return std::string(c.extreme.enabled ? "true" : "false"); }};
  s["extreme"]["high"] = double_key(c.extreme.high);
  s["extreme"]["rest"] = double_key(c.extreme.rest);
  return s;
}

bool is_path_key(const std::string& section, const std::string& key) {
  static const std::set<std::string> keys = {"transcripts", "subtitles", "contexts", "lexicon", "norms", "traits"};
  return section == "data" && keys.count(key);
}

}  // namespace

ModelConfig desk_model() {
  ModelConfig m;
  m.vocab_size = 5000;
  return m;
}

void ExperimentConfig::validate() const {
  auto model_copy = model;
  model_copy.validate();
  generation.validate();
  if (data.transcripts.empty()) throw std::invalid_argument("config: data.transcripts is empty");
  for (const auto* p : {&data.lexicon, &data.norms, &data.traits}) {
    if (p->empty()) throw std::invalid_argument("config: lexicon, norms and traits are required");
  }
  auto must_exist = [](const std::string& p) {
    if (!p.empty() && !std::filesystem::exists(p)) throw std::invalid_argument("config: no such file " + p);
  };
  for (const auto& t : data.transcripts) must_exist(t);
  for (const auto* p : {&data.subtitles, &data.contexts, &data.lexicon, &data.norms, &data.traits}) must_exist(*p);
  if (data.min_turns == 0) throw std::invalid_argument("config: min_turns must be at least 1");
  if (data.contexts.empty() && data.heldout_contexts == 0) {
    throw std::invalid_argument("config: need a contexts file or a held-out context count");
  }
  if (profile.n_samples == 0 || profile.sample_size == 0) throw std::invalid_argument("config: empty profile plan");
  if (evaluation.n_samples == 0 || evaluation.sample_size == 0) {
    throw std::invalid_argument("config: empty evaluation sampling plan");
  }
  if (evaluation.folds < 2 || evaluation.iterations < 2) {
    throw std::invalid_argument("config: evaluation needs >= 2 folds and >= 2 iterations");
  }
  if (evaluation.n_samples < evaluation.folds) throw std::invalid_argument("config: fewer samples than folds");
  if (evaluation.c_grid.empty()) throw std::invalid_argument("config: empty C grid");
  for (double c : evaluation.c_grid) {
    if (!(c > 0.0)) throw std::invalid_argument("config: C values must be positive");
  }
  if (!(extreme.high >= kOceanMin && extreme.high <= kOceanMax && extreme.rest >= kOceanMin &&
        extreme.rest <= kOceanMax)) {
    throw std::invalid_argument("config: extreme trait values must lie in [1, 7]");
  }
}

std::string ExperimentConfig::canonical(const std::string& section) const {
  auto copy = *this;
  auto s = schema(copy);
  std::ostringstream out;
  for (const auto& [name, keys] : s) {
    if (!section.empty() && name != section) continue;
    out << '[' << name << "]\n";
    for (const auto& [key, k] : keys) out << key << " = " << k.write() << '\n';
  }
  if (!section.empty() && !s.count(section)) throw std::invalid_argument("config has no section " + section);
  return out.str();
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& source) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(source, e.line(), e.message());
  }
  ExperimentConfig c;
  auto s = schema(c);
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw std::invalid_argument(source + ": key '" + section + "' outside a section");
    auto sec = s.find(section);
    if (sec == s.end()) throw std::invalid_argument(source + ": unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      auto k = sec->second.find(key);
      if (k == sec->second.end()) throw std::invalid_argument(source + ": unknown key " + section + "." + key);
      std::string v = value.get_value<std::string>();
      if (is_path_key(section, key)) {
        std::vector<std::string> resolved;
        for (auto p : split(v, ',')) {
          auto t = std::string(trim(p));
          if (t.empty()) continue;
          std::filesystem::path path(t);
          resolved.push_back((path.is_absolute() ? path : base_dir / path).lexically_normal().string());
        }
        v = join(resolved, ",");
      }
      try {
        k->second.read(v);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(source + ": " + section + "." + key + ": " + e.what());
      }
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  auto c = parse_config(read_file(path.string()), std::filesystem::absolute(base), path.string());
  c.validate();
  return c;
}

ExperimentConfig full_scale_config() {
  ExperimentConfig c;
  c.model = ModelConfig::full_scale();
  c.data.min_turns = 2000;
  c.data.validation_count = 2000;
  c.data.heldout_contexts = 0;
  c.training.pretrain_iterations = 15;
  c.training.finetune_iterations = 30;
  c.profile.n_samples = 50;
  c.profile.sample_size = 500;
  c.filter.n = 100;
  c.evaluation = EvaluationParams{};
  return c;
}

}  // namespace persona
