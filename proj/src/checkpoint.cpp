#include "persona/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "persona/seq2seq.hpp"
#include "persona/text_util.hpp"

namespace persona {

namespace {

constexpr const char* kMagic = "persona-checkpoint 1";

class LineReader {
 public:
  LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(source_, lineno_ + 1, "unexpected end of checkpoint");
    ++lineno_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  // Returns the remainder after `keyword `.
  std::string expect(std::string_view keyword) {
    auto line = next();
    if (!line.starts_with(keyword) || (line.size() > keyword.size() && line[keyword.size()] != ' ')) {
      fail("expected '" + std::string(keyword) + "'");
    }
    return line.size() > keyword.size() ? line.substr(keyword.size() + 1) : std::string();
  }

  std::size_t expect_count(std::string_view keyword) {
    auto v = parse_int(expect(keyword));
    if (!v || *v < 0) fail("bad count after '" + std::string(keyword) + "'");
    return static_cast<std::size_t>(*v);
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, lineno_, what); }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t lineno_ = 0;
};

}  // namespace

void save_checkpoint(const PersonaModel& model, std::ostream& out) {
  out << kMagic << '\n';
  out << "config " << model.config().serialize() << '\n';
  out << "seed " << model.seed() << '\n';
  out << "speakers " << model.speakers().size() << '\n';
  for (const auto& s : model.speakers()) out << s << '\n';
  out << "ocean " << model.ocean_table().size() << '\n';
  for (const auto& [speaker, o] : model.ocean_table()) out << speaker << '\t' << o.to_string() << '\n';
  out << "params " << model.params().tensors().size() << '\n';
  for (const auto& [name, t] : model.params().tensors()) {
    out << "param " << name << ' ' << t.shape.size();
    for (auto d : t.shape) out << ' ' << d;
    out << '\n';
    for (std::size_t i = 0; i < t.value.size(); ++i) {
      if (i) out << ' ';
      out << format_double(t.value[i]);
    }
    out << '\n';
  }
  out << "end\n";
}

PersonaModel load_checkpoint(std::istream& in, const std::string& source) {
  LineReader r(in, source);
  if (r.next() != kMagic) r.fail("not a persona checkpoint");
  ModelConfig cfg;
  try {
    cfg = ModelConfig::parse(r.expect("config"));
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
  auto seed_text = r.expect("seed");
  std::uint64_t seed = 0;
  {
    std::istringstream ss(seed_text);
    if (!(ss >> seed)) r.fail("bad seed");
  }
  std::vector<std::string> speakers(r.expect_count("speakers"));
  for (auto& s : speakers) s = r.next();
  std::map<std::string, OceanScores> ocean;
  const std::size_t n_ocean = r.expect_count("ocean");
  for (std::size_t i = 0; i < n_ocean; ++i) {
    auto line = r.next();
    auto f = split(line, '\t');
    if (f.size() != 2) r.fail("bad ocean record");
    auto o = OceanScores::parse(f[1]);
    if (!o) r.fail("bad ocean scores");
    ocean[std::string(f[0])] = *o;
  }
  ParameterSet params;
  const std::size_t n_params = r.expect_count("params");
  for (std::size_t i = 0; i < n_params; ++i) {
    const auto header_line = r.expect("param");
    auto header = split(header_line, ' ');
    if (header.size() < 2) r.fail("bad param header");
    auto rank = parse_int(header[1]);
    if (!rank || *rank < 0 || header.size() != static_cast<std::size_t>(*rank) + 2) r.fail("bad param rank");
    std::vector<std::size_t> shape;
    for (std::size_t k = 0; k < static_cast<std::size_t>(*rank); ++k) {
      auto d = parse_int(header[k + 2]);
      if (!d || *d < 0) r.fail("bad param dimension");
      shape.push_back(static_cast<std::size_t>(*d));
    }
    Tensor t(shape);
    auto values = r.next();
    auto parts = split(values, ' ');
    if (t.size() == 0 ? !(parts.size() == 1 && parts[0].empty()) : parts.size() != t.size()) {
      r.fail("value count does not match shape of " + std::string(header[0]));
    }
    for (std::size_t k = 0; k < t.size(); ++k) {
      auto v = parse_double(parts[k]);
      if (!v) r.fail("bad value in " + std::string(header[0]));
      t.value[k] = *v;
    }
    params.add(std::string(header[0]), std::move(t));
  }
  if (r.next() != "end") r.fail("missing end marker");
  try {
    return PersonaModel(cfg, std::move(speakers), std::move(params), std::move(ocean), seed);
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
}

void save_checkpoint_file(const PersonaModel& model, const std::string& path) {
  std::ostringstream ss;
  save_checkpoint(model, ss);
  write_file(path, ss.str());
}

PersonaModel load_checkpoint_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_checkpoint(in, path);
}

}  // namespace persona
