#include <doctest.h>

#include <sstream>

#include "persona/recogniser.hpp"
#include "persona/rng.hpp"
#include "persona/text_util.hpp"

using namespace persona;

namespace {

Lexicon small_lexicon() {
  std::istringstream in(
      "# demo\n[posemo]\nhappy\nenjoy*\n\n[negemo]\nsad\n[self]\ni\n");
  return Lexicon::load(in);
}

NormTable small_norms() {
  std::istringstream in("happy\timageability\t500\nsad\timageability\t300\n");
  return NormTable::load(in);
}

// Returns its fixed scores whatever the input.
class ConstantRecogniser final : public OceanRecogniser {
 public:
  explicit ConstantRecogniser(OceanScores o) : o_(o) {}
  OceanScores score(const UtteranceRefs&) const override { return o_; }

 private:
  OceanScores o_;
};

}  // namespace

TEST_CASE("lexicon parsing") {
  auto lex = small_lexicon();
  REQUIRE(lex.categories().size() == 3);
  const auto* pos = lex.find("posemo");
  REQUIRE(pos);
  CHECK(pos->matches("happy"));
  CHECK(pos->matches("enjoying"));
  CHECK_FALSE(pos->matches("enjo"));
  CHECK_FALSE(pos->matches("unhappy"));

  std::istringstream empty("[a]\nx\n[b]\n");
  CHECK_THROWS_AS(Lexicon::load(empty), ParseError);
  std::istringstream orphan("x\n");
  CHECK_THROWS_AS(Lexicon::load(orphan), ParseError);
}

TEST_CASE("features by hand") {
  std::vector<Words> u = {{"i", "am", "happy"}, {"so", "sad", "happy"}};
  auto f = extract_features(u, small_lexicon(), small_norms());
  CHECK(f.at("cat:posemo") == doctest::Approx(2.0 / 6.0));
  CHECK(f.at("cat:negemo") == doctest::Approx(1.0 / 6.0));
  CHECK(f.at("cat:self") == doctest::Approx(1.0 / 6.0));
  CHECK(f.at("norm:imageability") == doctest::Approx((500.0 * 2 + 300.0) / 3.0));
  CHECK(f.at(kMeanLengthFeature) == doctest::Approx(3.0));
  CHECK(f.at(kTypeTokenFeature) == doctest::Approx(5.0 / 6.0));

  std::vector<Words> uncovered = {{"nothing", "here"}};
  CHECK(extract_features(uncovered, small_lexicon(), small_norms()).at("norm:imageability") == 0.0);
  CHECK_THROWS_AS(extract_features(std::vector<Words>{{}}, small_lexicon(), small_norms()), std::invalid_argument);
}

TEST_CASE("extract_features is order independent bit for bit") {
  Rng rng(5);
  const Words vocab = {"i", "happy", "sad", "enjoyed", "the", "a", "cat", "dog"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Words> u(10);
    for (auto& w : u) {
      for (std::size_t k = 0; k <= rng.below(6); ++k) w.push_back(vocab[rng.below(vocab.size())]);
    }
    auto a = extract_features(u, small_lexicon(), small_norms());
    rng.shuffle(u);
    auto b = extract_features(u, small_lexicon(), small_norms());
    CHECK(a == b);
  }
}

TEST_CASE("linear trait scores") {
  FeatureVector f = {{"cat:posemo", 0.5}};
  TraitModels constant;
  CHECK(score_ocean(f, constant) == OceanScores{});

  TraitModels high;
  for (auto& m : high) m.intercept = 9.0;
  for (double v : score_ocean(f, high).values) CHECK(v == 7.0);

  TraitModels ext;
  ext[static_cast<std::size_t>(Trait::kExtraversion)].weights["cat:posemo"] = 2.0;
  auto o = score_ocean(f, ext);
  CHECK(o.extraversion() == doctest::Approx(5.0));
  CHECK(o.openness() == 4.0);
  CHECK(o.neuroticism() == 4.0);

  TraitModels bad;
  bad[0].weights["cat:missing"] = 1.0;
  CHECK_THROWS_AS(score_ocean(f, bad), std::invalid_argument);
}

TEST_CASE("scores stay within the scale for arbitrary weights") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    TraitModels m;
    for (auto& t : m) {
      t.intercept = (rng.uniform() - 0.5) * 100.0;
      t.weights["x"] = (rng.uniform() - 0.5) * 1e6;
    }
    auto o = score_ocean({{"x", rng.uniform()}}, m);
    CHECK(o.in_range());
  }
}

TEST_CASE("trait model file") {
  std::istringstream in("openness\t__intercept__\t3.5\nE\tcat:posemo\t2\n# c\n");
  auto m = load_trait_models(in);
  CHECK(m[0].intercept == 3.5);
  CHECK(m[2].weights.at("cat:posemo") == 2.0);
  std::istringstream bad("wisdom\tx\t1\n");
  CHECK_THROWS_AS(load_trait_models(bad), ParseError);
}

TEST_CASE("shipped reference recogniser loads and separates styles") {
  const std::string dir = PERSONA_DATA_DIR;
  auto rec = LinearRecogniser::load_files(dir + "/lexicon.txt", dir + "/norms.tsv", dir + "/traits.tsv");
  std::vector<Words> upbeat = {{"we", "love", "our", "friends"}, {"party", "together", "so", "fun"}};
  std::vector<Words> gloomy = {{"i", "am", "sad", "and", "worried"}, {"so", "scared", "and", "lonely"}};
  UtteranceRefs a, b;
  for (auto& u : upbeat) a.push_back(&u);
  for (auto& u : gloomy) b.push_back(&u);
  auto oa = rec.score(a), ob = rec.score(b);
  CHECK(oa.extraversion() > ob.extraversion());
  CHECK(ob.neuroticism() > oa.neuroticism());
}

TEST_CASE("profile_speaker") {
  std::vector<Words> utts;
  for (int i = 0; i < 30; ++i) utts.push_back({i % 2 ? "happy" : "sad", "day"});
  const std::string dir = PERSONA_DATA_DIR;
  auto rec = LinearRecogniser::load_files(dir + "/lexicon.txt", dir + "/norms.tsv", dir + "/traits.tsv");
  auto a = profile_speaker(utts, 5, 10, 99, rec);
  auto b = profile_speaker(utts, 5, 10, 99, rec);
  CHECK(a == b);

  OceanScores fixed;
  fixed.values = {2, 3, 4, 5, 6};
  ConstantRecogniser c(fixed);
  CHECK(profile_speaker(utts, 3, 10, 1, c) == fixed);
  CHECK_THROWS_AS(profile_speaker(utts, 3, 31, 1, c), std::invalid_argument);
}
