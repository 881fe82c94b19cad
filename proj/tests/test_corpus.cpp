#include <doctest.h>

#include <set>
#include <sstream>

#include "persona/corpus.hpp"
#include "persona/rng.hpp"
#include "persona/text_util.hpp"

using namespace persona;

TEST_CASE("tokenize lowercases and splits punctuation") {
  CHECK(tokenize("Do you love me?") == Words{"do", "you", "love", "me", "?"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \t ").empty());
  // Punctuation runs become one token per character.
  CHECK(tokenize("I... I don't know") == Words{"i", ".", ".", ".", "i", "don", "'", "t", "know"});
  CHECK(tokenize("Caf\xc3\xa9!") == Words{"caf\xc3\xa9", "!"});
}

TEST_CASE("transcript formats") {
  SUBCASE("three fields") {
    std::istringstream in("s1\tAnn\tHi there.\ns1\tBob\tHey!\ns2\tAnn\tBye\n");
    auto u = ingest_transcript(in);
    REQUIRE(u.size() == 3);
    CHECK(u[0].scene_id == "s1");
    CHECK(u[1].speaker_id == "Bob");
    CHECK(u[2].words == Words{"bye"});
  }
  SUBCASE("two fields with scene separators") {
    std::istringstream in("A\tone\nB\ttwo\n###\nA\tthree\n\n");
    auto u = ingest_transcript(in, "f");
    REQUIRE(u.size() == 3);
    CHECK(u[0].scene_id == u[1].scene_id);
    CHECK(u[1].scene_id != u[2].scene_id);
  }
  SUBCASE("missing speaker is a parse error with the line number") {
    std::istringstream in("A\tone\njust text\n");
    try {
      ingest_transcript(in);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
}

TEST_CASE("filter_speakers threshold") {
  std::vector<Utterance> u;
  for (int i = 0; i < 2500; ++i) u.push_back({"A", "s", "x", {"x"}, {}});
  for (int i = 0; i < 1999; ++i) u.push_back({"B", "s", "x", {"x"}, {}});
  CHECK(filter_speakers(u, 2000) == std::set<std::string>{"A"});
  CHECK(filter_speakers(u, 1) == std::set<std::string>{"A", "B"});
}

TEST_CASE("pairs stay inside scenes") {
  auto utt = [](std::string scene, std::string speaker, std::string text) {
    return Utterance{speaker, scene, text, tokenize(text), {}};
  };
  std::vector<Utterance> u = {utt("1", "A", "t1"), utt("1", "B", "t2"), utt("1", "A", "t3")};
  auto p = pair_consecutive(u);
  REQUIRE(p.size() == 2);
  CHECK(p[0].context == Words{"t1"});
  CHECK(p[0].response == Words{"t2"});
  CHECK(std::get<std::string>(p[0].persona) == "B");
  CHECK(std::get<std::string>(p[1].persona) == "A");

  std::vector<Utterance> two = {utt("1", "A", "a"), utt("1", "B", "b"), utt("2", "A", "c"), utt("2", "B", "d")};
  CHECK(pair_consecutive(two).size() == 2);
}

TEST_CASE("pair count equals sum over scenes of turns minus one") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Utterance> u;
    std::size_t expected = 0;
    const std::size_t scenes = 1 + rng.below(6);
    for (std::size_t s = 0; s < scenes; ++s) {
      const std::size_t turns = rng.below(5);
      expected += turns > 0 ? turns - 1 : 0;
      for (std::size_t t = 0; t < turns; ++t) {
        u.push_back({"S" + std::to_string(rng.below(3)), "scene" + std::to_string(s), "w", {"w"}, {}});
      }
    }
    CHECK(pair_consecutive(u).size() == expected);
  }
}

TEST_CASE("vocabulary ordering, cap and reserved ids") {
  std::map<std::string, std::size_t> counts = {{"b", 5}, {"a", 5}, {"c", 9}, {"d", 1}};
  auto v = Vocabulary::from_counts(counts, 6);
  REQUIRE(v.size() == 6);
  CHECK(v.token(Vocabulary::kPad) == "<pad>");
  CHECK(v.token(Vocabulary::kUnk) == "<unk>");
  CHECK(v.token(Vocabulary::kStart) == "<s>");
  CHECK(v.token(Vocabulary::kEnd) == "</s>");
  CHECK(v.token(4) == "c");
  CHECK(v.token(5) == "a");   // tie with "b" broken lexicographically
  CHECK(v.id("d") == Vocabulary::kUnk);
  CHECK(v.encode({"c", "zzz"}) == TokenIds{4, Vocabulary::kUnk});

  std::stringstream s;
  v.save(s);
  auto back = Vocabulary::load(s);
  CHECK(back.tokens() == v.tokens());
}

TEST_CASE("encode_pairs truncates and terminates") {
  std::vector<TextPair> pairs = {{std::string("A"), {"a", "b", "c"}, {"a", "b", "c"}},
                                 {std::string("A"), {}, {"a"}},
                                 {std::string("A"), {"a"}, {}}};
  auto v = build_vocabulary(pairs, 100);
  auto enc = encode_pairs(pairs, v, 2);
  REQUIRE(enc.size() == 1);
  CHECK(enc[0].context.size() == 2);
  CHECK(enc[0].response.size() == 2);
  CHECK(enc[0].response.back() == Vocabulary::kEnd);
  for (auto id : enc[0].context) CHECK(id < static_cast<TokenId>(v.size()));
}

TEST_CASE("split_dataset") {
  std::vector<int> items(10);
  for (int i = 0; i < 10; ++i) items[i] = i;
  auto s = split_dataset(items, 2, 9);
  CHECK(s.train.size() == 8);
  CHECK(s.validation.size() == 2);
  std::set<int> all(s.train.begin(), s.train.end());
  for (int v : s.validation) CHECK(all.insert(v).second);
  CHECK(all.size() == 10);
  auto again = split_dataset(items, 2, 9);
  CHECK(again.validation == s.validation);
  CHECK_THROWS_AS(split_dataset(items, 10, 1), std::invalid_argument);
}

TEST_CASE("dataset round trip keeps OCEAN personas") {
  OceanScores o;
  o.values = {6.5, 3.5, 3.5, 3.5, 3.5};
  std::vector<TextPair> pairs = {{std::string("Ann"), {"hi"}, {"hey", "."}}, {o, {"a", "b"}, {"c"}}};
  std::stringstream s;
  write_dataset(s, pairs);
  auto back = read_dataset(s);
  REQUIRE(back.size() == 2);
  CHECK(std::get<std::string>(back[0].persona) == "Ann");
  CHECK(std::get<OceanScores>(back[1].persona) == o);
  CHECK(back[1].context == Words{"a", "b"});
}

TEST_CASE("annotate_with_ocean") {
  OceanScores o;
  o.values = {1, 2, 3, 4, 5};
  std::vector<TextPair> pairs = {{std::string("A"), {"x"}, {"y"}}};
  auto out = annotate_with_ocean(pairs, {{"A", o}});
  CHECK(std::get<OceanScores>(out[0].persona) == o);
}

TEST_CASE("rng determinism and keyed seeds") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  CHECK(derive_seed(1, "ingest") != derive_seed(1, "profile"));
  CHECK(derive_seed(1, "ingest") == derive_seed(1, "ingest"));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  Rng r(7);
  auto s = r.sample_without_replacement(50, 50);
  std::set<std::size_t> uniq(s.begin(), s.end());
  CHECK(uniq.size() == 50);
  for (int i = 0; i < 1000; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("format_double round trips") {
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    double v = (r.uniform() - 0.5) * std::pow(10.0, static_cast<double>(r.below(40)) - 20.0);
    CHECK(*parse_double(format_double(v)) == v);
  }
}
