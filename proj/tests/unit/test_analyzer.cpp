#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "morphdis/analyzer.hpp"
#include "morphdis/errors.hpp"

using namespace morphdis;

namespace {

Corpus ktb_corpus(const FeatureSchema& s) {
  const Analysis verb = testutil::analysis(s, {{"pos", "verb"}, {"gen", "m"}, {"num", "s"}}, "katab", "kataba");
  const Analysis noun = testutil::analysis(s, {{"pos", "noun"}, {"num", "p"}}, "kitAb", "kutub");
  const Analysis passive = testutil::analysis(s, {{"pos", "verb"}, {"gen", "m"}, {"num", "s"}}, "katab", "kutiba");
  const Analysis prep = testutil::analysis(s, {{"pos", "prep"}}, "bi", "bi");
  return testutil::corpus(s, {testutil::sentence("a", {{"ktb", verb}, {"b", prep}}),
                              testutil::sentence("b", {{"ktb", noun}, {"ktb", verb}}),
                              testutil::sentence("c", {{"ktb", passive}, {"b", prep}})});
}

// word -> set of canonical analyses, straight from the corpus
std::map<std::string, std::set<std::string>> brute_force(const Corpus& c) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& s : c.sentences)
    for (const auto& t : s.tokens) out[t.raw].insert(canonical_analysis(t.analysis));
  return out;
}

std::map<std::string, std::set<std::string>> as_sets(const AnalyzerDB& db) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& [w, v] : db.entries())
    for (const auto& a : v) out[w].insert(canonical_analysis(a));
  return out;
}

Corpus random_corpus(Rng& rng, const FeatureSchema& s, std::size_t sentences) {
  Corpus c = testutil::corpus(s, {});
  for (std::size_t i = 0; i < sentences; ++i) {
    Sentence sent;
    sent.id = "r" + std::to_string(i);
    for (std::size_t n = 1 + rng.below(8); n > 0; --n)
      sent.tokens.push_back({"w" + std::to_string(rng.below(15)), std::nullopt,
                             testutil::analysis(s, testutil::random_bundle(rng, s), "l" + std::to_string(rng.below(2)))});
    c.sentences.push_back(std::move(sent));
  }
  return c;
}

}  // namespace

TEST_CASE("compile collects distinct gold analyses per form") {
  const FeatureSchema s = testutil::toy_schema();
  const AnalyzerDB db = compile_analyzer(ktb_corpus(s));
  REQUIRE(db.analyze("ktb").has_value());
  CHECK(db.analyze("ktb")->size() == 3);
  CHECK(db.analyze("b")->size() == 1);
  CHECK_FALSE(db.analyze("xyz").has_value());
  CHECK(db.provenance() == "compiled-from-train");
  CHECK(db.backoff() == BackoffPolicy::kKeepPredictions);
  const AnalyzerStats st = db.stats();
  CHECK(st.forms == 2);
  CHECK(st.analyses == 4);
  CHECK(st.max_analyses_per_form == 3);
  CHECK(st.mean_analyses_per_form == doctest::Approx(2.0));
}

TEST_CASE("repeated analyses are stored once") {
  const FeatureSchema s = testutil::toy_schema();
  const Analysis a = testutil::analysis(s, {{"pos", "noun"}});
  std::vector<std::pair<std::string, Analysis>> toks(100, {"kitAb", a});
  const AnalyzerDB db = compile_analyzer(testutil::corpus(s, {testutil::sentence("x", toks)}));
  CHECK(db.analyze("kitAb")->size() == 1);
}

TEST_CASE("empty corpus cannot be compiled") {
  CHECK_THROWS_AS(compile_analyzer(testutil::corpus(testutil::toy_schema(), {})), EmptyCorpus);
}

TEST_CASE("backoff policy names") {
  CHECK(parse_backoff("KEEP_PREDICTIONS") == BackoffPolicy::kKeepPredictions);
  CHECK(parse_backoff("synthesize") == BackoffPolicy::kSynthesizeFromPredictions);
  CHECK(backoff_name(BackoffPolicy::kSynthesizeFromPredictions) == "SYNTHESIZE_FROM_PREDICTIONS");
  CHECK_THROWS_AS(parse_backoff("guess"), ValueError);
}

TEST_CASE("diacritic variants meet after normalizing both sides") {
  const FeatureSchema s = testutil::toy_schema();
  const auto demo = diacritic_set_from("aiu");
  Corpus train = testutil::corpus(s, {testutil::sentence("a", {{"kataba", testutil::analysis(s, {{"pos", "verb"}})}})});
  normalize_corpus(train, demo);
  const AnalyzerDB db = compile_analyzer(train);
  CHECK_FALSE(db.analyze("kutiba").has_value());
  CHECK(db.analyze(strip_diacritics("kutiba", demo)).has_value());
}

TEST_CASE("save and load round-trip; file is sorted and versioned") {
  const FeatureSchema s = testutil::toy_schema();
  const AnalyzerDB db = compile_analyzer(ktb_corpus(s), BackoffPolicy::kSynthesizeFromPredictions);
  const auto dir = testutil::temp_dir("analyzer-io");
  save_db(dir / "a.db", db);
  CHECK(load_db(dir / "a.db", s) == db);
  const std::string text = read_file(dir / "a.db");
  CHECK(text.find("\"format_version\":1") != std::string::npos);
  CHECK(text.find("\"word\":\"b\"") < text.find("\"word\":\"ktb\""));
  CHECK(analyzer_to_text(parse_analyzer(text, s)) == text);
}

TEST_CASE("corrupt analyzer files") {
  const FeatureSchema s = testutil::toy_schema();
  const std::string text = analyzer_to_text(compile_analyzer(ktb_corpus(s)));
  SUBCASE("truncated") {
    CHECK_THROWS_AS(parse_analyzer(text.substr(0, text.size() / 2), s), FormatError);
    CHECK_THROWS_AS(parse_analyzer(text.substr(0, text.find('\n') + 1), s), FormatError);
  }
  SUBCASE("empty") { CHECK_THROWS_AS(parse_analyzer("", s), FormatError); }
  SUBCASE("future version") {
    std::string future = text;
    future.replace(future.find("\"format_version\":1"), 18, "\"format_version\":99");
    CHECK_THROWS_AS(parse_analyzer(future, s), VersionError);
  }
  SUBCASE("value outside schema") {
    std::string bad = text;
    bad.replace(bad.find("\"prep\""), 6, "\"banana\"");
    CHECK_THROWS_AS(parse_analyzer(bad, s), Error);
  }
}

TEST_CASE("property: analyzer holds exactly the gold analyses") {
  Rng rng(21);
  const FeatureSchema s = testutil::toy_schema();
  for (int round = 0; round < 25; ++round) {
    const Corpus c = random_corpus(rng, s, 1 + rng.below(20));
    CHECK(as_sets(compile_analyzer(c)) == brute_force(c));
  }
}

TEST_CASE("property: compilation ignores sentence order and distributes over union") {
  Rng rng(22);
  const FeatureSchema s = testutil::toy_schema();
  for (int round = 0; round < 25; ++round) {
    const Corpus a = random_corpus(rng, s, 1 + rng.below(10));
    Corpus b = random_corpus(rng, s, 1 + rng.below(10));
    for (auto& sent : b.sentences) sent.id = "b" + sent.id;

    Corpus shuffled = a;
    rng.shuffle(shuffled.sentences);
    CHECK(analyzer_to_text(compile_analyzer(shuffled)) == analyzer_to_text(compile_analyzer(a)));

    Corpus both = a;
    both.sentences.insert(both.sentences.end(), b.sentences.begin(), b.sentences.end());
    auto expected = as_sets(compile_analyzer(a));
    for (const auto& [w, set] : as_sets(compile_analyzer(b))) expected[w].insert(set.begin(), set.end());
    CHECK(as_sets(compile_analyzer(both)) == expected);
  }
}
