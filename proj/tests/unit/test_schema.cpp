#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "morphdis/errors.hpp"
#include "morphdis/schema.hpp"

using namespace morphdis;

TEST_CASE("shipped msa schema has the documented cardinalities") {
  const FeatureSchema msa = shipped_schema("msa");
  REQUIRE(msa.size() == 14);
  const std::map<std::string, std::size_t> expected = {
      {"pos", 34}, {"per", 4},  {"gen", 3},  {"num", 5},  {"asp", 4},  {"vox", 4},  {"mod", 5},
      {"stt", 5},  {"cas", 5},  {"prc3", 3}, {"prc2", 9}, {"prc1", 17}, {"prc0", 7}, {"enc0", 48}};
  for (const auto& [name, n] : expected) {
    CAPTURE(name);
    CHECK(msa.feature(name).values.size() == n);
  }
  CHECK_FALSE(msa.has_feature("enc1"));
}

TEST_CASE("dialect schemas add enc1 and enc2") {
  for (const char* v : {"glf", "egy", "lev"}) {
    CAPTURE(v);
    const FeatureSchema s = shipped_schema(v);
    CHECK(s.size() == 16);
    CHECK(s.has_feature("enc1"));
    CHECK(s.has_feature("enc2"));
    CHECK(s.variant() == v);
  }
}

TEST_CASE("defaults: na for inflection, 0 for clitics") {
  const FeatureSchema lev = shipped_schema("lev");
  for (const auto& f : lev.features()) {
    CAPTURE(f.name);
    CHECK(f.has_value(f.default_value));
    if (f.name.rfind("prc", 0) == 0 || f.name.rfind("enc", 0) == 0)
      CHECK(f.default_value == "0");
    else if (f.name != "pos")
      CHECK(f.default_value == "na");
  }
}

TEST_CASE("msa tag space is larger than the observed tag inventory") {
  CHECK(shipped_schema("msa").tag_space_size() >= 2000);
  // product of the cardinalities, computed independently
  std::uint64_t product = 1;
  for (std::uint64_t n : {34, 4, 3, 5, 4, 4, 5, 5, 5, 3, 9, 17, 7, 48}) product *= n;
  CHECK(shipped_schema("msa").tag_space_size() == product);
}

TEST_CASE("serialize in schema order") {
  const FeatureSchema msa = shipped_schema("msa");
  const FeatureBundle b = {{"pos", "noun"}, {"per", "na"}, {"gen", "m"},  {"num", "s"},  {"asp", "na"},
                           {"vox", "na"},   {"mod", "na"}, {"stt", "d"},  {"cas", "n"},  {"prc3", "0"},
                           {"prc2", "0"},   {"prc1", "0"}, {"prc0", "0"}, {"enc0", "0"}};
  CHECK(serialize_unfactored(b, msa) == "noun+na+m+s+na+na+na+d+n+0+0+0+0+0");
  CHECK(parse_unfactored("noun+na+m+s+na+na+na+d+n+0+0+0+0+0", msa) == b);
}

TEST_CASE("empty bundle serializes to all defaults") {
  const FeatureSchema msa = shipped_schema("msa");
  const std::string tag = serialize_unfactored({}, msa);
  CHECK(tag == "noun+na+na+na+na+na+na+na+na+0+0+0+0+0");
  CHECK(parse_unfactored(tag, msa) == msa.defaults());
}

TEST_CASE("closed vocabulary and arity") {
  const FeatureSchema msa = shipped_schema("msa");
  CHECK_THROWS_AS(serialize_unfactored({{"pos", "banana"}}, msa), ValueError);
  CHECK_THROWS_AS(serialize_unfactored({{"enc1", "0"}}, msa), ValueError);
  CHECK_THROWS_AS(parse_unfactored("noun+na+m+s+na+na+na+d+n+0+0+0+0", msa), ParseError);
  CHECK_THROWS_AS(parse_unfactored("noun+na+m+s+na+na+na+d+n+0+0+0+0+0+0", msa), ParseError);
  CHECK_THROWS_AS(parse_unfactored("banana+na+m+s+na+na+na+d+n+0+0+0+0+0", msa), ParseError);
  CHECK_THROWS_AS(parse_unfactored("", msa), ParseError);
}

TEST_CASE("load_schema validation") {
  SUBCASE("minimal one-feature schema") {
    const FeatureSchema s = parse_schema(
        R"({"variant":"mini","version":"1","features":[{"name":"pos","values":["noun"],"default":"noun"}]})");
    CHECK(s.size() == 1);
    CHECK(serialize_unfactored({}, s) == "noun");
  }
  SUBCASE("default outside values") {
    CHECK_THROWS_AS(
        parse_schema(R"({"variant":"x","version":"1","features":[{"name":"pos","values":["noun"],"default":"x"}]})"),
        SchemaError);
  }
  SUBCASE("duplicate feature") {
    CHECK_THROWS_AS(parse_schema(R"({"variant":"x","version":"1","features":[
        {"name":"pos","values":["noun"],"default":"noun"},{"name":"pos","values":["noun"],"default":"noun"}]})"),
                    SchemaError);
  }
  SUBCASE("unknown feature") {
    CHECK_THROWS_AS(
        parse_schema(R"({"variant":"x","version":"1","features":[{"name":"tense","values":["p"],"default":"p"}]})"),
        SchemaError);
  }
  SUBCASE("separator inside a value") {
    CHECK_THROWS_AS(
        parse_schema(R"({"variant":"x","version":"1","features":[{"name":"pos","values":["a+b"],"default":"a+b"}]})"),
        SchemaError);
  }
  SUBCASE("malformed document") { CHECK_THROWS_AS(parse_schema("{not json"), SchemaError); }
}

TEST_CASE("canonical schema text round-trips") {
  for (const char* v : {"msa", "glf", "egy", "lev"}) {
    const FeatureSchema s = shipped_schema(v);
    const std::string text = canonical_schema_text(s);
    CHECK(canonical_schema_text(parse_schema(text)) == text);
  }
}

TEST_CASE("reduced schema names resolve") {
  const FeatureSchema r = resolve_schema("lev_all10");
  CHECK(r.size() == 10);
  CHECK(r.variant() == "lev_all10");
  CHECK_FALSE(r.has_feature("cas"));
}

TEST_CASE("property: serialization round-trips and is injective") {
  Rng rng(99);
  for (const char* v : {"msa", "lev"}) {
    const FeatureSchema s = shipped_schema(v);
    std::set<FeatureBundle> bundles;
    std::set<std::string> tags;
    for (int i = 0; i < 2000; ++i) {
      const FeatureBundle b = testutil::random_bundle(rng, s);
      const std::string tag = serialize_unfactored(b, s);
      REQUIRE(parse_unfactored(tag, s) == b);
      REQUIRE(serialize_unfactored(parse_unfactored(tag, s), s) == tag);
      bundles.insert(b);
      tags.insert(tag);
    }
    CHECK(bundles.size() == tags.size());
  }
}
