#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "morphdis/disambiguator.hpp"
#include "morphdis/errors.hpp"
#include "morphdis/eval.hpp"
#include "morphdis/synth.hpp"
#include "morphdis/tagger.hpp"

using namespace morphdis;

namespace {

SyntheticSpec small_spec(double ambiguity = 3.0) {
  SyntheticSpec spec;
  spec.schema = shipped_schema("lev");
  spec.vocabulary_size = 800;
  spec.ambiguity_rate = ambiguity;
  spec.token_budget = 10000;
  spec.seed = 12345;
  return spec;
}

std::vector<const Corpus*> splits(const SyntheticDataset& d) { return {&d.train, &d.tune, &d.dev, &d.test}; }

}  // namespace

TEST_CASE("token budget sets the sentence count") {
  const SyntheticDataset d = generate_synthetic(small_spec());
  std::size_t sentences = 0, tokens = 0;
  for (const Corpus* c : splits(d)) {
    sentences += c->sentences.size();
    tokens += c->token_count();
  }
  CHECK(sentences >= 999);
  CHECK(sentences <= 1001);
  CHECK(tokens >= 10000);
  CHECK(tokens < 10000 + 15);
  CHECK(d.train.sentences.size() == 800);
  CHECK(d.tune.sentences.size() == 100);
  CHECK(d.dev.sentences.size() == 50);
}

TEST_CASE("generation is deterministic and splits are disjoint") {
  const SyntheticDataset a = generate_synthetic(small_spec());
  const SyntheticDataset b = generate_synthetic(small_spec());
  CHECK(corpus_to_text(a.train) == corpus_to_text(b.train));
  CHECK(corpus_to_text(a.test) == corpus_to_text(b.test));
  CHECK(analyzer_to_text(a.analyzer) == analyzer_to_text(b.analyzer));
  std::set<std::string> ids;
  std::size_t n = 0;
  for (const Corpus* c : splits(a))
    for (const auto& s : c->sentences) {
      ids.insert(s.id);
      ++n;
    }
  CHECK(ids.size() == n);

  SyntheticSpec other = small_spec();
  other.seed = 7;
  other.lexicon_seed = 12345;
  const SyntheticDataset c = generate_synthetic(other);
  CHECK(corpus_to_text(c.train) != corpus_to_text(a.train));
  CHECK(analyzer_to_text(c.analyzer) == analyzer_to_text(a.analyzer));
}

TEST_CASE("the oracle analyzer holds every gold analysis") {
  const SyntheticDataset d = generate_synthetic(small_spec());
  for (const Corpus* c : splits(d))
    for (const auto& s : c->sentences)
      for (const auto& t : s.tokens) {
        const auto found = d.analyzer.analyze(t.raw);
        REQUIRE(found.has_value());
        CHECK(std::find(found->begin(), found->end(), t.analysis) != found->end());
      }
  const AnalyzerStats st = d.analyzer.stats();
  CHECK(st.forms == 800);
  CHECK(st.mean_analyses_per_form == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("ambiguity 1 gives single analyses and perfect oracle retagging") {
  const SyntheticSpec spec = small_spec(1.0);
  const SyntheticDataset d = generate_synthetic(spec);
  CHECK(d.analyzer.stats().max_analyses_per_form == 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  const Corpus tiny = sample_learning_curve(d.train, {200})[0];
  const TaggerModel m = morphdis::train(tiny, TaggerKind::kFactored, spec.schema, cfg);
  const UnigramModel u(tiny, spec.schema);
  std::vector<std::vector<FeatureDistribution>> dists;
  for (const auto& s : d.dev.sentences) dists.push_back(m.predict(s));
  const Corpus pred = apply_predictions(d.dev, dists, spec.schema, &d.analyzer, &u);
  CHECK(accuracy(pred, d.dev, spec.schema, resolve_subset("all", spec.schema)).accuracy == 1.0);
}

TEST_CASE("spec validation and json") {
  SyntheticSpec spec = small_spec();
  spec.vocabulary_size = 0;
  CHECK_THROWS_AS(spec.validate(), ValueError);
  spec = small_spec();
  spec.ambiguity_rate = 0.5;
  CHECK_THROWS_AS(spec.validate(), ValueError);
  spec = small_spec();
  spec.train_fraction = 0.99;
  CHECK_THROWS_AS(spec.validate(), ValueError);
  spec = small_spec();
  const auto j = synthetic_spec_to_json(spec);
  CHECK(synthetic_spec_to_json(synthetic_spec_from_json(j, spec.schema)) == j);
}

TEST_CASE("rendering into other schemas") {
  SyntheticSpec spec = small_spec();
  spec.render_compatible = {shipped_schema("msa"), shipped_schema("egy")};
  spec.token_budget = 2000;
  const SyntheticDataset d = generate_synthetic(spec);
  const FeatureSchema msa = shipped_schema("msa");
  const SyntheticDataset r = render_dataset(d, spec.schema, msa);
  CHECK(r.train.token_count() == d.train.token_count());
  CHECK_NOTHROW(validate_corpus(r.train, msa));
  CHECK_FALSE(r.train.sentences[0].tokens[0].analysis.features.count("enc1"));
  CHECK_NOTHROW(render_dataset(d, spec.schema, shipped_schema("egy")));
  const Analysis lev_w = testutil::analysis(spec.schema, {{"prc2", "w_conj"}});
  CHECK(render_analysis(lev_w, spec.schema, msa).features.at("prc2") == "wa_conj");
}
