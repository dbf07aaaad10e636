// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <tuple>

#include "../unit/helpers.hpp"
#include "morphdis/disambiguator.hpp"
#include "morphdis/errors.hpp"
#include "morphdis/eval.hpp"
#include "morphdis/experiment.hpp"
#include "morphdis/harmonizer.hpp"
#include "morphdis/synth.hpp"

using namespace morphdis;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 12345;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------- oracles

// Tie score recomputed from raw counts with its own smoothing arithmetic.
struct CountOracle {
  std::map<std::string, double> tag;
  std::map<std::string, std::map<std::string, double>> feat;
  double n = 0.0;
  const FeatureSchema* schema;

  CountOracle(const Corpus& c, const FeatureSchema& s) : schema(&s) {
    for (const auto& sent : c.sentences)
      for (const auto& t : sent.tokens) {
        std::string joined;
        for (const auto& f : s.features()) {
          const std::string& v = t.analysis.features.at(f.name);
          joined += (joined.empty() ? "" : "+") + v;
          feat[f.name][v] += 1.0;
        }
        tag[joined] += 1.0;
        n += 1.0;
      }
  }
  double p_tag(const std::string& joined) const {
    const double eps = kDefaultSmoothing * n;
    const double count = tag.count(joined) ? tag.at(joined) : 0.0;
    return (count + eps) / (n + eps * static_cast<double>(tag.size() + 1));
  }
  double p_feat(const std::string& f, const std::string& v, std::size_t space) const {
    const double eps = kDefaultSmoothing * n;
    const auto it = feat.find(f);
    const double count = it != feat.end() && it->second.count(v) ? it->second.at(v) : 0.0;
    return (count + eps) / (n + eps * static_cast<double>(space));
  }
  double score(const Analysis& a) const {
    std::string joined;
    double product = 1.0;
    for (const auto& f : schema->features()) {
      const std::string& v = a.features.at(f.name);
      joined += (joined.empty() ? "" : "+") + v;
      product *= p_feat(f.name, v, f.values.size());
    }
    return 0.5 * p_tag(joined) + 0.5 * product;
  }
};

std::vector<std::string> brute_force_order(const FeatureBundle& pred, const std::vector<Analysis>& cands,
                                           const CountOracle& oracle, const FeatureSchema& s) {
  std::vector<std::tuple<int, double, std::string>> keyed;
  for (const auto& a : cands) {
    int matches = 0;
    for (const auto& f : s.features()) matches += pred.at(f.name) == a.features.at(f.name);
    keyed.emplace_back(-matches, -oracle.score(a), canonical_analysis(a));
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::string> out;
  for (const auto& k : keyed) out.push_back(std::get<2>(k));
  return out;
}

double binomial_oracle(unsigned b, unsigned c) {
  const unsigned n = b + c, k = std::min(b, c);
  std::uint64_t sum = 0, coef = 1;
  for (unsigned i = 0; i <= k; ++i) {
    sum += coef;
    coef = coef * (n - i) / (i + 1);
  }
  return std::min(1.0, 2.0 * static_cast<double>(sum) / std::ldexp(1.0, static_cast<int>(n)));
}

// ---------------------------------------------------------------- fixtures

Corpus skewed_train(Rng& rng, const FeatureSchema& s, std::size_t tokens) {
  std::vector<FeatureBundle> pool;
  for (int i = 0; i < 15; ++i) pool.push_back(testutil::random_bundle(rng, s));
  Sentence sent;
  sent.id = "train";
  for (std::size_t i = 0; i < tokens; ++i)
    sent.tokens.push_back({"w", std::nullopt, testutil::analysis(s, pool[rng.below(rng.below(pool.size()) + 1)])});
  return testutil::corpus(s, {sent});
}

// Candidates mixing seen bundles (distinct lemmas) and fresh random ones.
std::vector<Analysis> candidates(Rng& rng, const FeatureSchema& s, const Corpus& train, std::size_t n) {
  std::vector<Analysis> out;
  std::set<std::string> seen;
  const auto& toks = train.sentences[0].tokens;
  while (out.size() < n) {
    Analysis a = rng.unit() < 0.6 ? toks[rng.below(toks.size())].analysis
                                  : testutil::analysis(s, testutil::random_bundle(rng, s));
    a.lex = "lex" + std::to_string(rng.below(4));
    if (seen.insert(canonical_analysis(a)).second) out.push_back(std::move(a));
  }
  return out;
}

FeatureDistribution random_distribution(Rng& rng, const FeatureSchema& s) {
  FeatureDistribution d;
  for (const auto& f : s.features()) {
    auto& vec = d.per_feature[f.name];
    double total = 0.0;
    for (const auto& v : f.values) total += vec[v] = rng.unit() + 1e-3;
    for (auto& [_, p] : vec) p /= total;
  }
  return d;
}

// ---------------------------------------------------------------- criteria

Outcome tie_break_arithmetic() {
  const FeatureSchema s = shipped_schema("lev");
  Rng rng(kSeed);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Corpus train = skewed_train(rng, s, 20 + rng.below(300));
    const UnigramModel u(train, s);
    const CountOracle oracle(train, s);
    const Analysis cand = rng.unit() < 0.5 ? train.sentences[0].tokens[rng.below(20)].analysis
                                           : testutil::analysis(s, testutil::random_bundle(rng, s));
    worst = std::max(worst, std::abs(tie_break_score(cand, u, s) - oracle.score(cand)));

    // same combination from directly supplied probabilities
    FeatureDistribution d = random_distribution(rng, s);
    const double p_unf = rng.unit();
    const std::string tag = serialize_unfactored(cand.features, s);
    d.unfactored = {{tag, p_unf}};
    double product = 1.0;
    for (const auto& f : s.features()) product *= d.per_feature.at(f.name).at(cand.features.at(f.name));
    worst = std::max(worst, std::abs(tie_break_score(cand, d, s) - (0.5 * p_unf + 0.5 * product)));
  }
  std::ostringstream os;
  os << "20 fixtures, max |diff| " << worst;
  return {worst <= 1e-12, os.str()};
}

Outcome ranking_oracle() {
  const FeatureSchema s = shipped_schema("lev");
  Rng rng(kSeed + 1);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const Corpus train = skewed_train(rng, s, 30 + rng.below(200));
    const UnigramModel u(train, s);
    const CountOracle oracle(train, s);
    const auto cands = candidates(rng, s, train, 1 + rng.below(50));
    // predictions near some candidate, so match counts spread out
    FeatureBundle pred = cands[rng.below(cands.size())].features;
    for (const auto& f : s.features())
      if (rng.unit() < 0.3) pred[f.name] = f.values[rng.below(f.values.size())];
    std::vector<std::string> got;
    for (const auto& r : rank_analyses(pred, cands, u, s)) got.push_back(canonical_analysis(r.analysis));
    mismatches += got != brute_force_order(pred, cands, oracle, s);
  }
  return {mismatches == 0, "1000 instances, " + std::to_string(mismatches) + " mismatches"};
}

Outcome round_trips() {
  int failures = 0;
  Rng rng(kSeed + 2);
  for (const char* v : {"msa", "lev"}) {
    const FeatureSchema s = shipped_schema(v);
    for (int i = 0; i < 5000; ++i) {
      const FeatureBundle b = testutil::random_bundle(rng, s);
      const std::string tag = serialize_unfactored(b, s);
      failures += parse_unfactored(tag, s) != b || serialize_unfactored(parse_unfactored(tag, s), s) != tag;
    }
  }
  SyntheticSpec spec;
  spec.schema = shipped_schema("lev");
  spec.vocabulary_size = 1000;
  spec.token_budget = 5000;
  spec.seed = kSeed;
  const SyntheticDataset d = generate_synthetic(spec);
  const fs::path dir = testutil::temp_dir("acceptance-roundtrip");
  write_corpus(dir / "train.jsonl", d.train);
  const std::string first = read_file(dir / "train.jsonl");
  write_corpus(dir / "again.jsonl", read_corpus(dir / "train.jsonl", spec.schema));
  failures += read_file(dir / "again.jsonl") != first;
  save_db(dir / "a.db", d.analyzer);
  failures += !(load_db(dir / "a.db", spec.schema) == d.analyzer);
  const AnalyzerDB compiled = compile_analyzer(d.train);
  save_db(dir / "c.db", compiled);
  failures += !(load_db(dir / "c.db", spec.schema) == compiled);
  return {failures == 0, "10000 bundles, corpus bytes, 2 databases; " + std::to_string(failures) + " failures"};
}

Outcome backoff_contract() {
  const FeatureSchema s = shipped_schema("lev");
  Rng rng(kSeed + 3);
  SyntheticSpec spec;
  spec.schema = s;
  spec.vocabulary_size = 500;
  spec.token_budget = 2000;
  spec.seed = kSeed;
  const SyntheticDataset d = generate_synthetic(spec);
  const UnigramModel u(d.train, s);
  std::size_t kept = 0, total = 0;
  for (int sent = 0; sent < 10; ++sent) {
    std::vector<std::pair<std::string, Analysis>> toks;
    std::vector<FeatureDistribution> dists;
    for (int i = 0; i < 10; ++i) {
      const std::string raw = "oov" + std::to_string(sent) + "x" + std::to_string(i);
      if (d.analyzer.analyze(raw)) return {false, "fixture form collides with the analyzer"};
      toks.push_back({raw, testutil::analysis(s, testutil::random_bundle(rng, s))});
      dists.push_back(random_distribution(rng, s));
    }
    const Sentence sentence = testutil::sentence("oov" + std::to_string(sent), toks);
    const auto out = disambiguate_sentence(sentence, dists, d.analyzer, u, s);
    for (std::size_t i = 0; i < out.size(); ++i) {
      ++total;
      kept += out[i].analysis.features == argmax_bundle(dists[i], s) &&
              out[i].source == DecisionSource::kKeptPrediction;
    }
  }
  return {kept == total && total == 100, std::to_string(kept) + "/" + std::to_string(total) + " preserved"};
}

Outcome metric_correctness() {
  const FeatureSchema s = shipped_schema("lev");
  // 20 tokens; w16..w20 are OOV. Planted errors and what they break:
  //   w1 pos (every metric)   w2 cas (ALL, ALL*)   w3 enc1 (ALL)   w4 gen (ALL, ALL*, ALL10)
  //   w5 stt (ALL, ALL*)      w16 pos (every metric)   w17 enc2 (ALL)
  // Hand counts: POS 18/20, ALL 13/20, ALL* 15/20, ALL10 17/20; OOV slice ALL 3/5, POS 4/5.
  const FeatureBundle base = s.complete({{"pos", "noun"}, {"gen", "m"}, {"num", "s"}, {"cas", "n"}, {"stt", "d"}});
  std::vector<std::pair<std::string, Analysis>> gold_toks, pred_toks, train_toks;
  for (int i = 1; i <= 20; ++i) {
    const std::string raw = "w" + std::to_string(i);
    FeatureBundle p = base;
    switch (i) {
      case 1: case 16: p["pos"] = "verb"; break;
      case 2: p["cas"] = "a"; break;
      case 3: p["enc1"] = "1s_iobj"; break;
      case 4: p["gen"] = "f"; break;
      case 5: p["stt"] = "i"; break;
      case 17: p["enc2"] = "$_neg"; break;
      default: break;
    }
    gold_toks.push_back({raw, testutil::analysis(s, base)});
    pred_toks.push_back({raw, testutil::analysis(s, p)});
    if (i <= 15) train_toks.push_back({raw, testutil::analysis(s, base)});
  }
  const Corpus gold = testutil::corpus(s, {testutil::sentence("m", gold_toks)});
  const Corpus pred = testutil::corpus(s, {testutil::sentence("m", pred_toks)});
  const Corpus train = testutil::corpus(s, {testutil::sentence("t", train_toks)});

  std::vector<std::string> bad;
  auto expect = [&](const std::string& name, double got, double want) {
    if (got != want) bad.push_back(name + "=" + std::to_string(got));
  };
  expect("POS", accuracy(pred, gold, s, resolve_subset("pos", s)).accuracy, 18.0 / 20.0);
  expect("ALL", accuracy(pred, gold, s, resolve_subset("all", s)).accuracy, 13.0 / 20.0);
  expect("ALL*", accuracy(pred, gold, s, resolve_subset("all-star:lev", s)).accuracy, 15.0 / 20.0);
  expect("ALL10", accuracy(pred, gold, s, resolve_subset("all10", s)).accuracy, 17.0 / 20.0);
  expect("OOV ALL", accuracy(pred, gold, s, resolve_subset("all", s), Slice::kOov, &train).accuracy, 3.0 / 5.0);
  expect("OOV POS", accuracy(pred, gold, s, resolve_subset("pos", s), Slice::kOov, &train).accuracy, 4.0 / 5.0);

  const auto big = mcnemar_counts(0, 30);
  if (!big.significant || std::abs(big.statistic - 29.0 * 29.0 / 30.0) > 1e-9) bad.push_back("mcnemar(0,30)");
  const auto small = mcnemar_counts(3, 9);
  if (small.significant || std::abs(small.p_value - binomial_oracle(3, 9)) > 1e-3 ||
      std::abs(small.p_value - 0.146) > 1e-3)
    bad.push_back("mcnemar(3,9) p=" + std::to_string(small.p_value));

  std::ostringstream os;
  os << "6 accuracies, 2 McNemar fixtures (p=" << small.p_value << ")";
  for (const auto& b : bad) os << "; wrong " << b;
  return {bad.empty(), os.str()};
}

Outcome harmonization() {
  const Harmonizer h(load_harmonization_config(data_dir() / "harmonize" / "default.json"), shipped_schema("lev"));
  std::vector<std::string> bad;
  const Analysis wa = testutil::analysis(shipped_schema("msa"), {{"prc2", "wa_conj"}});
  const Analysis wi = testutil::analysis(shipped_schema("egy"), {{"prc2", "wi_conj"}});
  if (h.harmonize_analysis(wa, "msa").features.at("prc2") != "w_conj") bad.push_back("wa_conj");
  if (h.harmonize_analysis(wi, "egy").features.at("prc2") != "w_conj") bad.push_back("wi_conj");
  Rng rng(kSeed + 4);
  const std::vector<std::string> variants = {"msa", "glf", "egy", "lev"};
  int invalid = 0, unstable = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string& v = variants[static_cast<std::size_t>(i) % variants.size()];
    const FeatureSchema s = shipped_schema(v);
    const Analysis once = h.harmonize_analysis(testutil::analysis(s, testutil::random_bundle(rng, s)), v);
    try {
      if (once.features.size() != 10) throw ValueError("wrong arity");
      serialize_unfactored(once.features, h.reduced_schema());
    } catch (const Error&) {
      ++invalid;
    }
    unstable += !(h.harmonize_analysis(once, "lev") == once);
  }
  std::ostringstream os;
  os << "1000 analyses, " << invalid << " invalid, " << unstable << " not idempotent";
  for (const auto& b : bad) os << "; wrong " << b;
  return {bad.empty() && invalid == 0 && unstable == 0, os.str()};
}

Outcome nesting() {
  SyntheticSpec spec;
  spec.schema = shipped_schema("lev");
  spec.vocabulary_size = 5000;
  spec.token_budget = 250000;
  spec.seed = kSeed;
  const SyntheticDataset d = generate_synthetic(spec);
  if (d.train.token_count() < 200000) return {false, "corpus too small"};
  const std::vector<std::size_t> sizes = {5000, 10000, 20000, 40000, 80000, 160000, 200000};
  const auto samples = sample_learning_curve(d.train, sizes, kSeed);
  bool ok = true;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ok = ok && samples[i].token_count() >= sizes[i];
    if (i == 0) continue;
    std::set<std::string> big;
    for (const auto& s : samples[i].sentences) big.insert(s.id);
    for (const auto& s : samples[i - 1].sentences) ok = ok && big.count(s.id);
  }
  return {ok, "7 budgets 5k..200k on a " + std::to_string(d.train.token_count()) + "-token corpus"};
}

// ---------------------------------------------------------------- direction checks

struct DirectionData {
  fs::path root;
};

const DirectionData& direction_data() {
  static const DirectionData data = [] {
    DirectionData d;
    d.root = testutil::temp_dir("acceptance-direction");
    SyntheticSpec spec;
    spec.schema = shipped_schema("lev");
    spec.vocabulary_size = 5000;
    spec.ambiguity_rate = 3.0;
    spec.token_budget = 60000;
    spec.seed = kSeed;
    spec.render_compatible = {shipped_schema("msa"), shipped_schema("glf"), shipped_schema("egy")};
    write_dataset(d.root / "lev", generate_synthetic(spec));
    std::uint64_t seed = kSeed + 1;
    for (const char* v : {"msa", "glf", "egy"}) {
      SyntheticSpec hr = spec;
      hr.seed = seed++;
      hr.lexicon_seed = kSeed;
      hr.token_budget = 16000;
      hr.id_prefix = std::string(v) + "-";
      write_dataset(d.root / v, render_dataset(generate_synthetic(hr), spec.schema, shipped_schema(v)));
    }
    return d;
  }();
  return data;
}

ExperimentSpec direction_spec(TaggerKind kind, bool analyzer) {
  const fs::path lev = direction_data().root / "lev";
  ExperimentSpec spec;
  spec.variant = "lev";
  spec.kind = kind;
  spec.sizes = {500};
  spec.seed = kSeed;
  spec.paths = {lev / "train.jsonl", lev / "tune.jsonl", lev / "dev.jsonl", lev / "test.jsonl", std::nullopt,
                std::nullopt, std::nullopt};
  if (analyzer) {
    spec.use_analyzer = true;
    spec.paths.analyzer = lev / "analyzer.db";
  }
  return spec;
}

double dev_accuracy(const ExperimentResult& r, const std::string& system, const std::string& subset) {
  return r.report(500, report_key("dev", system, subset, Slice::kAll)).accuracy;
}

std::string pair_text(const char* a_name, double a, const char* b_name, double b) {
  std::ostringstream os;
  os.precision(4);
  os << a_name << " " << a << " vs " << b_name << " " << b;
  return os.str();
}

std::optional<ExperimentResult> single_factored;

const ExperimentResult& factored_run() {
  if (!single_factored)
    single_factored = run_experiment(direction_spec(TaggerKind::kFactored, true), direction_data().root / "runs");
  return *single_factored;
}

Outcome direction_factored() {
  const double fac = dev_accuracy(factored_run(), "factored", "all");
  const auto unf_run = run_experiment(direction_spec(TaggerKind::kUnfactored, false), direction_data().root / "runs");
  const double unf = dev_accuracy(unf_run, "unfactored", "all");
  return {fac > unf, "DEV ALL TAGS at 500 tokens: " + pair_text("factored", fac, "unfactored", unf)};
}

Outcome direction_retagging() {
  const double raw = dev_accuracy(factored_run(), "factored", "all");
  const double morph = dev_accuracy(factored_run(), "factored+morph", "all");
  return {morph > raw, "DEV ALL TAGS at 500 tokens: " + pair_text("retagged", morph, "raw", raw)};
}

Outcome direction_continued() {
  ExperimentSpec spec = direction_spec(TaggerKind::kFactored, false);
  spec.strategy = Strategy::kContinued;
  for (const char* v : {"msa", "glf", "egy"})
    spec.high_resource.push_back({v, direction_data().root / v / "train.jsonl", ""});
  const auto cont = run_experiment(spec, direction_data().root / "runs");
  const double c = dev_accuracy(cont, "factored", "all10");
  const double s = dev_accuracy(factored_run(), "factored", "all10");
  return {c > s, "DEV ALL TAGS 10 at 500 tokens: " + pair_text("continued", c, "single", s)};
}

Outcome oracle_unambiguous() {
  const fs::path root = testutil::temp_dir("acceptance-unambiguous");
  SyntheticSpec spec;
  spec.schema = shipped_schema("lev");
  spec.vocabulary_size = 5000;
  spec.ambiguity_rate = 1.0;
  spec.token_budget = 20000;
  spec.seed = kSeed;
  write_dataset(root / "lev", generate_synthetic(spec));
  ExperimentSpec e;
  e.variant = "lev";
  e.sizes = {500};
  e.epochs = 3;
  e.use_analyzer = true;
  const fs::path d = root / "lev";
  e.paths = {d / "train.jsonl", d / "tune.jsonl", d / "dev.jsonl", d / "test.jsonl", d / "analyzer.db",
             std::nullopt, std::nullopt};
  const auto r = run_experiment(e, root / "runs");
  const double dev = dev_accuracy(r, "factored+morph", "all");
  const double test = r.report(500, report_key("test", "factored+morph", "all", Slice::kAll)).accuracy;
  const double raw = dev_accuracy(r, "factored", "all");
  std::ostringstream os;
  os << "retagged ALL TAGS dev " << dev << ", test " << test << " (raw tagger " << raw << ")";
  return {dev == 1.0 && test == 1.0, os.str()};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double limit_seconds;
  };
  const std::vector<Criterion> criteria = {
      {"tie-break arithmetic", tie_break_arithmetic, 1.0},
      {"ranking oracle equivalence", ranking_oracle, 30.0},
      {"round trips", round_trips, 0.0},
      {"backoff keeps predictions", backoff_contract, 0.0},
      {"metric correctness", metric_correctness, 0.0},
      {"harmonization", harmonization, 0.0},
      {"learning-curve nesting", nesting, 0.0},
      {"direction: factored beats unfactored", direction_factored, 300.0},
      {"direction: oracle retagging helps", direction_retagging, 300.0},
      {"direction: continued beats single", direction_continued, 300.0},
      {"oracle-unambiguous end to end", oracle_unambiguous, 0.0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0.0 && secs >= c.limit_seconds) {
      o.pass = false;
      o.detail += "; over the " + std::to_string(static_cast<int>(c.limit_seconds)) + " s limit";
    }
    failed += !o.pass;
    std::ostringstream t;
    t.precision(3);
    t << secs;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " [" << t.str() << " s] " << o.detail << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - static_cast<std::size_t>(failed) << "/"
            << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
