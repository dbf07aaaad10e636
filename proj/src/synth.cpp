#include "morphdis/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_set>

#include "morphdis/errors.hpp"
#include "morphdis/harmonizer.hpp"

namespace morphdis {

using nlohmann::json;

void SyntheticSpec::validate() const {
  if (schema.size() == 0) throw ValueError("synthetic spec needs a schema");
  if (!schema.has_feature("pos")) throw ValueError("synthetic schema must have a pos feature");
  if (vocabulary_size == 0) throw ValueError("vocabulary size must be positive");
  if (!(ambiguity_rate >= 1.0)) throw ValueError("ambiguity rate must be at least 1");
  if (mean_sentence_length == 0) throw ValueError("mean sentence length must be positive");
  if (sentence_length_spread >= mean_sentence_length)
    throw ValueError("sentence length spread must be smaller than the mean length");
  if (token_budget == 0) throw ValueError("token budget must be positive");
  if (train_fraction <= 0.0 || tune_fraction < 0.0 || dev_fraction < 0.0 ||
      train_fraction + tune_fraction + dev_fraction > 1.0)
    throw ValueError("split fractions must be non-negative and sum to at most 1");
}

SyntheticSpec synthetic_spec_from_json(const json& j, const FeatureSchema& schema) {
  SyntheticSpec s;
  s.schema = schema;
  try {
    s.vocabulary_size = j.value("vocabulary_size", s.vocabulary_size);
    s.ambiguity_rate = j.value("ambiguity_rate", s.ambiguity_rate);
    s.mean_sentence_length = j.value("mean_sentence_length", s.mean_sentence_length);
    s.sentence_length_spread = j.value("sentence_length_spread", s.sentence_length_spread);
    s.token_budget = j.value("token_budget", s.token_budget);
    s.train_fraction = j.value("train_fraction", s.train_fraction);
    s.tune_fraction = j.value("tune_fraction", s.tune_fraction);
    s.dev_fraction = j.value("dev_fraction", s.dev_fraction);
    s.seed = j.value("seed", s.seed);
    if (j.contains("lexicon_seed")) s.lexicon_seed = j["lexicon_seed"].get<std::uint64_t>();
    s.id_prefix = j.value("id_prefix", s.id_prefix);
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

json synthetic_spec_to_json(const SyntheticSpec& s) {
  json j{{"schema", s.schema.variant()},
         {"vocabulary_size", s.vocabulary_size},
         {"ambiguity_rate", s.ambiguity_rate},
         {"mean_sentence_length", s.mean_sentence_length},
         {"sentence_length_spread", s.sentence_length_spread},
         {"token_budget", s.token_budget},
         {"train_fraction", s.train_fraction},
         {"tune_fraction", s.tune_fraction},
         {"dev_fraction", s.dev_fraction},
         {"seed", s.seed},
         {"id_prefix", s.id_prefix}};
  if (s.lexicon_seed) j["lexicon_seed"] = *s.lexicon_seed;
  j["render_compatible"] = json::array();
  for (const auto& c : s.render_compatible) j["render_compatible"].push_back(c.variant());
  return j;
}

namespace {

// Features realized as affixes on the surface form; a form's readings all
// share them. The remaining features are invisible and vary by reading.
bool is_visible(const std::string& f) {
  return f == "per" || f == "asp" || f == "gen" || f == "num" || f.rfind("prc", 0) == 0 || f.rfind("enc", 0) == 0;
}

// Generator shape. Hidden features are rarely active, as in dialect
// tagsets; the dominant value of a slot takes most of the mass.
constexpr double kValueZipf = 1.5;
constexpr double kVisibleRate = 0.6;
constexpr double kHiddenRate = 0.1;
constexpr double kDominant = 0.9;
constexpr double kSamePos = 0.6;
constexpr double kContext = 0.9;

bool is_clitic(const std::string& f) { return f.rfind("prc", 0) == 0 || f.rfind("enc", 0) == 0; }

struct ValueChoice {
  std::vector<std::string> values;
  std::vector<double> weights;
};

/// Per-pos feature behavior: inactive features stay at their default.
struct PosTemplate {
  std::map<std::string, ValueChoice> active;
};

struct Entry {
  std::string form;
  std::string stem;
  std::vector<Analysis> analyses;
};

struct CumulativeTable {
  std::vector<double> cumulative;
  std::vector<std::pair<std::size_t, std::size_t>> items;  // (entry, analysis)

  std::pair<std::size_t, std::size_t> draw(Rng& rng) const {
    const double r = rng.unit() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    std::size_t idx = std::min(static_cast<std::size_t>(it - cumulative.begin()), items.size() - 1);
    return items[idx];
  }
};

struct Language {
  std::vector<std::string> pos_values;
  std::vector<double> initial;
  std::vector<std::vector<double>> transition;
  std::vector<PosTemplate> templates;
  std::vector<std::string> patterns;  // per pos, vowels of its stems
  std::vector<Entry> entries;
  std::vector<CumulativeTable> by_pos;
  /// Context affinity of (previous pos, feature, value); index npos is the
  /// sentence start. Readings of one form that share a pos are told apart by
  /// which one fits the previous word best, a stand-in for government and
  /// agreement.
  std::vector<std::map<std::pair<std::string, std::string>, double>> affinity;

  double fit(std::size_t prev, const Analysis& a) const {
    double score = 0.0;
    for (const auto& [f, v] : a.features) {
      auto it = affinity[prev].find({f, v});
      if (it != affinity[prev].end()) score += it->second;
    }
    return score;
  }
};

bool renderable(const std::string& feature, const std::string& value, const std::vector<FeatureSchema>& targets) {
  for (const auto& t : targets) {
    if (!t.has_feature(feature)) continue;
    const auto& def = t.feature(feature);
    if (def.has_value(value)) continue;
    if (!is_proclitic_feature(feature)) return false;
    const std::string key = strip_proclitic_vowels(value);
    bool found = false;
    for (const auto& c : def.values)
      if (strip_proclitic_vowels(c) == key) found = true;
    if (!found) return false;
  }
  return true;
}

std::size_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  const double limit = std::exp(-mean);
  std::size_t k = 0;
  double p = rng.unit();
  while (p > limit) {
    ++k;
    p *= rng.unit();
  }
  return k;
}

// Stems follow a vowel pattern typical of their pos most of the time, so
// unseen words still carry a cue to their category.
std::string patterned_stem(Rng& rng, std::size_t n, const std::string& pattern) {
  static const std::string consonants = "bdfghjklmnqrstwxz";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back(consonants[rng.below(consonants.size())]);
    s.push_back(pattern[i % pattern.size()]);
  }
  return s;
}

// Affixes use their own letters, as clitics do in real orthographies.
std::string random_affix(Rng& rng) {
  static const std::string letters = "BCDFGHKLMNPRSTVWYZ";
  std::string s(1, letters[rng.below(letters.size())]);
  if (rng.unit() < 0.5) s.push_back(letters[rng.below(letters.size())]);
  return s;
}

std::string random_syllables(Rng& rng, std::size_t n) {
  static const std::string consonants = "bdfghjklmnqrstwxz";
  static const std::string vowels = "aeiou";
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back(consonants[rng.below(consonants.size())]);
    s.push_back(vowels[rng.below(vowels.size())]);
  }
  return s;
}

std::string draw_value(Rng& rng, const ValueChoice& c) { return c.values[rng.weighted(c.weights)]; }

Language build_language(const SyntheticSpec& spec) {
  Rng rng(spec.lexicon_seed.value_or(spec.seed) ^ 0x9E3779B97F4A7C15ULL);
  const FeatureSchema& schema = spec.schema;
  Language lang;
  const auto& pos_def = schema.feature("pos");
  lang.pos_values = pos_def.values;
  const std::size_t npos = lang.pos_values.size();

  // Zipf-like pos frequencies over a random permutation.
  std::vector<std::size_t> perm(npos);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(perm);
  lang.initial.assign(npos, 0.0);
  for (std::size_t r = 0; r < npos; ++r) lang.initial[perm[r]] = 1.0 / static_cast<double>(r + 1);

  // Each pos strongly prefers a few successors.
  lang.transition.assign(npos, std::vector<double>(npos, 0.0));
  for (std::size_t p = 0; p < npos; ++p) {
    for (std::size_t q = 0; q < npos; ++q) lang.transition[p][q] = 0.05 * lang.initial[q];
    for (double w : {0.5, 0.3, 0.15}) lang.transition[p][perm[rng.below(std::min<std::size_t>(npos, 8))]] += w;
  }

  lang.patterns.resize(npos);
  for (auto& pattern : lang.patterns)
    for (int i = 0; i < 2; ++i) pattern.push_back("aeiou"[rng.below(5)]);

  // Every feature has a language-wide frequency ranking of its values, so
  // a few values dominate across pos classes.
  std::map<std::string, std::vector<std::string>> ranked;
  std::map<std::string, std::vector<double>> rank_weight;
  for (const auto& f : schema.features()) {
    if (f.name == "pos") continue;
    auto& pool = ranked[f.name];
    for (const auto& v : f.values)
      if (v != f.default_value && v != "na" && renderable(f.name, v, spec.render_compatible)) pool.push_back(v);
    rng.shuffle(pool);
    for (std::size_t r = 0; r < pool.size(); ++r)
      rank_weight[f.name].push_back(1.0 / std::pow(static_cast<double>(r + 1), kValueZipf));
  }

  lang.templates.resize(npos);
  for (std::size_t p = 0; p < npos; ++p) {
    for (const auto& f : schema.features()) {
      if (f.name == "pos" || ranked[f.name].empty()) continue;
      const double p_active = is_visible(f.name) ? kVisibleRate : kHiddenRate;
      if (rng.unit() >= p_active) continue;
      const auto& pool = ranked[f.name];
      std::vector<double> w = rank_weight[f.name];
      const std::size_t k = 1 + rng.below(std::min<std::size_t>(3, pool.size()));
      ValueChoice choice;
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t r = rng.weighted(w);
        w[r] = 0.0;
        choice.values.push_back(pool[r]);
        choice.weights.push_back(i == 0 ? kDominant : (1.0 - kDominant) / static_cast<double>(k - 1));
      }
      if (is_clitic(f.name)) {  // clitics are often absent even where they can attach
        choice.values.push_back(f.default_value);
        choice.weights.push_back(0.4);
      }
      lang.templates[p].active.emplace(f.name, std::move(choice));
    }
  }

  // Affix strings for visible feature values.
  std::map<std::pair<std::string, std::string>, std::string> affix;
  for (const auto& f : schema.features()) {
    if (!is_visible(f.name)) continue;
    for (const auto& v : f.values) {
      if (v == f.default_value || v == "na") continue;
      affix[{f.name, v}] = random_affix(rng);
    }
  }
  auto affix_of = [&](const FeatureBundle& b, const std::string& f) -> std::string {
    auto it = b.find(f);
    if (it == b.end()) return {};
    auto a = affix.find({f, it->second});
    return a == affix.end() ? std::string() : a->second;
  };

  auto fill = [&](std::size_t p, FeatureBundle& b, bool visible_pass) {
    for (const auto& f : schema.features()) {
      if (f.name == "pos" || is_visible(f.name) != visible_pass) continue;
      auto it = lang.templates[p].active.find(f.name);
      b[f.name] = it == lang.templates[p].active.end() ? f.default_value : draw_value(rng, it->second);
    }
  };

  const std::size_t max_k = 12;
  std::unordered_set<std::string> used_forms;
  lang.entries.reserve(spec.vocabulary_size);
  while (lang.entries.size() < spec.vocabulary_size) {
    Entry e;
    const std::size_t base_pos = rng.weighted(lang.initial);
    FeatureBundle base;
    base["pos"] = lang.pos_values[base_pos];
    fill(base_pos, base, true);
    fill(base_pos, base, false);

    const std::size_t syllables = 2 + rng.below(2);
    e.stem = rng.unit() < 0.85 ? patterned_stem(rng, syllables, lang.patterns[base_pos]) : random_syllables(rng, syllables);
    std::string prefix, suffix;
    for (const char* f : {"prc3", "prc2", "prc1", "prc0"}) prefix += affix_of(base, f);
    for (const char* f : {"asp", "per", "gen", "num", "enc0", "enc1", "enc2"}) suffix += affix_of(base, f);
    e.form = prefix + e.stem + suffix;
    if (!used_forms.insert(e.form).second) continue;

    const std::size_t k = std::min(max_k, 1 + poisson(rng, spec.ambiguity_rate - 1.0));
    // Like real ambiguity, most alternative readings differ from the base in
    // a single invisible feature; the rest are readings under another pos.
    std::vector<FeatureBundle> bundles = {base};
    for (std::size_t attempt = 0; bundles.size() < k && attempt < 50; ++attempt) {
      FeatureBundle alt = base;
      std::vector<const std::pair<const std::string, ValueChoice>*> variable;
      for (const auto& entry : lang.templates[base_pos].active)
        if (!is_visible(entry.first) && entry.second.values.size() > 1) variable.push_back(&entry);
      if (!variable.empty() && rng.unit() < kSamePos) {
        const auto& [name, choice] = *variable[rng.below(variable.size())];
        std::vector<std::string> others;
        for (const auto& v : choice.values)
          if (v != base.at(name)) others.push_back(v);
        alt[name] = others[rng.below(others.size())];
      } else {
        std::vector<double> w = lang.initial;
        w[base_pos] = 0.0;
        const std::size_t p = rng.weighted(w);
        alt["pos"] = lang.pos_values[p];
        fill(p, alt, false);
      }
      if (std::find(bundles.begin(), bundles.end(), alt) == bundles.end()) bundles.push_back(std::move(alt));
    }
    for (std::size_t bi = 0; bi < bundles.size(); ++bi) {
      const FeatureBundle& b = bundles[bi];
      Analysis a;
      a.lex = e.stem;
      a.diac = e.form + "|" + std::to_string(bi + 1);
      a.features = schema.complete(b);
      e.analyses.push_back(std::move(a));
    }
    lang.entries.push_back(std::move(e));
  }

  // Zipf weights over forms, independent of generation order.
  std::vector<std::size_t> rank(lang.entries.size());
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  rng.shuffle(rank);
  lang.by_pos.resize(npos);
  for (std::size_t ei = 0; ei < lang.entries.size(); ++ei) {
    const double w = 1.0 / static_cast<double>(rank[ei] + 1);
    const auto& analyses = lang.entries[ei].analyses;
    for (std::size_t ai = 0; ai < analyses.size(); ++ai) {
      const auto& pos = analyses[ai].features.at("pos");
      const auto p = static_cast<std::size_t>(std::lower_bound(lang.pos_values.begin(), lang.pos_values.end(), pos) -
                                              lang.pos_values.begin());
      auto& table = lang.by_pos[p];
      table.items.emplace_back(ei, ai);
      table.cumulative.push_back((table.cumulative.empty() ? 0.0 : table.cumulative.back()) + w);
    }
  }
  // Pos values without any form never get generated.
  for (std::size_t p = 0; p < npos; ++p) {
    if (!lang.by_pos[p].items.empty()) continue;
    lang.initial[p] = 0.0;
    for (auto& row : lang.transition) row[p] = 0.0;
  }
  lang.affinity.resize(npos + 1);
  for (auto& table : lang.affinity)
    for (const auto& f : schema.features())
      if (f.name != "pos" && !is_visible(f.name))
        for (const auto& v : f.values) table[{f.name, v}] = rng.unit();
  return lang;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Language lang = build_language(spec);
  Rng rng(spec.seed);

  std::vector<Sentence> sentences;
  std::size_t tokens = 0;
  long long pending_offset = 0;
  bool have_pending = false;
  const auto mean = static_cast<long long>(spec.mean_sentence_length);
  const auto spread = static_cast<long long>(spec.sentence_length_spread);
  while (tokens < spec.token_budget) {
    long long offset;
    if (have_pending) {
      offset = -pending_offset;
      have_pending = false;
    } else {
      offset = static_cast<long long>(rng.below(static_cast<std::uint64_t>(2 * spread + 1))) - spread;
      pending_offset = offset;
      have_pending = true;
    }
    const auto length = static_cast<std::size_t>(mean + offset);
    Sentence s;
    s.id = spec.id_prefix + std::to_string(sentences.size() + 1);
    std::size_t pos = rng.weighted(lang.initial);
    std::size_t prev = lang.pos_values.size();
    for (std::size_t i = 0; i < length; ++i) {
      if (i > 0) pos = rng.weighted(lang.transition[pos]);
      auto [ei, ai] = lang.by_pos[pos].draw(rng);
      const Entry& e = lang.entries[ei];
      // Mostly the same-pos reading that fits the context best.
      if (rng.unit() < kContext) {
        const auto& want = e.analyses[ai].features.at("pos");
        double best = lang.fit(prev, e.analyses[ai]);
        for (std::size_t r = 0; r < e.analyses.size(); ++r) {
          if (e.analyses[r].features.at("pos") != want) continue;
          const double score = lang.fit(prev, e.analyses[r]);
          if (score > best) {
            best = score;
            ai = r;
          }
        }
      }
      s.tokens.push_back({e.form, std::nullopt, e.analyses[ai]});
      prev = pos;
    }
    tokens += length;
    sentences.push_back(std::move(s));
  }

  SyntheticDataset data;
  const std::size_t n = sentences.size();
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.train_fraction));
  const auto n_tune = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.tune_fraction));
  const auto n_dev = static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.dev_fraction));
  std::size_t i = 0;
  for (auto [corpus, count, split] :
       {std::tuple{&data.train, n_train, Split::kTrain}, std::tuple{&data.tune, n_tune, Split::kTune},
        std::tuple{&data.dev, n_dev, Split::kDev}, std::tuple{&data.test, n, Split::kTest}}) {
    corpus->schema_ref = spec.schema.variant();
    corpus->split = split;
    for (std::size_t c = 0; c < count && i < n; ++c) corpus->sentences.push_back(std::move(sentences[i++]));
  }

  AnalyzerDB::Entries entries;
  for (const auto& e : lang.entries) entries.emplace(e.form, e.analyses);
  data.analyzer = AnalyzerDB(spec.schema.variant(), std::move(entries), BackoffPolicy::kKeepPredictions,
                             "synthetic-oracle");
  return data;
}

Analysis render_analysis(const Analysis& a, const FeatureSchema& from, const FeatureSchema& to) {
  Analysis out = a;
  out.features.clear();
  for (const auto& f : to.features()) {
    auto it = a.features.find(f.name);
    if (it == a.features.end() || !from.has_feature(f.name)) {
      out.features.emplace(f.name, f.default_value);
      continue;
    }
    const std::string& v = it->second;
    if (f.has_value(v)) {
      out.features.emplace(f.name, v);
      continue;
    }
    std::string chosen;
    if (is_proclitic_feature(f.name)) {
      const std::string key = strip_proclitic_vowels(v);
      for (const auto& c : f.values)
        if (strip_proclitic_vowels(c) == key) {
          chosen = c;
          break;
        }
    }
    if (chosen.empty())
      throw RemapError("value '" + v + "' of " + f.name + " has no counterpart in '" + to.variant() + "'");
    out.features.emplace(f.name, std::move(chosen));
  }
  return out;
}

SyntheticDataset render_dataset(const SyntheticDataset& data, const FeatureSchema& from, const FeatureSchema& to) {
  SyntheticDataset out;
  for (auto [src, dst] : {std::pair{&data.train, &out.train}, std::pair{&data.tune, &out.tune},
                          std::pair{&data.dev, &out.dev}, std::pair{&data.test, &out.test}}) {
    *dst = *src;
    dst->schema_ref = to.variant();
    for (auto& s : dst->sentences)
      for (auto& t : s.tokens) t.analysis = render_analysis(t.analysis, from, to);
  }
  AnalyzerDB::Entries entries;
  for (const auto& [word, analyses] : data.analyzer.entries()) {
    auto& v = entries[word];
    for (const auto& a : analyses) v.push_back(render_analysis(a, from, to));
  }
  out.analyzer = AnalyzerDB(to.variant(), std::move(entries), data.analyzer.backoff(), data.analyzer.provenance());
  return out;
}

void write_dataset(const std::filesystem::path& dir, const SyntheticDataset& data) {
  std::filesystem::create_directories(dir);
  write_corpus(dir / "train.jsonl", data.train);
  write_corpus(dir / "tune.jsonl", data.tune);
  write_corpus(dir / "dev.jsonl", data.dev);
  write_corpus(dir / "test.jsonl", data.test);
  save_db(dir / "analyzer.db", data.analyzer);
}

}  // namespace morphdis
