#include "morphdis/disambiguator.hpp"

#include <algorithm>
#include <functional>

#include "morphdis/errors.hpp"

namespace morphdis {

using nlohmann::json;

UnigramModel::UnigramModel(const Corpus& train, const FeatureSchema& schema, double smoothing_epsilon)
    : epsilon_(smoothing_epsilon) {
  if (smoothing_epsilon <= 0.0) throw ValueError("smoothing epsilon must be positive");
  for (const auto& f : schema.features()) {
    feature_space_[f.name] = f.values.size();
    per_feature_counts_[f.name];
  }
  for (const auto& s : train.sentences) {
    for (const auto& t : s.tokens) {
      FeatureBundle b = schema.complete(t.analysis.features);
      ++unfactored_counts_[serialize_unfactored(b, schema)];
      for (const auto& [name, value] : b) ++per_feature_counts_[name][value];
      ++total_;
    }
  }
  if (total_ == 0) throw EmptyCorpus("unigram model needs a non-empty training corpus");
}

double UnigramModel::smoothed(std::size_t count, std::size_t space) const {
  const double n = static_cast<double>(total_);
  const double alpha = epsilon_ * n;
  return (static_cast<double>(count) + alpha) / (n + alpha * static_cast<double>(space));
}

std::size_t UnigramModel::feature_space_size(const std::string& feature) const {
  auto it = feature_space_.find(feature);
  if (it == feature_space_.end()) throw UnknownFeature("unigram model has no feature '" + feature + "'");
  return it->second;
}

double UnigramModel::unfactored_prob(const std::string& tag) const {
  auto it = unfactored_counts_.find(tag);
  return smoothed(it == unfactored_counts_.end() ? 0 : it->second, unfactored_space_size());
}

double UnigramModel::feature_prob(const std::string& feature, const std::string& value) const {
  const std::size_t space = feature_space_size(feature);
  const auto& counts = per_feature_counts_.at(feature);
  auto it = counts.find(value);
  return smoothed(it == counts.end() ? 0 : it->second, space);
}

double UnigramModel::unfactored_floor() const { return smoothed(0, unfactored_space_size()); }

double UnigramModel::feature_floor(const std::string& feature) const {
  return smoothed(0, feature_space_size(feature));
}

json UnigramModel::to_json() const {
  json j;
  j["format"] = "morphdis-unigrams";
  j["format_version"] = 1;
  j["total_tokens"] = total_;
  j["smoothing_epsilon"] = epsilon_;
  j["feature_space"] = feature_space_;
  j["unfactored_counts"] = unfactored_counts_;
  j["per_feature_counts"] = per_feature_counts_;
  return j;
}

UnigramModel UnigramModel::from_json(const json& j) {
  try {
    if (j.value("format", "") != "morphdis-unigrams") throw FormatError("not a unigram model file");
    if (j.at("format_version").get<int>() != 1) throw VersionError("unsupported unigram model version");
    UnigramModel m;
    m.total_ = j.at("total_tokens").get<std::size_t>();
    m.epsilon_ = j.at("smoothing_epsilon").get<double>();
    m.feature_space_ = j.at("feature_space").get<std::map<std::string, std::size_t>>();
    m.unfactored_counts_ = j.at("unfactored_counts").get<std::map<std::string, std::size_t>>();
    m.per_feature_counts_ = j.at("per_feature_counts").get<std::map<std::string, std::map<std::string, std::size_t>>>();
    if (m.total_ == 0 || m.epsilon_ <= 0.0) throw FormatError("unigram model is empty");
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed unigram model: ") + e.what());
  }
}

void save_unigrams(const std::filesystem::path& path, const UnigramModel& model) {
  write_file(path, model.to_json().dump() + "\n");
}

UnigramModel load_unigrams(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed unigram model: ") + e.what());
  }
  return UnigramModel::from_json(j);
}

int match_count(const FeatureBundle& prediction, const Analysis& candidate, const FeatureSchema& schema) {
  FeatureBundle pred, cand;
  try {
    pred = schema.complete(prediction);
    cand = schema.complete(candidate.features);
  } catch (const ValueError& e) {
    throw SchemaMismatch(e.what());
  }
  int n = 0;
  for (const auto& f : schema.features())
    if (pred.at(f.name) == cand.at(f.name)) ++n;
  return n;
}

double tie_break_score(const Analysis& candidate, const UnigramModel& unigrams, const FeatureSchema& schema,
                       const TieBreakWeights& weights) {
  const FeatureBundle b = schema.complete(candidate.features);
  double product = 1.0;
  for (const auto& f : schema.features()) product *= unigrams.feature_prob(f.name, b.at(f.name));
  return weights.unfactored * unigrams.unfactored_prob(serialize_unfactored(b, schema)) + weights.product * product;
}

double tie_break_score(const Analysis& candidate, const FeatureDistribution& dist, const FeatureSchema& schema,
                       const TieBreakWeights& weights) {
  const FeatureBundle b = schema.complete(candidate.features);
  double product = 1.0;
  for (const auto& f : schema.features()) product *= dist.prob(f.name, b.at(f.name));
  double unfactored = product;
  if (!dist.unfactored.empty()) {
    const std::string tag = serialize_unfactored(b, schema);
    unfactored = 0.0;
    for (const auto& [t, p] : dist.unfactored)
      if (t == tag) unfactored = p;
  }
  return weights.unfactored * unfactored + weights.product * product;
}

namespace {

std::vector<RankedCandidate> rank_with(const FeatureBundle& prediction, std::span<const Analysis> candidates,
                                       const FeatureSchema& schema,
                                       const std::function<double(const Analysis&)>& tie_score) {
  if (candidates.empty()) throw EmptyCandidates("no candidates to rank");
  struct Keyed {
    RankedCandidate c;
    std::string canonical;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(candidates.size());
  for (const auto& a : candidates) {
    Keyed k;
    k.c.analysis = a;
    k.c.match_count = match_count(prediction, a, schema);
    k.c.tie_score = tie_score(a);
    k.canonical = canonical_analysis(a);
    keyed.push_back(std::move(k));
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& x, const Keyed& y) {
    if (x.c.match_count != y.c.match_count) return x.c.match_count > y.c.match_count;
    if (x.c.tie_score != y.c.tie_score) return x.c.tie_score > y.c.tie_score;
    return x.canonical < y.canonical;
  });
  std::vector<RankedCandidate> out;
  out.reserve(keyed.size());
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    keyed[i].c.final_rank = static_cast<int>(i) + 1;
    out.push_back(std::move(keyed[i].c));
  }
  return out;
}

}  // namespace

std::vector<RankedCandidate> rank_analyses(const FeatureBundle& prediction, std::span<const Analysis> candidates,
                                           const UnigramModel& unigrams, const FeatureSchema& schema,
                                           const TieBreakWeights& weights) {
  return rank_with(prediction, candidates, schema,
                   [&](const Analysis& a) { return tie_break_score(a, unigrams, schema, weights); });
}

std::string_view decision_source_name(DecisionSource s) {
  switch (s) {
    case DecisionSource::kAnalyzer: return "analyzer";
    case DecisionSource::kKeptPrediction: return "kept-prediction";
    case DecisionSource::kSynthesized: return "synthesized";
  }
  return "analyzer";
}

Analysis analysis_from_prediction(const FeatureBundle& prediction, const std::string& raw) {
  Analysis a;
  a.features = prediction;
  a.lex = raw;
  a.diac = raw;
  return a;
}

std::vector<TokenDecision> disambiguate_sentence(const Sentence& sentence,
                                                 const std::vector<FeatureDistribution>& distributions,
                                                 const AnalyzerDB& db, const UnigramModel& unigrams,
                                                 const FeatureSchema& schema,
                                                 const DisambiguationOptions& options) {
  if (distributions.size() != sentence.tokens.size())
    throw AlignmentError("sentence '" + sentence.id + "': " + std::to_string(distributions.size()) +
                         " distributions for " + std::to_string(sentence.tokens.size()) + " tokens");
  std::vector<TokenDecision> out;
  out.reserve(sentence.tokens.size());
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    const auto& raw = sentence.tokens[i].raw;
    TokenDecision d;
    d.prediction = prediction_bundle(distributions[i], schema);
    auto candidates = db.analyze(raw);
    if (!candidates) {
      d.analysis = analysis_from_prediction(d.prediction, raw);
      d.source = db.backoff() == BackoffPolicy::kKeepPredictions ? DecisionSource::kKeptPrediction
                                                                 : DecisionSource::kSynthesized;
    } else {
      std::vector<RankedCandidate> ranking;
      if (options.source == TieBreakSource::kUnigram) {
        ranking = rank_analyses(d.prediction, *candidates, unigrams, schema, options.weights);
      } else {
        ranking = rank_with(d.prediction, *candidates, schema, [&](const Analysis& a) {
          return tie_break_score(a, distributions[i], schema, options.weights);
        });
      }
      d.analysis = ranking.front().analysis;
      d.source = DecisionSource::kAnalyzer;
      if (options.trace) d.ranking = std::move(ranking);
    }
    out.push_back(std::move(d));
  }
  return out;
}

Corpus apply_predictions(const Corpus& corpus, const std::vector<std::vector<FeatureDistribution>>& distributions,
                         const FeatureSchema& schema, const AnalyzerDB* db, const UnigramModel* unigrams,
                         const DisambiguationOptions& options, std::vector<std::vector<TokenDecision>>* decisions) {
  if (distributions.size() != corpus.sentences.size())
    throw AlignmentError("got " + std::to_string(distributions.size()) + " sentence distributions for " +
                         std::to_string(corpus.sentences.size()) + " sentences");
  if (db && !unigrams) throw ValueError("retagging needs a unigram model");
  Corpus out = corpus;
  for (std::size_t s = 0; s < corpus.sentences.size(); ++s) {
    auto& sent = out.sentences[s];
    if (db) {
      auto ds = disambiguate_sentence(corpus.sentences[s], distributions[s], *db, *unigrams, schema, options);
      for (std::size_t i = 0; i < ds.size(); ++i) sent.tokens[i].analysis = ds[i].analysis;
      if (decisions) decisions->push_back(std::move(ds));
    } else {
      if (distributions[s].size() != sent.tokens.size())
        throw AlignmentError("sentence '" + sent.id + "': token count mismatch");
      for (std::size_t i = 0; i < sent.tokens.size(); ++i)
        sent.tokens[i].analysis =
            analysis_from_prediction(prediction_bundle(distributions[s][i], schema), sent.tokens[i].raw);
    }
  }
  return out;
}

json trace_record(const Sentence& sentence, const std::vector<TokenDecision>& decisions) {
  json rec;
  rec["id"] = sentence.id;
  rec["tokens"] = json::array();
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const auto& d = decisions[i];
    json t;
    t["raw"] = sentence.tokens[i].raw;
    t["source"] = std::string(decision_source_name(d.source));
    t["prediction"] = d.prediction;
    t["candidates"] = json::array();
    for (const auto& c : d.ranking)
      t["candidates"].push_back({{"rank", c.final_rank},
                                 {"match_count", c.match_count},
                                 {"tie_score", c.tie_score},
                                 {"analysis", analysis_to_json(c.analysis)}});
    rec["tokens"].push_back(std::move(t));
  }
  return rec;
}

}  // namespace morphdis
