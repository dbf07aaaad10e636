#include "morphdis/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "morphdis/errors.hpp"

namespace morphdis {

using nlohmann::json;

std::string_view tagger_kind_name(TaggerKind k) {
  return k == TaggerKind::kFactored ? "FACTORED" : "UNFACTORED";
}

TaggerKind parse_tagger_kind(std::string_view name) {
  std::string n = to_lower_ascii(name);
  if (n == "factored") return TaggerKind::kFactored;
  if (n == "unfactored") return TaggerKind::kUnfactored;
  throw ValueError("unknown tagger kind '" + std::string(name) + "'");
}

std::vector<double> LinearClassifier::scores(const std::vector<std::string>& active) const {
  std::vector<double> out(labels.size(), 0.0);
  for (const auto& f : active) {
    auto it = weights.find(f);
    if (it == weights.end()) continue;
    const auto& row = it->second;
    for (std::size_t k = 0; k < out.size() && k < row.size(); ++k) out[k] += row[k];
  }
  return out;
}

std::vector<std::string> extract_features(const std::vector<std::string>& forms, std::size_t i,
                                          std::string_view prev_core_tag) {
  const std::string& w = forms[i];
  std::vector<std::string> f;
  f.reserve(14);
  f.emplace_back("bias");
  f.push_back("w=" + w);
  f.push_back("lw=" + to_lower_ascii(w));
  const std::u32string cps = utf8::decode(w);
  for (std::size_t n = 1; n <= 3 && n <= cps.size(); ++n) {
    f.push_back("p" + std::to_string(n) + "=" + utf8::encode(cps.substr(0, n)));
    f.push_back("s" + std::to_string(n) + "=" + utf8::encode(cps.substr(cps.size() - n)));
  }
  f.push_back("pw=" + (i > 0 ? forms[i - 1] : std::string("<s>")));
  f.push_back("nw=" + (i + 1 < forms.size() ? forms[i + 1] : std::string("</s>")));
  f.push_back("pt=" + std::string(prev_core_tag));
  if (i == 0) f.emplace_back("first");
  if (i + 1 == forms.size()) f.emplace_back("last");
  return f;
}

namespace {

constexpr const char* kNoTag = "<none>";

std::size_t argmax(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

std::vector<double> softmax(const std::vector<double>& scores) {
  std::vector<double> p(scores.size());
  if (scores.empty()) return p;
  const double m = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) z += (p[k] = std::exp(scores[k] - m));
  for (auto& x : p) x /= z;
  return p;
}

std::vector<std::string> forms_of(const Sentence& s) {
  std::vector<std::string> forms;
  forms.reserve(s.tokens.size());
  for (const auto& t : s.tokens) forms.push_back(t.raw);
  return forms;
}

/// Averaged-perceptron parameter with lazy averaging: `total` holds the sum of
/// the weight over all completed steps up to `stamp`.
struct Param {
  double w = 0.0;
  double total = 0.0;
  std::int64_t stamp = 0;
};

struct ClassifierState {
  std::string name;
  std::vector<std::string> labels;
  std::unordered_map<std::string, std::vector<Param>> params;

  std::vector<double> scores(const std::vector<std::string>& active) const {
    std::vector<double> out(labels.size(), 0.0);
    for (const auto& f : active) {
      auto it = params.find(f);
      if (it == params.end()) continue;
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += it->second[k].w;
    }
    return out;
  }

  void update(const std::vector<std::string>& active, std::size_t gold, std::size_t pred, std::int64_t now) {
    for (const auto& f : active) {
      auto& row = params[f];
      if (row.size() < labels.size()) row.resize(labels.size());
      for (auto [k, delta] : {std::pair{gold, 1.0}, std::pair{pred, -1.0}}) {
        Param& p = row[k];
        p.total += static_cast<double>(now - p.stamp) * p.w;
        p.stamp = now;
        p.w += delta;
      }
    }
  }

  LinearClassifier averaged(std::int64_t steps) const {
    LinearClassifier c;
    c.name = name;
    c.labels = labels;
    for (const auto& [feat, row] : params) {
      std::vector<double> avg(labels.size(), 0.0);
      bool any = false;
      for (std::size_t k = 0; k < row.size(); ++k) {
        const Param& p = row[k];
        avg[k] = (p.total + static_cast<double>(steps - p.stamp) * p.w) / static_cast<double>(steps);
        any = any || avg[k] != 0.0;
      }
      if (any) c.weights.emplace(feat, std::move(avg));
    }
    return c;
  }
};

void check_init(const TaggerModel& init, TaggerKind kind, const FeatureSchema& schema) {
  if (init.kind() != kind) throw SchemaMismatch("init model kind does not match");
  if (init.schema().variant() != schema.variant() || init.schema().feature_names() != schema.feature_names())
    throw SchemaMismatch("init model schema '" + init.schema().variant() + "' does not match '" +
                         schema.variant() + "'");
}

ClassifierState warm_state(const std::string& name, std::vector<std::string> labels,
                           const LinearClassifier* init) {
  ClassifierState st;
  st.name = name;
  st.labels = std::move(labels);
  if (!init) return st;
  std::vector<std::size_t> remap(init->labels.size());
  for (std::size_t k = 0; k < init->labels.size(); ++k) {
    auto it = std::lower_bound(st.labels.begin(), st.labels.end(), init->labels[k]);
    remap[k] = static_cast<std::size_t>(it - st.labels.begin());
  }
  for (const auto& [feat, row] : init->weights) {
    auto& prow = st.params[feat];
    prow.resize(st.labels.size());
    for (std::size_t k = 0; k < row.size(); ++k) prow[remap[k]].w = row[k];
  }
  return st;
}

}  // namespace

TaggerModel::TaggerModel(TaggerKind kind, FeatureSchema schema, std::vector<LinearClassifier> classifiers,
                         TrainingMeta meta, std::size_t top_k)
    : kind_(kind),
      schema_(std::move(schema)),
      classifiers_(std::move(classifiers)),
      meta_(std::move(meta)),
      top_k_(top_k) {}

const std::vector<std::string>& TaggerModel::label_space(std::string_view classifier) const {
  for (const auto& c : classifiers_)
    if (c.name == classifier) return c.labels;
  throw UnknownFeature("model has no classifier '" + std::string(classifier) + "'");
}

std::vector<FeatureDistribution> TaggerModel::predict(const Sentence& sentence) const {
  return predict(forms_of(sentence));
}

std::vector<FeatureDistribution> TaggerModel::predict(const std::vector<std::string>& forms) const {
  std::vector<FeatureDistribution> out(forms.size());
  std::string prev_core = kNoTag;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    const auto active = extract_features(forms, i, prev_core);
    FeatureDistribution& d = out[i];
    if (kind_ == TaggerKind::kFactored) {
      for (const auto& c : classifiers_) {
        auto p = softmax(c.scores(active));
        auto& vec = d.per_feature[c.name];
        for (std::size_t k = 0; k < p.size(); ++k) vec[c.labels[k]] = p[k];
        if (c.name == "pos") prev_core = c.labels[argmax(p)];
      }
    } else {
      const auto& c = classifiers_.front();
      auto p = softmax(c.scores(active));
      std::vector<std::size_t> order(p.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      const std::size_t k = std::min(top_k_ ? top_k_ : order.size(), order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::size_t a, std::size_t b) { return p[a] != p[b] ? p[a] > p[b] : a < b; });
      double kept = 0.0;
      for (std::size_t r = 0; r < k; ++r) kept += p[order[r]];
      for (std::size_t r = 0; r < k; ++r) d.unfactored.emplace_back(c.labels[order[r]], p[order[r]] / kept);
      derive_marginals(d, schema_);
      if (schema_.has_feature("pos"))
        prev_core = parse_unfactored(d.unfactored.front().first, schema_).at("pos");
    }
  }
  return out;
}

TaggerModel train(const Corpus& corpus, TaggerKind kind, const FeatureSchema& schema, const TrainConfig& config) {
  if (corpus.token_count() == 0) throw EmptyCorpus("cannot train on an empty corpus");
  if (config.epochs < 1) throw ValueError("epochs must be at least 1");
  if (config.init) check_init(*config.init, kind, schema);

  // Gold label per token, per classifier.
  std::vector<ClassifierState> states;
  std::vector<std::vector<std::vector<std::size_t>>> gold;  // [sentence][token][classifier]
  std::vector<std::string> core_of_label;  // UNFACTORED: pos field per label

  auto init_classifier = [&](const std::string& name) -> const LinearClassifier* {
    if (!config.init) return nullptr;
    for (const auto& c : config.init->classifiers())
      if (c.name == name) return &c;
    return nullptr;
  };

  std::vector<std::vector<std::string>> tags(corpus.sentences.size());
  try {
    for (std::size_t s = 0; s < corpus.sentences.size(); ++s)
      for (const auto& t : corpus.sentences[s].tokens) tags[s].push_back(serialize_unfactored(t.analysis.features, schema));
  } catch (const ValueError& e) {
    throw SchemaMismatch(std::string("corpus does not fit schema: ") + e.what());
  }

  if (kind == TaggerKind::kFactored) {
    for (const auto& f : schema.features()) states.push_back(warm_state(f.name, f.values, init_classifier(f.name)));
    for (const auto& s : corpus.sentences) {
      auto& gs = gold.emplace_back();
      for (const auto& t : s.tokens) {
        auto& gt = gs.emplace_back();
        for (const auto& f : schema.features()) {
          const auto& v = t.analysis.features.at(f.name);
          gt.push_back(static_cast<std::size_t>(std::lower_bound(f.values.begin(), f.values.end(), v) - f.values.begin()));
        }
      }
    }
  } else {
    std::set<std::string> label_set;
    for (const auto& ts : tags) label_set.insert(ts.begin(), ts.end());
    if (const auto* c = init_classifier(kUnfactoredClassifier)) label_set.insert(c->labels.begin(), c->labels.end());
    std::vector<std::string> labels(label_set.begin(), label_set.end());
    states.push_back(warm_state(kUnfactoredClassifier, labels, init_classifier(kUnfactoredClassifier)));
    for (const auto& l : labels)
      core_of_label.push_back(schema.has_feature("pos") ? parse_unfactored(l, schema).at("pos") : kNoTag);
    for (const auto& ts : tags) {
      auto& gs = gold.emplace_back();
      for (const auto& tag : ts)
        gs.push_back({static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), tag) - labels.begin())});
    }
  }
  const auto pos_index = schema.index_of("pos");

  std::vector<std::vector<std::string>> forms(corpus.sentences.size());
  for (std::size_t s = 0; s < corpus.sentences.size(); ++s) forms[s] = forms_of(corpus.sentences[s]);

  TrainingMeta meta;
  meta.epochs = config.epochs;
  meta.seed = config.seed;
  meta.source_corpora = config.source_corpora;
  meta.init_model = config.init_ref;

  auto snapshot = [&](std::int64_t steps) {
    std::vector<LinearClassifier> cs;
    for (const auto& st : states) cs.push_back(st.averaged(steps));
    return cs;
  };

  Rng rng(config.seed);
  std::vector<std::size_t> order(corpus.sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::int64_t steps = 0;
  std::vector<LinearClassifier> best;
  double best_tune = -1.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t correct = 0, seen = 0;
    for (std::size_t s : order) {
      const auto& fs = forms[s];
      std::string prev_core = kNoTag;
      for (std::size_t i = 0; i < fs.size(); ++i) {
        const auto active = extract_features(fs, i, prev_core);
        bool all_right = true;
        for (std::size_t c = 0; c < states.size(); ++c) {
          const auto sc = states[c].scores(active);
          const std::size_t pred = argmax(sc);
          const std::size_t g = gold[s][i][c];
          if (pred != g) all_right = false;
          // a tie with the gold label counts as a mistake
          std::size_t rival = g == 0 && sc.size() > 1 ? 1 : 0;
          for (std::size_t k = 0; k < sc.size(); ++k)
            if (k != g && sc[k] > sc[rival]) rival = k;
          if (rival != g && sc[rival] >= sc[g]) states[c].update(active, g, pred != g ? pred : rival, steps);
          if (kind == TaggerKind::kFactored) {
            if (pos_index && c == *pos_index) prev_core = states[c].labels[pred];
          } else {
            prev_core = core_of_label[pred];
          }
        }
        ++steps;
        ++seen;
        if (all_right) ++correct;
      }
    }
    EpochLog entry{epoch, static_cast<double>(correct) / static_cast<double>(seen), std::nullopt};
    if (config.tune) {
      auto cs = snapshot(steps);
      TaggerModel candidate(kind, schema, cs, meta, config.top_k);
      const double acc = all_tags_accuracy(candidate, *config.tune);
      entry.tune_accuracy = acc;
      if (acc > best_tune) {
        best_tune = acc;
        best = std::move(cs);
        meta.best_epoch = epoch;
      }
    }
    meta.log.push_back(entry);
  }
  if (!config.tune) {
    best = snapshot(steps);
    meta.best_epoch = config.epochs;
  }
  return TaggerModel(kind, schema, std::move(best), std::move(meta), config.top_k);
}

double all_tags_accuracy(const TaggerModel& model, const Corpus& corpus) {
  std::size_t total = 0, correct = 0;
  for (const auto& s : corpus.sentences) {
    const auto dists = model.predict(s);
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      ++total;
      if (prediction_bundle(dists[i], model.schema()) == model.schema().complete(s.tokens[i].analysis.features))
        ++correct;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

json TaggerModel::to_json() const {
  json j;
  j["format"] = "morphdis-tagger";
  j["format_version"] = 1;
  j["kind"] = std::string(tagger_kind_name(kind_));
  j["schema"] = schema_.to_json();
  j["top_k"] = top_k_;
  json meta;
  meta["epochs"] = meta_.epochs;
  meta["best_epoch"] = meta_.best_epoch;
  meta["seed"] = meta_.seed;
  meta["source_corpora"] = meta_.source_corpora;
  meta["init_model"] = meta_.init_model;
  meta["log"] = json::array();
  for (const auto& e : meta_.log) {
    json le{{"epoch", e.epoch}, {"train_accuracy", e.train_accuracy}};
    if (e.tune_accuracy) le["tune_accuracy"] = *e.tune_accuracy;
    meta["log"].push_back(le);
  }
  j["training_meta"] = meta;
  j["classifiers"] = json::array();
  for (const auto& c : classifiers_) {
    json jc;
    jc["name"] = c.name;
    jc["labels"] = c.labels;
    std::map<std::string, const std::vector<double>*> sorted;
    for (const auto& [f, row] : c.weights) sorted.emplace(f, &row);
    jc["weights"] = json::object();
    for (const auto& [f, row] : sorted) jc["weights"][f] = *row;
    j["classifiers"].push_back(std::move(jc));
  }
  return j;
}

TaggerModel TaggerModel::from_json(const json& j) {
  try {
    if (j.value("format", "") != "morphdis-tagger") throw FormatError("not a tagger model file");
    if (j.at("format_version").get<int>() != 1) throw VersionError("unsupported tagger model version");
    TaggerKind kind = parse_tagger_kind(j.at("kind").get<std::string>());
    FeatureSchema schema = load_schema(j.at("schema"));
    TrainingMeta meta;
    const auto& m = j.at("training_meta");
    meta.epochs = m.at("epochs").get<int>();
    meta.best_epoch = m.at("best_epoch").get<int>();
    meta.seed = m.at("seed").get<std::uint64_t>();
    meta.source_corpora = m.at("source_corpora").get<std::vector<std::string>>();
    meta.init_model = m.at("init_model").get<std::string>();
    for (const auto& le : m.at("log")) {
      EpochLog e{le.at("epoch").get<int>(), le.at("train_accuracy").get<double>(), std::nullopt};
      if (le.contains("tune_accuracy")) e.tune_accuracy = le["tune_accuracy"].get<double>();
      meta.log.push_back(e);
    }
    std::vector<LinearClassifier> cs;
    for (const auto& jc : j.at("classifiers")) {
      LinearClassifier c;
      c.name = jc.at("name").get<std::string>();
      c.labels = jc.at("labels").get<std::vector<std::string>>();
      for (const auto& [f, row] : jc.at("weights").items()) {
        auto v = row.get<std::vector<double>>();
        if (v.size() != c.labels.size()) throw FormatError("weight row width mismatch for '" + f + "'");
        c.weights.emplace(f, std::move(v));
      }
      cs.push_back(std::move(c));
    }
    if (cs.empty()) throw FormatError("model has no classifiers");
    return TaggerModel(kind, std::move(schema), std::move(cs), std::move(meta), j.at("top_k").get<std::size_t>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed tagger model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const TaggerModel& model) {
  write_file(path, model.to_json().dump() + "\n");
}

TaggerModel load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed tagger model: ") + e.what());
  }
  return TaggerModel::from_json(j);
}

}  // namespace morphdis
