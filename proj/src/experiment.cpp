#include "morphdis/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

#include "morphdis/corpus.hpp"
#include "morphdis/disambiguator.hpp"
#include "morphdis/distribution.hpp"
#include "morphdis/errors.hpp"
#include "morphdis/harmonizer.hpp"

namespace morphdis {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kSingle: return "SINGLE";
    case Strategy::kMerged: return "MERGED";
    case Strategy::kContinued: return "CONTINUED";
  }
  return "SINGLE";
}

Strategy parse_strategy(std::string_view name) {
  const std::string n = to_lower_ascii(name);
  if (n == "single") return Strategy::kSingle;
  if (n == "merged") return Strategy::kMerged;
  if (n == "continued") return Strategy::kContinued;
  throw ValueError("unknown strategy '" + std::string(name) + "'");
}

void ExperimentSpec::validate() const {
  if (variant.empty()) throw ValueError("experiment spec needs a variant");
  if (sizes.empty()) throw ValueError("experiment spec needs at least one training size");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw ValueError("training sizes must be positive");
    if (i && sizes[i] <= sizes[i - 1]) throw ValueError("training sizes must be strictly increasing");
  }
  if (epochs < 1) throw ValueError("epochs must be at least 1");
  for (const auto* p : {&paths.train, &paths.tune, &paths.dev, &paths.test})
    if (p->empty()) throw ValueError("experiment spec needs train, tune, dev and test paths");
  if (use_analyzer != paths.analyzer.has_value())
    throw ValueError("an analyzer path is required exactly when use_analyzer is set");
  if (paths.external_dev.has_value() != paths.external_test.has_value())
    throw ValueError("external distributions must be given for both dev and test");
  if (strategy != Strategy::kSingle && high_resource.empty())
    throw ValueError(std::string(strategy_name(strategy)) + " needs high-resource corpus paths");
}

ExperimentSpec experiment_spec_from_json(const json& j, const fs::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  ExperimentSpec s;
  try {
    s.variant = j.at("variant").get<std::string>();
    s.schema = j.value("schema", s.variant);
    if (s.schema.find('/') != std::string::npos || s.schema.ends_with(".json")) s.schema = resolve(s.schema).string();
    s.kind = parse_tagger_kind(j.value("kind", std::string("factored")));
    s.use_analyzer = j.value("use_analyzer", false);
    s.sizes = j.at("sizes").get<std::vector<std::size_t>>();
    s.strategy = parse_strategy(j.value("strategy", std::string("single")));
    s.seed = j.value("seed", s.seed);
    s.epochs = j.value("epochs", s.epochs);
    const auto& p = j.at("paths");
    s.paths.train = resolve(p.at("train").get<std::string>());
    s.paths.tune = resolve(p.at("tune").get<std::string>());
    s.paths.dev = resolve(p.at("dev").get<std::string>());
    s.paths.test = resolve(p.at("test").get<std::string>());
    if (p.contains("analyzer")) s.paths.analyzer = resolve(p["analyzer"].get<std::string>());
    if (p.contains("external_distributions")) {
      const auto& e = p["external_distributions"];
      if (e.contains("dev")) s.paths.external_dev = resolve(e["dev"].get<std::string>());
      if (e.contains("test")) s.paths.external_test = resolve(e["test"].get<std::string>());
    }
    if (j.contains("high_resource")) {
      for (const auto& h : j["high_resource"]) {
        HighResourceCorpus c;
        c.variant = h.at("variant").get<std::string>();
        c.path = resolve(h.at("path").get<std::string>());
        c.schema = h.value("schema", c.variant);
        s.high_resource.push_back(std::move(c));
      }
    }
    if (j.contains("harmonization")) s.harmonization = resolve(j["harmonization"].get<std::string>());
    if (j.contains("backoff")) s.backoff = parse_backoff(j["backoff"].get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed experiment spec: ") + e.what());
  }
  s.validate();
  return s;
}

json experiment_spec_to_json(const ExperimentSpec& s) {
  json paths{{"train", s.paths.train.string()},
             {"tune", s.paths.tune.string()},
             {"dev", s.paths.dev.string()},
             {"test", s.paths.test.string()}};
  if (s.paths.analyzer) paths["analyzer"] = s.paths.analyzer->string();
  if (s.paths.external_dev)
    paths["external_distributions"] = {{"dev", s.paths.external_dev->string()},
                                       {"test", s.paths.external_test->string()}};
  json j{{"variant", s.variant},
         {"schema", s.schema},
         {"kind", to_lower_ascii(tagger_kind_name(s.kind))},
         {"use_analyzer", s.use_analyzer},
         {"sizes", s.sizes},
         {"strategy", to_lower_ascii(strategy_name(s.strategy))},
         {"seed", s.seed},
         {"epochs", s.epochs},
         {"paths", paths},
         {"backoff", to_lower_ascii(backoff_name(s.backoff))}};
  j["high_resource"] = json::array();
  for (const auto& h : s.high_resource)
    j["high_resource"].push_back({{"variant", h.variant}, {"path", h.path.string()}, {"schema", h.schema}});
  if (s.harmonization) j["harmonization"] = s.harmonization->string();
  return j;
}

ExperimentSpec load_experiment_spec(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed experiment spec: ") + e.what());
  }
  return experiment_spec_from_json(j, path.parent_path());
}

std::string report_key(std::string_view split, std::string_view system, std::string_view subset, Slice slice) {
  return std::string(split) + "/" + std::string(system) + "/" + std::string(subset) + "/" +
         to_lower_ascii(slice_name(slice));
}

const EvalReport& ExperimentResult::report(std::size_t budget, const std::string& key) const {
  for (const auto& s : sizes) {
    if (s.budget != budget) continue;
    auto it = s.reports.find(key);
    if (it != s.reports.end()) return it->second;
  }
  throw ValueError("no report '" + key + "' for size " + std::to_string(budget));
}

namespace {

template <class F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.what());
  }
}

fs::path fresh_run_dir(const fs::path& out_dir) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  fs::path dir = out_dir / (std::string("run-") + stamp);
  for (int n = 1; fs::exists(dir); ++n) dir = out_dir / (std::string("run-") + stamp + "-" + std::to_string(n));
  fs::create_directories(dir);
  return dir;
}

Corpus concatenate(const Corpus& a, const Corpus& b) {
  Corpus out = a;
  out.sentences.insert(out.sentences.end(), b.sentences.begin(), b.sentences.end());
  return out;
}

AnalyzerDB harmonize_db(const AnalyzerDB& db, const Harmonizer& h, std::string_view variant) {
  AnalyzerDB::Entries entries;
  for (const auto& [word, analyses] : db.entries()) {
    auto& out = entries[word];
    for (const auto& a : analyses) out.push_back(h.harmonize_analysis(a, variant));
  }
  return AnalyzerDB(h.reduced_schema().variant(), std::move(entries), db.backoff(), db.provenance() + "+harmonized");
}

std::vector<std::vector<FeatureDistribution>> predict_corpus(const TaggerModel& model, const Corpus& corpus) {
  std::vector<std::vector<FeatureDistribution>> out;
  out.reserve(corpus.sentences.size());
  for (const auto& s : corpus.sentences) out.push_back(model.predict(s));
  return out;
}

std::vector<SentenceDistributions> as_interchange(const Corpus& corpus,
                                                  const std::vector<std::vector<FeatureDistribution>>& dists) {
  std::vector<SentenceDistributions> out;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    SentenceDistributions sd;
    sd.id = corpus.sentences[i].id;
    for (const auto& t : corpus.sentences[i].tokens) sd.raw.push_back(t.raw);
    sd.tokens = dists[i];
    out.push_back(std::move(sd));
  }
  return out;
}

// Cells kept across sizes for the learning-curve tables.
struct CurveInput {
  std::map<CurveKey, CurveCell> cells;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, const fs::path& out_dir) {
  spec.validate();
  ExperimentResult result;
  result.run_dir = fresh_run_dir(out_dir);
  write_file(result.run_dir / "spec.json", experiment_spec_to_json(spec).dump(2) + "\n");

  const FeatureSchema target = in_stage("schema", [&] { return resolve_schema(spec.schema.empty() ? spec.variant : spec.schema); });
  Corpus train, tune, dev, test;
  in_stage("load corpora", [&] {
    train = read_corpus(spec.paths.train, target, Split::kTrain);
    tune = read_corpus(spec.paths.tune, target, Split::kTune);
    dev = read_corpus(spec.paths.dev, target, Split::kDev);
    test = read_corpus(spec.paths.test, target, Split::kTest);
  });

  // MERGED and CONTINUED work in the harmonized reduced space.
  std::optional<Harmonizer> harmonizer;
  std::vector<VariantCorpus> high;
  FeatureSchema model_schema = target;
  if (spec.strategy != Strategy::kSingle) {
    in_stage("harmonize", [&] {
      HarmonizationConfig config = spec.harmonization
                                       ? load_harmonization_config(*spec.harmonization)
                                       : load_harmonization_config(data_dir() / "harmonize" / "default.json");
      const FeatureSchema harmonized_target = resolve_schema(config.target_variant);
      harmonizer.emplace(std::move(config), harmonized_target);
      model_schema = harmonizer->reduced_schema();
      for (const auto& h : spec.high_resource)
        high.emplace_back(read_corpus(h.path, resolve_schema(h.schema.empty() ? h.variant : h.schema), Split::kTrain), h.variant);
      tune = harmonizer->harmonize_corpus(tune, spec.variant);
      dev = harmonizer->harmonize_corpus(dev, spec.variant);
      test = harmonizer->harmonize_corpus(test, spec.variant);
    });
  }

  std::optional<AnalyzerDB> db;
  if (spec.use_analyzer) {
    in_stage("load analyzer", [&] {
      AnalyzerDB loaded = load_db(*spec.paths.analyzer, target).with_backoff(spec.backoff);
      db = harmonizer ? harmonize_db(loaded, *harmonizer, spec.variant) : std::move(loaded);
    });
  }

  const bool external = spec.paths.external_dev.has_value();
  std::map<std::string, std::vector<std::vector<FeatureDistribution>>> external_dists;
  if (external) {
    in_stage("load external distributions", [&] {
      external_dists["dev"] = load_external_distributions(*spec.paths.external_dev, model_schema, dev);
      external_dists["test"] = load_external_distributions(*spec.paths.external_test, model_schema, test);
    });
  }

  const std::vector<Corpus> samples =
      in_stage("sample", [&] { return sample_learning_curve(train, spec.sizes, spec.seed); });

  std::optional<TaggerModel> stage1_model;
  Corpus stage1;
  if (spec.strategy == Strategy::kContinued) {
    in_stage("stage 1", [&] {
      stage1 = build_stages(high, {samples.front(), spec.variant}, *harmonizer, spec.seed).stage1;
      if (external) return;
      TrainConfig cfg;
      cfg.epochs = spec.epochs;
      cfg.seed = spec.seed;
      cfg.tune = &tune;
      for (const auto& h : spec.high_resource) cfg.source_corpora.push_back(h.variant);
      stage1_model = morphdis::train(stage1, spec.kind, model_schema, cfg);
      save_model(result.run_dir / "stage1" / "model.json", *stage1_model);
    });
  }

  const std::string kind = to_lower_ascii(tagger_kind_name(spec.kind));
  std::vector<std::string> systems = {kind};
  if (db) systems.push_back(kind + "+morph");
  const std::vector<std::string> subsets = {"pos", "all", "all-star:" + spec.variant, "all10"};
  std::map<std::string, CurveInput> curve_inputs;  // "<split>/<subset>"

  const fs::path categories_path = data_dir() / "eval" / "pos_categories.json";
  const PosCategoryMap categories = fs::exists(categories_path) ? load_pos_categories(categories_path) : PosCategoryMap{};

  for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
    const std::size_t budget = spec.sizes[si];
    const std::string stage = "size " + std::to_string(budget);
    SizeOutcome outcome;
    outcome.budget = budget;
    outcome.dir = result.run_dir / ("size-" + std::to_string(budget));

    Corpus train_data, unigram_data;
    in_stage(stage + ": training data", [&] {
      const Corpus& sample = samples[si];
      if (spec.strategy == Strategy::kSingle) {
        train_data = sample;
      } else if (spec.strategy == Strategy::kMerged) {
        std::vector<VariantCorpus> all = high;
        all.emplace_back(sample, spec.variant);
        train_data = build_merged(all, *harmonizer, spec.seed);
      } else {
        train_data = harmonizer->harmonize_corpus(sample, spec.variant);
        for (auto& s : train_data.sentences) s.source = spec.variant;
      }
      unigram_data = spec.strategy == Strategy::kContinued ? concatenate(stage1, train_data) : train_data;
    });
    outcome.train_tokens = samples[si].token_count();
    write_corpus(outcome.dir / "train.jsonl", train_data);

    std::optional<TaggerModel> model;
    if (!external) {
      in_stage(stage + ": train", [&] {
        TrainConfig cfg;
        cfg.epochs = spec.epochs;
        cfg.seed = spec.seed;
        cfg.tune = &tune;
        if (spec.strategy == Strategy::kContinued) {
          cfg.init = &*stage1_model;
          cfg.init_ref = "../stage1/model.json";
          cfg.source_corpora = {spec.variant};
        } else if (spec.strategy == Strategy::kMerged) {
          for (const auto& h : spec.high_resource) cfg.source_corpora.push_back(h.variant);
          cfg.source_corpora.push_back(spec.variant);
        } else {
          cfg.source_corpora = {spec.variant};
        }
        model = morphdis::train(train_data, spec.kind, model_schema, cfg);
        save_model(outcome.dir / "model.json", *model);
      });
    }
    const UnigramModel unigrams = in_stage(stage + ": unigrams", [&] { return UnigramModel(unigram_data, model_schema); });

    json reports_json = json::object();
    for (const auto& [split, gold] : {std::pair<std::string, const Corpus*>{"dev", &dev}, {"test", &test}}) {
      in_stage(stage + ": evaluate " + split, [&] {
        const auto dists = external ? external_dists.at(split) : predict_corpus(*model, *gold);
        write_distributions(outcome.dir / "predictions" / (split + ".dist.jsonl"), as_interchange(*gold, dists));
        const std::vector<bool> oov = oov_mask(*gold, train_data);
        outcome.unseen_tag_rate[split] = unseen_tag_rate(*gold, train_data, model_schema);
        for (const auto& system : systems) {
          const bool morph = system != kind;
          std::vector<std::vector<TokenDecision>> decisions;
          const Corpus pred = apply_predictions(*gold, dists, model_schema, morph ? &*db : nullptr,
                                                morph ? &unigrams : nullptr, {}, morph ? &decisions : nullptr);
          write_corpus(outcome.dir / "predictions" / (split + "." + system + ".jsonl"), pred);
          std::vector<bool> no_analysis;
          for (const auto& sent : decisions)
            for (const auto& d : sent) no_analysis.push_back(d.no_analysis());

          for (const auto& subset_name : subsets) {
            const FeatureSubset subset = resolve_subset(subset_name, model_schema);
            const std::string subset_label = subset_name.starts_with("all-star") ? "all-star" : subset_name;
            for (Slice slice : {Slice::kAll, Slice::kOov}) {
              EvalReport r = accuracy(pred, *gold, model_schema, subset, slice, &train_data);
              if (morph) {
                std::size_t n = 0;
                for (std::size_t t = 0; t < no_analysis.size(); ++t)
                  if (no_analysis[t] && (slice == Slice::kAll || oov[t])) ++n;
                r.backoff_tokens = n;
              }
              outcome.reports.emplace(report_key(split, system, subset_label, slice), r);
              if (slice == Slice::kAll)
                curve_inputs[split + "/" + subset_label].cells.emplace(
                    CurveKey{budget, system},
                    CurveCell{r, token_correctness(pred, *gold, model_schema, subset.features)});
            }
          }
          outcome.errors.emplace(split + "/" + system,
                                 feature_error_stats(pred, *gold, model_schema,
                                                     resolve_subset("all", model_schema).features, categories));
        }
      });
    }

    json out{{"budget", budget}, {"train_tokens", outcome.train_tokens}};
    out["reports"] = json::object();
    for (const auto& [key, r] : outcome.reports) out["reports"][key] = r.to_json();
    out["errors"] = json::object();
    for (const auto& [key, e] : outcome.errors) out["errors"][key] = e.to_json();
    out["unseen_tag_rate"] = outcome.unseen_tag_rate;
    write_file(outcome.dir / "reports.json", out.dump(2) + "\n");
    result.sizes.push_back(std::move(outcome));
  }

  json curves = json::object();
  std::string text;
  for (const auto& [key, input] : curve_inputs) {
    CurveTable table = in_stage("curve " + key, [&] { return learning_curve_report(input.cells); });
    curves[key] = table.to_json();
    text += "== " + key + " ==\n" + table.to_text() + "\n";
    result.curves.emplace(key, std::move(table));
  }
  write_file(result.run_dir / "curve.json", curves.dump(2) + "\n");
  write_file(result.run_dir / "curve.txt", text);
  return result;
}

}  // namespace morphdis
