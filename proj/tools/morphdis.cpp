// morphdis: command-line front end for tagging, retagging and evaluation.
#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <sstream>

#include "morphdis/analyzer.hpp"
#include "morphdis/corpus.hpp"
#include "morphdis/disambiguator.hpp"
#include "morphdis/distribution.hpp"
#include "morphdis/errors.hpp"
#include "morphdis/eval.hpp"
#include "morphdis/experiment.hpp"
#include "morphdis/harmonizer.hpp"
#include "morphdis/schema.hpp"
#include "morphdis/synth.hpp"
#include "morphdis/tagger.hpp"
#include "morphdis/util.hpp"

namespace fs = std::filesystem;
using namespace morphdis;
using nlohmann::json;

namespace {

struct Globals {
  std::string schema = "msa";
  std::uint64_t seed = kDefaultSeed;
  std::string out_dir = ".";
};

// "variant:path" pairs used by the harmonize subcommands.
VariantCorpus read_variant_corpus(const std::string& arg) {
  auto colon = arg.find(':');
  if (colon == std::string::npos || colon == 0) throw ValueError("expected VARIANT:PATH, got '" + arg + "'");
  const std::string variant = arg.substr(0, colon);
  return {read_corpus(arg.substr(colon + 1), resolve_schema(variant)), variant};
}

HarmonizationConfig harmonization_config(const std::string& path) {
  return load_harmonization_config(path.empty() ? data_dir() / "harmonize" / "default.json" : fs::path(path));
}

Harmonizer make_harmonizer(const std::string& config_path) {
  HarmonizationConfig c = harmonization_config(config_path);
  const FeatureSchema target = resolve_schema(c.target_variant);
  return Harmonizer(std::move(c), target);
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoull(item));
    } catch (const std::exception&) {
      throw ValueError("bad size '" + item + "'");
    }
  }
  return out;
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Morphological tagging, analyzer retagging and evaluation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--schema", g.schema, "Schema name (msa, glf, egy, lev) or path")->capture_default_str();
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();

  std::function<void()> action;
  auto on = [&](CLI::App* cmd, std::function<void()> fn) { cmd->callback([&action, fn] { action = fn; }); };

  // corpus
  auto* corpus = app.add_subcommand("corpus", "Corpus utilities");
  corpus->require_subcommand(1);
  std::string in_path, out_path, train_path, eval_path, sizes_arg, diacritics;

  auto* c_validate = corpus->add_subcommand("validate", "Check a corpus against the schema");
  c_validate->add_option("--in", in_path)->required();
  on(c_validate, [&] {
    const FeatureSchema s = resolve_schema(g.schema);
    Corpus c = read_corpus(in_path, s);
    std::cout << "ok: " << c.sentences.size() << " sentences, " << c.token_count() << " tokens\n";
  });

  auto* c_sample = corpus->add_subcommand("sample", "Nested learning-curve samples");
  c_sample->add_option("--in", in_path)->required();
  c_sample->add_option("--sizes", sizes_arg, "Comma-separated token budgets")->required();
  on(c_sample, [&] {
    const FeatureSchema s = resolve_schema(g.schema);
    const auto sizes = parse_sizes(sizes_arg);
    auto samples = sample_learning_curve(read_corpus(in_path, s), sizes, g.seed);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const fs::path p = fs::path(g.out_dir) / ("train-" + std::to_string(sizes[i]) + ".jsonl");
      write_corpus(p, samples[i]);
      std::cout << p.string() << ": " << samples[i].token_count() << " tokens\n";
    }
  });

  auto* c_oov = corpus->add_subcommand("oov", "Word forms of an eval corpus unseen in training");
  c_oov->add_option("--train", train_path)->required();
  c_oov->add_option("--eval", eval_path)->required();
  on(c_oov, [&] {
    const FeatureSchema s = resolve_schema(g.schema);
    for (const auto& w : oov_vocabulary(read_corpus(train_path, s), read_corpus(eval_path, s))) std::cout << w << '\n';
  });

  auto* c_norm = corpus->add_subcommand("normalize", "Strip diacritics from raw forms");
  c_norm->add_option("--in", in_path)->required();
  c_norm->add_option("--out", out_path)->required();
  c_norm->add_option("--diacritics", diacritics, "Characters to strip (default: Arabic short vowels)");
  on(c_norm, [&] {
    const FeatureSchema s = resolve_schema(g.schema);
    Corpus c = read_corpus(in_path, s);
    normalize_corpus(c, diacritics.empty() ? default_diacritics() : diacritic_set_from(diacritics));
    write_corpus(out_path, c);
  });

  // analyzer
  auto* analyzer = app.add_subcommand("analyzer", "Analyzer database");
  analyzer->require_subcommand(1);
  std::string db_path, backoff = "keep_predictions";
  std::vector<std::string> words;

  auto* a_compile = analyzer->add_subcommand("compile", "Build a database from training analyses");
  a_compile->add_option("--train", train_path)->required();
  a_compile->add_option("--out", out_path)->required();
  a_compile->add_option("--backoff", backoff)->capture_default_str();
  on(a_compile, [&] {
    const FeatureSchema s = resolve_schema(g.schema);
    AnalyzerDB db = compile_analyzer(read_corpus(train_path, s), parse_backoff(backoff));
    save_db(out_path, db);
    std::cout << "forms: " << db.stats().forms << ", analyses: " << db.stats().analyses << '\n';
  });

  auto* a_query = analyzer->add_subcommand("query", "Print the analyses of word forms");
  a_query->add_option("--db", db_path)->required();
  a_query->add_option("words", words)->required();
  on(a_query, [&] {
    const FeatureSchema s = resolve_schema(g.schema);
    AnalyzerDB db = load_db(db_path, s);
    for (const auto& w : words) {
      json j{{"word", w}, {"analyses", json::array()}};
      if (auto hits = db.analyze(w))
        for (const auto& a : *hits) j["analyses"].push_back(analysis_to_json(a));
      else
        j["analyses"] = nullptr;
      std::cout << j.dump() << '\n';
    }
  });

  auto* a_stats = analyzer->add_subcommand("stats", "Database statistics");
  a_stats->add_option("--db", db_path)->required();
  on(a_stats, [&] {
    const AnalyzerStats st = load_db(db_path, resolve_schema(g.schema)).stats();
    print_json({{"forms", st.forms},
                {"analyses", st.analyses},
                {"max_analyses_per_form", st.max_analyses_per_form},
                {"mean_analyses_per_form", st.mean_analyses_per_form}});
  });

  auto* a_unigrams = analyzer->add_subcommand("unigrams", "Tie-break unigram model from a training corpus");
  a_unigrams->add_option("--train", train_path)->required();
  a_unigrams->add_option("--out", out_path)->required();
  on(a_unigrams, [&] {
    const FeatureSchema s = resolve_schema(g.schema);
    save_unigrams(out_path, UnigramModel(read_corpus(train_path, s), s));
  });

  // tagger
  auto* tagger = app.add_subcommand("tagger", "Built-in tagger");
  tagger->require_subcommand(1);
  std::string tune_path, kind = "factored", model_path, init_path;
  int epochs = 10;

  auto* t_train = tagger->add_subcommand("train", "Train a FACTORED or UNFACTORED tagger");
  t_train->add_option("--train", train_path)->required();
  t_train->add_option("--tune", tune_path, "TUNE corpus for epoch selection");
  t_train->add_option("--kind", kind)->capture_default_str()->check(CLI::IsMember({"factored", "unfactored"}, CLI::ignore_case));
  t_train->add_option("--epochs", epochs)->capture_default_str();
  t_train->add_option("--init", init_path, "Model to continue training from");
  t_train->add_option("--out", out_path)->required();
  on(t_train, [&] {
    const FeatureSchema s = resolve_schema(g.schema);
    const Corpus train_c = read_corpus(train_path, s);
    std::optional<Corpus> tune_c;
    if (!tune_path.empty()) tune_c = read_corpus(tune_path, s, Split::kTune);
    std::optional<TaggerModel> init;
    if (!init_path.empty()) init = load_model(init_path);
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = g.seed;
    cfg.tune = tune_c ? &*tune_c : nullptr;
    cfg.init = init ? &*init : nullptr;
    cfg.init_ref = init_path;
    cfg.source_corpora = {train_path};
    TaggerModel m = morphdis::train(train_c, parse_tagger_kind(kind), s, cfg);
    save_model(out_path, m);
    for (const auto& e : m.meta().log) {
      std::cout << "epoch " << e.epoch << " train " << e.train_accuracy;
      if (e.tune_accuracy) std::cout << " tune " << *e.tune_accuracy;
      std::cout << '\n';
    }
    std::cout << "best epoch: " << m.meta().best_epoch << '\n';
  });

  auto* t_predict = tagger->add_subcommand("predict", "Write per-token distributions");
  t_predict->add_option("--model", model_path)->required();
  t_predict->add_option("--in", in_path)->required();
  t_predict->add_option("--out", out_path)->required();
  on(t_predict, [&] {
    const TaggerModel m = load_model(model_path);
    const Corpus c = read_corpus(in_path, m.schema());
    std::vector<SentenceDistributions> out;
    for (const auto& sent : c.sentences) {
      SentenceDistributions sd;
      sd.id = sent.id;
      for (const auto& t : sent.tokens) sd.raw.push_back(t.raw);
      sd.tokens = m.predict(sent);
      out.push_back(std::move(sd));
    }
    write_distributions(out_path, out);
  });

  auto* t_eval = tagger->add_subcommand("eval-raw", "ALL TAGS accuracy of raw tagger output");
  t_eval->add_option("--model", model_path)->required();
  t_eval->add_option("--in", in_path)->required();
  on(t_eval, [&] {
    const TaggerModel m = load_model(model_path);
    std::cout << all_tags_accuracy(m, read_corpus(in_path, m.schema())) << '\n';
  });

  // disambiguate
  auto* dis = app.add_subcommand("disambiguate", "Retag a corpus with analyzer candidates");
  std::string dist_path, unigram_path, trace_path;
  dis->add_option("--in", in_path, "Corpus whose tokens are retagged")->required();
  dis->add_option("--model", model_path, "Tagger model");
  dis->add_option("--distributions", dist_path, "External interchange file");
  dis->add_option("--analyzer", db_path, "Analyzer database (raw tagger output when omitted)");
  dis->add_option("--unigrams", unigram_path);
  dis->add_option("--train-ref", train_path, "Training corpus for the unigram model");
  dis->add_option("--out", out_path)->required();
  dis->add_option("--trace", trace_path, "Write per-token candidate rankings");
  std::string tie_source = "unigram";
  dis->add_option("--tie-break", tie_source, "Tie-break probabilities: unigram or classifier")
      ->check(CLI::IsMember({"unigram", "classifier"}, CLI::ignore_case));
  on(dis, [&] {
    if (model_path.empty() == dist_path.empty()) throw CLI::ValidationError("exactly one of --model or --distributions");
    std::optional<TaggerModel> m;
    if (!model_path.empty()) m = load_model(model_path);
    const FeatureSchema s = m ? m->schema() : resolve_schema(g.schema);
    const Corpus c = read_corpus(in_path, s);
    std::vector<std::vector<FeatureDistribution>> dists;
    if (m) {
      for (const auto& sent : c.sentences) dists.push_back(m->predict(sent));
    } else {
      DistributionLoadReport report;
      dists = load_external_distributions(dist_path, s, c, &report);
      if (report.renormalized) std::cerr << "renormalized " << report.renormalized << " vectors\n";
    }
    std::optional<AnalyzerDB> db;
    std::optional<UnigramModel> uni;
    if (!db_path.empty()) {
      db = load_db(db_path, s);
      if (!unigram_path.empty())
        uni = load_unigrams(unigram_path);
      else if (!train_path.empty())
        uni = UnigramModel(read_corpus(train_path, s), s);
      else
        throw CLI::ValidationError("--analyzer needs --unigrams or --train-ref");
    }
    DisambiguationOptions opt;
    opt.trace = !trace_path.empty();
    if (to_lower_ascii(tie_source) == "classifier") opt.source = TieBreakSource::kClassifier;
    std::vector<std::vector<TokenDecision>> decisions;
    const Corpus pred = apply_predictions(c, dists, s, db ? &*db : nullptr, uni ? &*uni : nullptr, opt, &decisions);
    write_corpus(out_path, pred);
    if (!trace_path.empty()) {
      std::string text;
      for (std::size_t i = 0; i < c.sentences.size() && i < decisions.size(); ++i)
        text += trace_record(c.sentences[i], decisions[i]).dump() + "\n";
      write_file(trace_path, text);
    }
  });

  // harmonize
  auto* harm = app.add_subcommand("harmonize", "Map corpora into the shared reduced tag space");
  std::string config_path, variant;
  std::vector<std::string> inputs;
  harm->require_subcommand(1);
  harm->add_option("--config", config_path, "Harmonization config (shipped default when omitted)");
  auto* h_apply = harm->add_subcommand("apply", "Harmonize one corpus");
  h_apply->add_option("--in", in_path)->required();
  h_apply->add_option("--variant", variant)->required();
  h_apply->add_option("--out", out_path)->required();
  on(h_apply, [&] {
    const Harmonizer h = make_harmonizer(config_path);
    write_corpus(out_path, h.harmonize_corpus(read_corpus(in_path, resolve_schema(variant)), variant));
  });
  auto* h_merge = harm->add_subcommand("merge", "Harmonize and merge several corpora");
  h_merge->add_option("--in", inputs, "VARIANT:PATH, repeatable")->required();
  h_merge->add_option("--out", out_path)->required();
  on(h_merge, [&] {
    const Harmonizer h = make_harmonizer(config_path);
    std::vector<VariantCorpus> cs;
    for (const auto& a : inputs) cs.push_back(read_variant_corpus(a));
    write_corpus(out_path, build_merged(cs, h, g.seed));
  });
  std::string low;
  auto* h_stage = harm->add_subcommand("stage", "Build the two continued-training stages");
  h_stage->add_option("--high", inputs, "VARIANT:PATH, repeatable")->required();
  h_stage->add_option("--low", low, "VARIANT:PATH")->required();
  on(h_stage, [&] {
    const Harmonizer h = make_harmonizer(config_path);
    std::vector<VariantCorpus> cs;
    for (const auto& a : inputs) cs.push_back(read_variant_corpus(a));
    TrainingStages st = build_stages(cs, read_variant_corpus(low), h, g.seed);
    write_corpus(fs::path(g.out_dir) / "stage1.jsonl", st.stage1);
    write_corpus(fs::path(g.out_dir) / "stage2.jsonl", st.stage2);
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Metrics and significance");
  ev->require_subcommand(1);
  std::string pred_path, gold_path, subset = "all", slice = "all", pred_b;
  std::size_t count_b = 0, count_c = 0;
  double alpha = 0.05;

  auto* e_acc = ev->add_subcommand("accuracy", "Accuracy over a feature subset");
  e_acc->add_option("--pred", pred_path)->required();
  e_acc->add_option("--gold", gold_path)->required();
  e_acc->add_option("--subset", subset, "pos, all, all10, all-star:<variant> or f1,f2,...")->capture_default_str();
  e_acc->add_option("--slice", slice, "all or oov")->capture_default_str()->check(CLI::IsMember({"all", "oov"}, CLI::ignore_case));
  e_acc->add_option("--train-ref", train_path, "Training corpus (needed for the oov slice)");
  on(e_acc, [&] {
    const FeatureSchema s = resolve_schema(g.schema);
    std::optional<Corpus> tr;
    if (!train_path.empty()) tr = read_corpus(train_path, s);
    print_json(accuracy(read_corpus(pred_path, s), read_corpus(gold_path, s), s, resolve_subset(subset, s),
                        parse_slice(slice), tr ? &*tr : nullptr)
                   .to_json());
  });

  std::string categories_path;
  auto* e_err = ev->add_subcommand("errors", "Per-feature error statistics");
  e_err->add_option("--pred", pred_path)->required();
  e_err->add_option("--gold", gold_path)->required();
  e_err->add_option("--subset", subset)->capture_default_str();
  e_err->add_option("--categories", categories_path, "pos category map");
  on(e_err, [&] {
    const FeatureSchema s = resolve_schema(g.schema);
    const fs::path cat = categories_path.empty() ? data_dir() / "eval" / "pos_categories.json" : fs::path(categories_path);
    print_json(feature_error_stats(read_corpus(pred_path, s), read_corpus(gold_path, s), s,
                                   resolve_subset(subset, s).features, load_pos_categories(cat))
                   .to_json());
  });

  auto* e_sig = ev->add_subcommand("significance", "McNemar test between two systems");
  e_sig->add_option("--pred", pred_path, "System A predictions");
  e_sig->add_option("--pred-b", pred_b, "System B predictions");
  e_sig->add_option("--gold", gold_path);
  e_sig->add_option("--subset", subset)->capture_default_str();
  e_sig->add_option("-b", count_b, "Discordant count: A right, B wrong");
  e_sig->add_option("-c", count_c, "Discordant count: A wrong, B right");
  e_sig->add_option("--alpha", alpha)->capture_default_str();
  on(e_sig, [&] {
    if (pred_path.empty() && pred_b.empty() && gold_path.empty()) {
      print_json(mcnemar_counts(count_b, count_c, alpha).to_json());
      return;
    }
    if (pred_path.empty() || pred_b.empty() || gold_path.empty())
      throw CLI::ValidationError("--pred, --pred-b and --gold go together");
    const FeatureSchema s = resolve_schema(g.schema);
    const Corpus gold = read_corpus(gold_path, s);
    const auto feats = resolve_subset(subset, s).features;
    print_json(mcnemar(token_correctness(read_corpus(pred_path, s), gold, s, feats),
                       token_correctness(read_corpus(pred_b, s), gold, s, feats), alpha)
                   .to_json());
  });

  std::vector<std::string> cells;
  auto* e_curve = ev->add_subcommand("curve", "Learning-curve table with best and tied cells");
  e_curve->add_option("--cell", cells, "SIZE:SYSTEM:PRED_PATH, repeatable")->required();
  e_curve->add_option("--gold", gold_path)->required();
  e_curve->add_option("--subset", subset)->capture_default_str();
  e_curve->add_option("--alpha", alpha)->capture_default_str();
  on(e_curve, [&] {
    const FeatureSchema s = resolve_schema(g.schema);
    const Corpus gold = read_corpus(gold_path, s);
    const FeatureSubset fs_ = resolve_subset(subset, s);
    std::map<CurveKey, CurveCell> results;
    for (const auto& cell : cells) {
      const auto a = cell.find(':');
      const auto b = a == std::string::npos ? a : cell.find(':', a + 1);
      if (b == std::string::npos) throw ValueError("expected SIZE:SYSTEM:PATH, got '" + cell + "'");
      const Corpus pred = read_corpus(cell.substr(b + 1), s);
      results[{parse_sizes(cell.substr(0, a)).at(0), cell.substr(a + 1, b - a - 1)}] =
          CurveCell{accuracy(pred, gold, s, fs_), token_correctness(pred, gold, s, fs_.features)};
    }
    std::cout << learning_curve_report(results, alpha).to_text();
  });

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a learning-curve experiment from a spec file");
  std::string spec_path;
  exp->add_option("--spec", spec_path)->required();
  on(exp, [&] {
    ExperimentResult r = run_experiment(load_experiment_spec(spec_path), g.out_dir);
    std::cout << "run directory: " << r.run_dir.string() << '\n';
    for (const auto& [key, table] : r.curves) std::cout << "== " << key << " ==\n" << table.to_text() << '\n';
  });

  // synth
  auto* syn = app.add_subcommand("synth", "Generate a seeded synthetic dataset");
  std::string synth_spec, render;
  std::optional<std::size_t> vocab, tokens;
  std::optional<double> ambiguity;
  std::optional<std::uint64_t> lexicon_seed;
  syn->add_option("--spec", synth_spec, "JSON generator parameters");
  syn->add_option("--vocab", vocab);
  syn->add_option("--ambiguity", ambiguity);
  syn->add_option("--tokens", tokens);
  syn->add_option("--lexicon-seed", lexicon_seed);
  syn->add_option("--render", render, "Also render the dataset into this schema");
  on(syn, [&] {
    const FeatureSchema s = resolve_schema(g.schema);
    SyntheticSpec spec;
    if (!synth_spec.empty()) {
      try {
        spec = synthetic_spec_from_json(json::parse(read_file(synth_spec)), s);
      } catch (const json::parse_error& e) {
        throw FormatError(std::string("malformed synthetic spec: ") + e.what());
      }
    } else {
      spec.schema = s;
      spec.seed = g.seed;
    }
    if (vocab) spec.vocabulary_size = *vocab;
    if (ambiguity) spec.ambiguity_rate = *ambiguity;
    if (tokens) spec.token_budget = *tokens;
    if (lexicon_seed) spec.lexicon_seed = *lexicon_seed;
    std::optional<FeatureSchema> to;
    if (!render.empty()) {
      to = resolve_schema(render);
      spec.render_compatible.push_back(*to);
    }
    SyntheticDataset data = generate_synthetic(spec);
    write_dataset(g.out_dir, data);
    write_file(fs::path(g.out_dir) / "synth.json", synthetic_spec_to_json(spec).dump(2) + "\n");
    if (to) write_dataset(fs::path(g.out_dir) / to->variant(), render_dataset(data, s, *to));
    std::cout << "train " << data.train.token_count() << ", tune " << data.tune.token_count() << ", dev "
              << data.dev.token_count() << ", test " << data.test.token_count() << " tokens\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    if (action) action();
    return 0;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
