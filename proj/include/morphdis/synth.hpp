#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphdis/analyzer.hpp"
#include "morphdis/corpus.hpp"
#include "morphdis/schema.hpp"

namespace morphdis {

/// Parameters of a seeded synthetic language and corpus.
///
/// The lexicon (forms, their analyses, affixes, pos transitions) depends only
/// on `lexicon_seed`, the schema and the compatibility list, so several
/// corpora drawn with different `seed`s share one language.
struct SyntheticSpec {
  FeatureSchema schema;
  std::size_t vocabulary_size = 5000;
  /// Mean number of analyses per form (1.0 = unambiguous).
  double ambiguity_rate = 3.0;
  std::size_t mean_sentence_length = 10;
  /// Lengths are uniform on [mean - spread, mean + spread], drawn in
  /// antithetic pairs so every two sentences total 2 * mean tokens.
  std::size_t sentence_length_spread = 5;
  std::size_t token_budget = 10000;
  /// TRAIN / TUNE / DEV / TEST shares of the sentences.
  double train_fraction = 0.8;
  double tune_fraction = 0.1;
  double dev_fraction = 0.05;
  std::uint64_t seed = kDefaultSeed;
  std::optional<std::uint64_t> lexicon_seed;
  /// Schemas the corpus may later be rendered into; proclitic values are
  /// drawn only from those representable in all of them.
  std::vector<FeatureSchema> render_compatible;
  std::string id_prefix = "s";

  void validate() const;
};

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j, const FeatureSchema& schema);
nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec);

struct SyntheticDataset {
  Corpus train, tune, dev, test;
  /// Every form's full analysis set (an oracle analyzer).
  AnalyzerDB analyzer;
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// Rewrites a dataset generated under `from` into the schema `to`: proclitic
/// values become the value of `to` whose vowel-stripped form matches, features
/// `to` lacks are dropped, features it adds get their defaults.
SyntheticDataset render_dataset(const SyntheticDataset& data, const FeatureSchema& from, const FeatureSchema& to);
Analysis render_analysis(const Analysis& a, const FeatureSchema& from, const FeatureSchema& to);

void write_dataset(const std::filesystem::path& dir, const SyntheticDataset& data);

}  // namespace morphdis
