#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "morphdis/corpus.hpp"
#include "morphdis/distribution.hpp"
#include "morphdis/schema.hpp"

namespace morphdis {

enum class TaggerKind { kFactored, kUnfactored };

std::string_view tagger_kind_name(TaggerKind k);
TaggerKind parse_tagger_kind(std::string_view name);

/// Linear classifier over one label space (a feature's values, or the
/// observed unfactored tags). Weights are the averaged perceptron weights.
struct LinearClassifier {
  std::string name;
  std::vector<std::string> labels;
  std::unordered_map<std::string, std::vector<double>> weights;

  /// Scores for every label given the active extraction features.
  std::vector<double> scores(const std::vector<std::string>& active) const;
};

struct EpochLog {
  int epoch = 0;
  double train_accuracy = 0.0;
  std::optional<double> tune_accuracy;
};

struct TrainingMeta {
  int epochs = 0;
  int best_epoch = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> source_corpora;
  /// Reference to the model this one was warm-started from, if any.
  std::string init_model;
  std::vector<EpochLog> log;
};

struct TrainConfig {
  int epochs = 10;
  std::uint64_t seed = kDefaultSeed;
  const class TaggerModel* init = nullptr;
  std::string init_ref;
  /// When set, the epoch with the best TUNE ALL TAGS accuracy is kept
  /// (earliest on ties); otherwise the last epoch is kept.
  const Corpus* tune = nullptr;
  std::size_t top_k = 10;
  std::vector<std::string> source_corpora;
};

class TaggerModel {
 public:
  TaggerModel() = default;
  TaggerModel(TaggerKind kind, FeatureSchema schema, std::vector<LinearClassifier> classifiers,
              TrainingMeta meta, std::size_t top_k);

  TaggerKind kind() const { return kind_; }
  const FeatureSchema& schema() const { return schema_; }
  const std::vector<LinearClassifier>& classifiers() const { return classifiers_; }
  const TrainingMeta& meta() const { return meta_; }
  std::size_t top_k() const { return top_k_; }

  /// Labels of the classifier for `feature` (FACTORED) or the unfactored tag
  /// inventory (UNFACTORED, name "unfactored").
  const std::vector<std::string>& label_space(std::string_view classifier) const;

  std::vector<FeatureDistribution> predict(const std::vector<std::string>& forms) const;
  std::vector<FeatureDistribution> predict(const Sentence& sentence) const;

  nlohmann::json to_json() const;
  static TaggerModel from_json(const nlohmann::json& j);

 private:
  TaggerKind kind_ = TaggerKind::kFactored;
  FeatureSchema schema_;
  std::vector<LinearClassifier> classifiers_;
  TrainingMeta meta_;
  std::size_t top_k_ = 10;
};

inline constexpr const char* kUnfactoredClassifier = "unfactored";

/// Extraction features for token `i` given the previous token's predicted
/// core (pos) tag.
std::vector<std::string> extract_features(const std::vector<std::string>& forms, std::size_t i,
                                          std::string_view prev_core_tag);

TaggerModel train(const Corpus& corpus, TaggerKind kind, const FeatureSchema& schema, const TrainConfig& config);

void save_model(const std::filesystem::path& path, const TaggerModel& model);
TaggerModel load_model(const std::filesystem::path& path);

/// Fraction of tokens whose prediction bundle equals the gold bundle.
double all_tags_accuracy(const TaggerModel& model, const Corpus& corpus);

}  // namespace morphdis
