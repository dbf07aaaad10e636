#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphdis/analyzer.hpp"
#include "morphdis/corpus.hpp"
#include "morphdis/distribution.hpp"
#include "morphdis/schema.hpp"

namespace morphdis {

inline constexpr double kDefaultSmoothing = 1e-6;

/// Corpus-frequency tag probabilities for tie-breaking.
///
/// Smoothing is additive with a pseudo-count of epsilon * total_tokens per
/// outcome, so P(x) = (count + eps*N) / (N + eps*N*|space|). The unfactored
/// space is the observed tags plus one bucket shared by every unseen tag.
class UnigramModel {
 public:
  UnigramModel() = default;
  UnigramModel(const Corpus& train, const FeatureSchema& schema, double smoothing_epsilon = kDefaultSmoothing);

  double unfactored_prob(const std::string& tag) const;
  double feature_prob(const std::string& feature, const std::string& value) const;
  /// Probability assigned to a never-seen outcome in the given space.
  double unfactored_floor() const;
  double feature_floor(const std::string& feature) const;

  std::size_t total_tokens() const { return total_; }
  double smoothing_epsilon() const { return epsilon_; }
  const std::map<std::string, std::size_t>& unfactored_counts() const { return unfactored_counts_; }
  const std::map<std::string, std::map<std::string, std::size_t>>& per_feature_counts() const {
    return per_feature_counts_;
  }
  std::size_t feature_space_size(const std::string& feature) const;
  std::size_t unfactored_space_size() const { return unfactored_counts_.size() + 1; }

  nlohmann::json to_json() const;
  static UnigramModel from_json(const nlohmann::json& j);

 private:
  double smoothed(std::size_t count, std::size_t space) const;

  std::map<std::string, std::size_t> unfactored_counts_;
  std::map<std::string, std::map<std::string, std::size_t>> per_feature_counts_;
  std::map<std::string, std::size_t> feature_space_;
  std::size_t total_ = 0;
  double epsilon_ = kDefaultSmoothing;
};

void save_unigrams(const std::filesystem::path& path, const UnigramModel& model);
UnigramModel load_unigrams(const std::filesystem::path& path);

struct TieBreakWeights {
  double unfactored = 0.5;
  double product = 0.5;
};

/// Where tie-break probabilities come from. kUnigram is the default; the
/// classifier variant reads the tagger's contextual probabilities instead.
enum class TieBreakSource { kUnigram, kClassifier };

struct DisambiguationOptions {
  TieBreakWeights weights;
  TieBreakSource source = TieBreakSource::kUnigram;
  bool trace = false;
};

struct RankedCandidate {
  Analysis analysis;
  int match_count = 0;
  double tie_score = 0.0;
  int final_rank = 0;
};

int match_count(const FeatureBundle& prediction, const Analysis& candidate, const FeatureSchema& schema);

double tie_break_score(const Analysis& candidate, const UnigramModel& unigrams, const FeatureSchema& schema,
                       const TieBreakWeights& weights = {});
/// Same combination, with probabilities taken from a token's predicted distribution.
double tie_break_score(const Analysis& candidate, const FeatureDistribution& dist, const FeatureSchema& schema,
                       const TieBreakWeights& weights = {});

/// Orders by match count (desc), tie score (desc), canonical serialization (asc).
std::vector<RankedCandidate> rank_analyses(const FeatureBundle& prediction, std::span<const Analysis> candidates,
                                           const UnigramModel& unigrams, const FeatureSchema& schema,
                                           const TieBreakWeights& weights = {});

enum class DecisionSource { kAnalyzer, kKeptPrediction, kSynthesized };

std::string_view decision_source_name(DecisionSource s);

struct TokenDecision {
  Analysis analysis;
  DecisionSource source = DecisionSource::kAnalyzer;
  FeatureBundle prediction;
  /// Filled only when tracing.
  std::vector<RankedCandidate> ranking;

  bool backoff() const { return source == DecisionSource::kSynthesized; }
  bool no_analysis() const { return source != DecisionSource::kAnalyzer; }
};

/// Analysis built straight from a predicted bundle (lex = diac = raw form).
Analysis analysis_from_prediction(const FeatureBundle& prediction, const std::string& raw);

std::vector<TokenDecision> disambiguate_sentence(const Sentence& sentence,
                                                 const std::vector<FeatureDistribution>& distributions,
                                                 const AnalyzerDB& db, const UnigramModel& unigrams,
                                                 const FeatureSchema& schema,
                                                 const DisambiguationOptions& options = {});

/// Prediction corpus with gold analyses replaced by predictions. When `db`
/// is null the raw tagger bundles are used.
Corpus apply_predictions(const Corpus& corpus, const std::vector<std::vector<FeatureDistribution>>& distributions,
                         const FeatureSchema& schema, const AnalyzerDB* db, const UnigramModel* unigrams,
                         const DisambiguationOptions& options = {},
                         std::vector<std::vector<TokenDecision>>* decisions = nullptr);

nlohmann::json trace_record(const Sentence& sentence, const std::vector<TokenDecision>& decisions);

}  // namespace morphdis
