#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "morphdis/corpus.hpp"
#include "morphdis/schema.hpp"

namespace morphdis {

inline constexpr double kNormalizationTolerance = 1e-4;

/// Per-token probabilities: one vector per feature, plus an optional top-k
/// list over unfactored tags.
struct FeatureDistribution {
  std::map<std::string, std::map<std::string, double>> per_feature;
  /// Sorted by probability (desc), then tag text (asc).
  std::vector<std::pair<std::string, double>> unfactored;

  double prob(const std::string& feature, const std::string& value) const;
};

/// Most probable value per feature; ties go to the lexicographically smallest value.
FeatureBundle argmax_bundle(const FeatureDistribution& dist, const FeatureSchema& schema);

/// Hard prediction used downstream: the parsed top unfactored tag when the
/// distribution carries one, the per-feature argmax otherwise.
FeatureBundle prediction_bundle(const FeatureDistribution& dist, const FeatureSchema& schema);

/// Fills per_feature by summing the (renormalized) unfactored list per value.
void derive_marginals(FeatureDistribution& dist, const FeatureSchema& schema);

struct SentenceDistributions {
  std::string id;
  std::vector<std::string> raw;
  std::vector<FeatureDistribution> tokens;
};

struct DistributionLoadReport {
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  /// Vectors that were off by less than the tolerance and got rescaled.
  std::size_t renormalized = 0;
};

std::string distributions_to_text(const std::vector<SentenceDistributions>& sentences);
void write_distributions(const std::filesystem::path& path, const std::vector<SentenceDistributions>& sentences);

std::vector<SentenceDistributions> parse_distributions(std::string_view text, const FeatureSchema& schema,
                                                       DistributionLoadReport* report = nullptr);

/// Loads an interchange file and checks it lines up with `corpus`
/// sentence-for-sentence and token-for-token.
std::vector<std::vector<FeatureDistribution>> load_external_distributions(
    const std::filesystem::path& path, const FeatureSchema& schema, const Corpus& corpus,
    DistributionLoadReport* report = nullptr);

}  // namespace morphdis
