#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "morphdis/corpus.hpp"
#include "morphdis/schema.hpp"

namespace morphdis {

enum class Slice { kAll, kOov };

std::string_view slice_name(Slice s);
Slice parse_slice(std::string_view name);

/// A named feature subset; a token is correct when every listed feature matches.
struct FeatureSubset {
  std::string metric;  // "POS", "ALL TAGS", "ALL TAGS*", "ALL TAGS 10", ...
  std::vector<std::string> features;
};

/// Resolves "pos", "all", "all10", "all-star:<variant>" or a comma-separated
/// feature list against `schema`. Throws UnknownFeature.
FeatureSubset resolve_subset(std::string_view spec, const FeatureSchema& schema);

/// Features compared by ALL TAGS* for a variant: everything for msa, the ten
/// shared features for glf, everything but enc1/enc2 for egy and lev.
std::vector<std::string> all_tags_star_features(std::string_view variant, const FeatureSchema& schema);

struct EvalReport {
  std::string metric_name;
  std::vector<std::string> feature_subset;
  std::size_t total_tokens = 0;
  std::size_t correct_tokens = 0;
  double accuracy = 0.0;
  Slice slice = Slice::kAll;
  /// Tokens in the slice that the analyzer could not cover, when known.
  std::optional<std::size_t> backoff_tokens;

  nlohmann::json to_json() const;
};

/// Per-token correctness under `subset`, flattened in corpus order.
/// Throws AlignmentError when the corpora do not line up.
std::vector<bool> token_correctness(const Corpus& pred, const Corpus& gold, const FeatureSchema& schema,
                                    const std::vector<std::string>& subset);

EvalReport accuracy(const Corpus& pred, const Corpus& gold, const FeatureSchema& schema, const FeatureSubset& subset,
                    Slice slice = Slice::kAll, const Corpus* train_ref = nullptr);

/// Flattened per-token mask: true where the raw form never occurs in `train`.
std::vector<bool> oov_mask(const Corpus& eval, const Corpus& train);

double unseen_tag_rate(const Corpus& eval, const Corpus& train, const FeatureSchema& schema);

/// pos value -> coarse category. Unmapped values fall into "other".
struct PosCategoryMap {
  std::map<std::string, std::string> category_of;
  std::string fallback = "other";

  const std::string& operator()(const std::string& pos) const;
};

PosCategoryMap load_pos_categories(const std::filesystem::path& path);
PosCategoryMap pos_categories_from_json(const nlohmann::json& j);

struct ErrorStats {
  std::vector<std::string> feature_subset;
  std::map<std::string, std::size_t> per_feature_error_counts;
  std::size_t total_error_tokens = 0;
  double mean_failures_per_error = 0.0;
  std::map<std::pair<std::string, std::string>, std::size_t> pos_confusion;

  /// Share of erroneous tokens with this feature wrong, in percent.
  double percentage(const std::string& feature) const;
  nlohmann::json to_json() const;
};

ErrorStats feature_error_stats(const Corpus& pred, const Corpus& gold, const FeatureSchema& schema,
                               const std::vector<std::string>& subset, const PosCategoryMap& categories = {});

struct McNemarResult {
  std::size_t b = 0;  // a right, b wrong
  std::size_t c = 0;  // a wrong, b right
  bool exact = true;
  double statistic = 0.0;  // continuity-corrected chi-square (asymptotic branch only)
  double p_value = 1.0;
  bool significant = false;

  nlohmann::json to_json() const;
};

inline constexpr std::size_t kMcNemarExactBelow = 25;

/// Exact two-sided binomial test when b + c < exact_below, otherwise the
/// continuity-corrected chi-square with one degree of freedom.
McNemarResult mcnemar_counts(std::size_t b, std::size_t c, double alpha = 0.05,
                             std::size_t exact_below = kMcNemarExactBelow);
McNemarResult mcnemar(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b, double alpha = 0.05,
                      std::size_t exact_below = kMcNemarExactBelow);

struct CurveCell {
  EvalReport report;
  std::vector<bool> correct;
};

using CurveKey = std::pair<std::size_t, std::string>;  // (training size, system)

struct CurveTable {
  struct Entry {
    std::size_t size = 0;
    std::string system;
    double accuracy = 0.0;
    bool best = false;
    /// Not significantly different from the best cell.
    bool insignificant_vs_best = false;
    std::optional<double> p_vs_best;
  };

  std::string metric;
  std::vector<std::size_t> sizes;
  std::vector<std::string> systems;
  std::vector<Entry> entries;  // size-major

  const Entry* find(std::size_t size, const std::string& system) const;
  nlohmann::json to_json() const;
  /// Aligned text table; '*' marks best, '_' marks statistically tied cells.
  std::string to_text() const;
};

CurveTable learning_curve_report(const std::map<CurveKey, CurveCell>& results, double alpha = 0.05);

}  // namespace morphdis
