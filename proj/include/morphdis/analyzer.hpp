#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "morphdis/corpus.hpp"
#include "morphdis/schema.hpp"

namespace morphdis {

/// What the disambiguator does with a token the analyzer knows nothing about.
enum class BackoffPolicy { kKeepPredictions, kSynthesizeFromPredictions };

std::string_view backoff_name(BackoffPolicy p);
BackoffPolicy parse_backoff(std::string_view name);

inline constexpr int kAnalyzerFormatVersion = 1;

struct AnalyzerStats {
  std::size_t forms = 0;
  std::size_t analyses = 0;
  std::size_t max_analyses_per_form = 0;
  double mean_analyses_per_form = 0.0;
};

/// Out-of-context analyzer: word form -> every reading it can have.
/// Immutable once built; concurrent lookups are safe.
class AnalyzerDB {
 public:
  using Entries = std::map<std::string, std::vector<Analysis>, std::less<>>;

  AnalyzerDB() = default;
  /// Deduplicates and canonically orders each entry's analyses.
  AnalyzerDB(std::string schema_ref, Entries entries, BackoffPolicy backoff, std::string provenance);

  const std::string& schema_ref() const { return schema_ref_; }
  BackoffPolicy backoff() const { return backoff_; }
  const std::string& provenance() const { return provenance_; }
  const Entries& entries() const { return entries_; }

  /// The stored readings, or nullopt (no analysis).
  std::optional<std::span<const Analysis>> analyze(std::string_view word) const;

  AnalyzerDB with_backoff(BackoffPolicy backoff) const;
  AnalyzerStats stats() const;

  friend bool operator==(const AnalyzerDB&, const AnalyzerDB&) = default;

 private:
  std::string schema_ref_;
  Entries entries_;
  BackoffPolicy backoff_ = BackoffPolicy::kKeepPredictions;
  std::string provenance_;
};

/// Collects, per raw form, the distinct gold analyses observed in `train`.
AnalyzerDB compile_analyzer(const Corpus& train, BackoffPolicy backoff = BackoffPolicy::kKeepPredictions);

std::string analyzer_to_text(const AnalyzerDB& db);
AnalyzerDB parse_analyzer(std::string_view text, const FeatureSchema& schema);
void save_db(const std::filesystem::path& path, const AnalyzerDB& db);
AnalyzerDB load_db(const std::filesystem::path& path, const FeatureSchema& schema);

}  // namespace morphdis
