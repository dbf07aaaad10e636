#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "morphdis/corpus.hpp"
#include "morphdis/schema.hpp"

namespace morphdis {

/// Rewrites `from` to `to` for `feature` on analyses whose pos is `pos`
/// ("*" matches any pos).
struct RemapRule {
  std::string pos;
  std::string feature;
  std::string from;
  std::string to;
};

struct HarmonizationConfig {
  std::set<std::string> dropped_features = {"stt", "cas", "mod", "vox", "enc1", "enc2"};
  bool proclitic_vowel_strip = true;
  /// Exact proclitic value rewrites consulted before the vowel-stripping rule.
  std::map<std::string, std::string> proclitic_overrides;
  /// Source variant -> default-value rewrites.
  std::map<std::string, std::vector<RemapRule>> default_remap;
  std::string target_variant = "lev";
};

HarmonizationConfig harmonization_config_from_json(const nlohmann::json& j);
nlohmann::json harmonization_config_to_json(const HarmonizationConfig& c);
HarmonizationConfig load_harmonization_config(const std::filesystem::path& path);

/// The ten features shared by every variant after harmonization.
const std::vector<std::string>& all_tags_10_features();

/// Strips a,e,i,o,u from the form segment (before the first '_') of a
/// proclitic value. Values without '_' and forms that would become empty are
/// returned unchanged.
std::string strip_proclitic_vowels(std::string_view value);

bool is_proclitic_feature(std::string_view feature);

/// Maps analyses from any source variant into the common reduced space of the
/// target variant.
class Harmonizer {
 public:
  /// Throws SchemaError / RemapError when the config does not fit the target schema.
  Harmonizer(HarmonizationConfig config, const FeatureSchema& target_schema);

  const HarmonizationConfig& config() const { return config_; }
  const FeatureSchema& reduced_schema() const { return reduced_; }

  Analysis harmonize_analysis(const Analysis& a, std::string_view source_variant) const;
  /// Harmonized copy of `corpus`; schema_ref becomes the reduced schema's variant.
  Corpus harmonize_corpus(const Corpus& corpus, std::string_view source_variant) const;

 private:
  HarmonizationConfig config_;
  FeatureSchema reduced_;
};

using VariantCorpus = std::pair<Corpus, std::string>;

/// Harmonizes and concatenates >= 2 corpora, then shuffles sentences with a
/// seeded generator. Each sentence keeps its variant in `source` and gets the
/// id "<variant>/<original id>".
Corpus build_merged(const std::vector<VariantCorpus>& corpora, const Harmonizer& harmonizer,
                    std::uint64_t seed = kDefaultSeed);

struct TrainingStages {
  Corpus stage1;
  Corpus stage2;
};

/// Stage 1 merges the high-resource corpora; stage 2 is the harmonized
/// low-resource corpus.
TrainingStages build_stages(const std::vector<VariantCorpus>& high_resource, const VariantCorpus& low_resource,
                            const Harmonizer& harmonizer, std::uint64_t seed = kDefaultSeed);

}  // namespace morphdis
