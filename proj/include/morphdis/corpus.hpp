#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "morphdis/schema.hpp"
#include "morphdis/util.hpp"

namespace morphdis {

inline constexpr const char* kUnknownLemma = "UNK";

/// One full morphosyntactic reading of a word.
struct Analysis {
  FeatureBundle features;
  std::string lex = kUnknownLemma;
  std::string diac = kUnknownLemma;
  std::optional<std::string> gloss;

  friend bool operator==(const Analysis&, const Analysis&) = default;
};

nlohmann::json analysis_to_json(const Analysis& a);
/// Reads {lex, diac, gloss?, feats:{...}}; feats are validated and
/// default-filled against `schema`.
Analysis analysis_from_json(const nlohmann::json& j, const FeatureSchema& schema);
/// Sorted-key compact JSON text; used for deduplication and ordering.
std::string canonical_analysis(const Analysis& a);

struct AnnotatedToken {
  std::string raw;
  std::optional<std::string> coda;
  Analysis analysis;

  friend bool operator==(const AnnotatedToken&, const AnnotatedToken&) = default;
};

struct Sentence {
  std::string id;
  std::vector<AnnotatedToken> tokens;
  /// Variant the sentence came from, set when corpora are merged.
  std::optional<std::string> source;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

enum class Split { kTrain, kTune, kDev, kTest };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct Corpus {
  std::string schema_ref;
  std::vector<Sentence> sentences;
  Split split = Split::kTrain;

  std::size_t token_count() const;
  bool empty() const { return sentences.empty(); }
};

Corpus parse_corpus(std::string_view text, const FeatureSchema& schema, Split split = Split::kTrain);
Corpus read_corpus(const std::filesystem::path& path, const FeatureSchema& schema,
                   Split split = Split::kTrain);

nlohmann::json sentence_to_json(const Sentence& s);
/// Canonical text: one compact sorted-key record per line.
std::string corpus_to_text(const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// Checks every token against `schema`; throws SchemaError naming the sentence.
void validate_corpus(const Corpus& corpus, const FeatureSchema& schema);

/// Fathatan, dammatan, kasratan, fatha, damma, kasra, shadda, sukun.
const std::set<char32_t>& default_diacritics();
std::string strip_diacritics(std::string_view text, const std::set<char32_t>& diacritic_set);
std::set<char32_t> diacritic_set_from(std::string_view chars);
/// Strips raw forms (and CODA forms) in place; analyses are untouched.
void normalize_corpus(Corpus& corpus, const std::set<char32_t>& diacritic_set);

/// Nested learning-curve samples. Sentences are shuffled once; each sample is
/// the shortest shuffled prefix reaching its token budget.
std::vector<Corpus> sample_learning_curve(const Corpus& train, const std::vector<std::size_t>& sizes,
                                          std::uint64_t seed = kDefaultSeed);

std::set<std::string> oov_vocabulary(const Corpus& train, const Corpus& eval);
std::set<std::string> vocabulary(const Corpus& corpus);

}  // namespace morphdis
