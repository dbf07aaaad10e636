#include "morphdis/analyzer.hpp"

#include <algorithm>

#include "morphdis/errors.hpp"
#include "morphdis/util.hpp"

namespace morphdis {

using nlohmann::json;

std::string_view backoff_name(BackoffPolicy p) {
  return p == BackoffPolicy::kKeepPredictions ? "KEEP_PREDICTIONS" : "SYNTHESIZE_FROM_PREDICTIONS";
}

BackoffPolicy parse_backoff(std::string_view text) {
  const std::string name = to_lower_ascii(text);
  if (name == "keep_predictions" || name == "keep") return BackoffPolicy::kKeepPredictions;
  if (name == "synthesize_from_predictions" || name == "synthesize")
    return BackoffPolicy::kSynthesizeFromPredictions;
  throw ValueError("unknown backoff policy '" + std::string(text) + "'");
}

namespace {

void canonicalize(std::vector<Analysis>& analyses) {
  std::vector<std::pair<std::string, Analysis>> keyed;
  keyed.reserve(analyses.size());
  for (auto& a : analyses) keyed.emplace_back(canonical_analysis(a), std::move(a));
  std::sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  keyed.erase(std::unique(keyed.begin(), keyed.end(),
                          [](const auto& x, const auto& y) { return x.first == y.first; }),
              keyed.end());
  analyses.clear();
  for (auto& [_, a] : keyed) analyses.push_back(std::move(a));
}

}  // namespace

AnalyzerDB::AnalyzerDB(std::string schema_ref, Entries entries, BackoffPolicy backoff,
                       std::string provenance)
    : schema_ref_(std::move(schema_ref)),
      entries_(std::move(entries)),
      backoff_(backoff),
      provenance_(std::move(provenance)) {
  for (auto it = entries_.begin(); it != entries_.end();) {
    canonicalize(it->second);
    it = it->second.empty() ? entries_.erase(it) : std::next(it);
  }
}

std::optional<std::span<const Analysis>> AnalyzerDB::analyze(std::string_view word) const {
  auto it = entries_.find(word);
  if (it == entries_.end()) return std::nullopt;
  return std::span<const Analysis>(it->second);
}

AnalyzerDB AnalyzerDB::with_backoff(BackoffPolicy backoff) const {
  AnalyzerDB copy = *this;
  copy.backoff_ = backoff;
  return copy;
}

AnalyzerStats AnalyzerDB::stats() const {
  AnalyzerStats s;
  s.forms = entries_.size();
  for (const auto& [_, v] : entries_) {
    s.analyses += v.size();
    s.max_analyses_per_form = std::max(s.max_analyses_per_form, v.size());
  }
  s.mean_analyses_per_form = s.forms ? static_cast<double>(s.analyses) / static_cast<double>(s.forms) : 0.0;
  return s;
}

AnalyzerDB compile_analyzer(const Corpus& train, BackoffPolicy backoff) {
  if (train.token_count() == 0) throw EmptyCorpus("cannot compile an analyzer from an empty corpus");
  AnalyzerDB::Entries entries;
  for (const auto& s : train.sentences)
    for (const auto& t : s.tokens) entries[t.raw].push_back(t.analysis);
  return AnalyzerDB(train.schema_ref, std::move(entries), backoff, "compiled-from-train");
}

std::string analyzer_to_text(const AnalyzerDB& db) {
  json header;
  header["format_version"] = kAnalyzerFormatVersion;
  header["variant"] = db.schema_ref();
  header["backoff"] = std::string(backoff_name(db.backoff()));
  header["provenance"] = db.provenance();
  header["entries"] = db.entries().size();
  std::string out = header.dump();
  out += '\n';
  for (const auto& [word, analyses] : db.entries()) {
    json rec;
    rec["word"] = word;
    rec["analyses"] = json::array();
    for (const auto& a : analyses) rec["analyses"].push_back(analysis_to_json(a));
    out += rec.dump();
    out += '\n';
  }
  return out;
}

AnalyzerDB parse_analyzer(std::string_view text, const FeatureSchema& schema) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty()) throw FormatError("analyzer file is empty");

  auto parse_line = [&](std::size_t i) {
    try {
      return json::parse(lines[i]);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("malformed record: ") + e.what(), i + 1);
    }
  };
  json header = parse_line(0);
  if (!header.is_object() || !header.contains("format_version") || !header["format_version"].is_number_integer())
    throw FormatError("missing analyzer header", 1);
  const int version = header["format_version"].get<int>();
  if (version > kAnalyzerFormatVersion || version < 1)
    throw VersionError("analyzer format version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kAnalyzerFormatVersion) + ")");
  for (const char* key : {"variant", "backoff", "provenance"})
    if (!header.contains(key) || !header[key].is_string())
      throw FormatError(std::string("header field '") + key + "' missing", 1);
  if (!header.contains("entries") || !header["entries"].is_number_unsigned())
    throw FormatError("header field 'entries' missing", 1);
  const std::string variant = header["variant"].get<std::string>();
  if (variant != schema.variant())
    throw SchemaMismatch("analyzer is for variant '" + variant + "', schema is '" + schema.variant() + "'");
  BackoffPolicy backoff;
  try {
    backoff = parse_backoff(header["backoff"].get<std::string>());
  } catch (const ValueError& e) {
    throw FormatError(e.what(), 1);
  }

  AnalyzerDB::Entries entries;
  std::size_t count = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    json rec = parse_line(i);
    if (!rec.is_object() || !rec.contains("word") || !rec["word"].is_string() || !rec.contains("analyses") ||
        !rec["analyses"].is_array())
      throw FormatError("entry must have 'word' and 'analyses'", i + 1);
    std::string word = rec["word"].get<std::string>();
    if (entries.count(word)) throw FormatError("duplicate entry '" + word + "'", i + 1);
    std::vector<Analysis> analyses;
    for (const auto& a : rec["analyses"]) {
      try {
        analyses.push_back(analysis_from_json(a, schema));
      } catch (const SchemaError& e) {
        throw SchemaError(e.what(), i + 1);
      } catch (const FormatError& e) {
        throw FormatError(e.what(), i + 1);
      }
    }
    if (analyses.empty()) throw FormatError("entry '" + word + "' has no analyses", i + 1);
    entries.emplace(std::move(word), std::move(analyses));
    ++count;
  }
  const auto expected = header["entries"].get<std::size_t>();
  if (count != expected)
    throw FormatError("expected " + std::to_string(expected) + " entries, found " + std::to_string(count) +
                      " (truncated file?)");
  return AnalyzerDB(variant, std::move(entries), backoff, header["provenance"].get<std::string>());
}

void save_db(const std::filesystem::path& path, const AnalyzerDB& db) { write_file(path, analyzer_to_text(db)); }

AnalyzerDB load_db(const std::filesystem::path& path, const FeatureSchema& schema) {
  return parse_analyzer(read_file(path), schema);
}

}  // namespace morphdis
