#include "morphdis/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "morphdis/errors.hpp"

namespace morphdis {

using nlohmann::json;

json analysis_to_json(const Analysis& a) {
  json j;
  j["lex"] = a.lex;
  j["diac"] = a.diac;
  if (a.gloss) j["gloss"] = *a.gloss;
  j["feats"] = json::object();
  for (const auto& [k, v] : a.features) j["feats"][k] = v;
  return j;
}

namespace {

std::string optional_text(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return kUnknownLemma;
  if (!it->is_string()) throw FormatError(std::string("'") + key + "' must be a string");
  std::string s = it->get<std::string>();
  return s.empty() ? kUnknownLemma : s;
}

}  // namespace

Analysis analysis_from_json(const json& j, const FeatureSchema& schema) {
  if (!j.is_object()) throw FormatError("analysis must be an object");
  Analysis a;
  a.lex = optional_text(j, "lex");
  a.diac = optional_text(j, "diac");
  if (auto g = j.find("gloss"); g != j.end() && !g->is_null()) {
    if (!g->is_string()) throw FormatError("'gloss' must be a string");
    a.gloss = g->get<std::string>();
  }
  FeatureBundle feats;
  if (auto f = j.find("feats"); f != j.end()) {
    if (!f->is_object()) throw FormatError("'feats' must be an object");
    for (const auto& [k, v] : f->items()) {
      if (!v.is_string()) throw FormatError("feature '" + k + "' must be a string");
      feats.emplace(k, v.get<std::string>());
    }
  }
  try {
    a.features = schema.complete(feats);
  } catch (const ValueError& e) {
    throw SchemaError(e.what());
  }
  return a;
}

std::string canonical_analysis(const Analysis& a) { return analysis_to_json(a).dump(); }

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "TRAIN";
    case Split::kTune: return "TUNE";
    case Split::kDev: return "DEV";
    case Split::kTest: return "TEST";
  }
  return "TRAIN";
}

Split parse_split(std::string_view name) {
  std::string n = to_lower_ascii(name);
  if (n == "train") return Split::kTrain;
  if (n == "tune") return Split::kTune;
  if (n == "dev") return Split::kDev;
  if (n == "test") return Split::kTest;
  throw ValueError("unknown split '" + std::string(name) + "'");
}

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

namespace {

Sentence sentence_from_json(const json& rec, const FeatureSchema& schema) {
  if (!rec.is_object()) throw FormatError("record must be an object");
  Sentence s;
  auto id = rec.find("id");
  if (id == rec.end()) throw FormatError("record has no 'id'");
  if (id->is_string())
    s.id = id->get<std::string>();
  else if (id->is_number_integer())
    s.id = std::to_string(id->get<long long>());
  else
    throw FormatError("'id' must be a string");
  if (auto src = rec.find("source"); src != rec.end()) {
    if (!src->is_string()) throw FormatError("'source' must be a string");
    s.source = src->get<std::string>();
  }
  auto toks = rec.find("tokens");
  if (toks == rec.end() || !toks->is_array()) throw FormatError("record has no 'tokens' array");
  for (const auto& t : *toks) {
    if (!t.is_object()) throw FormatError("token must be an object");
    AnnotatedToken tok;
    auto raw = t.find("raw");
    if (raw == t.end() || !raw->is_string() || raw->get<std::string>().empty())
      throw FormatError("token has no non-empty 'raw'");
    tok.raw = raw->get<std::string>();
    if (auto c = t.find("coda"); c != t.end() && !c->is_null()) {
      if (!c->is_string()) throw FormatError("'coda' must be a string");
      tok.coda = c->get<std::string>();
    }
    auto an = t.find("analysis");
    if (an == t.end()) throw FormatError("token '" + tok.raw + "' has no 'analysis'");
    tok.analysis = analysis_from_json(*an, schema);
    s.tokens.push_back(std::move(tok));
  }
  return s;
}

template <typename LineSource>
Corpus load_lines(LineSource&& each_line, const FeatureSchema& schema, Split split) {
  Corpus corpus;
  corpus.schema_ref = schema.variant();
  corpus.split = split;
  std::unordered_set<std::string> ids;
  each_line([&](std::size_t lineno, const std::string& line) {
    if (line.find_first_not_of(" \t") == std::string::npos) return;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("malformed record: ") + e.what(), lineno);
    }
    Sentence s;
    try {
      s = sentence_from_json(rec, schema);
    } catch (const SchemaError& e) {
      throw SchemaError(e.what(), lineno);
    } catch (const FormatError& e) {
      throw FormatError(e.what(), lineno);
    }
    if (!ids.insert(s.id).second) throw FormatError("duplicate sentence id '" + s.id + "'", lineno);
    corpus.sentences.push_back(std::move(s));
  });
  return corpus;
}

}  // namespace

Corpus parse_corpus(std::string_view text, const FeatureSchema& schema, Split split) {
  return load_lines(
      [&](auto&& fn) {
        std::size_t start = 0, lineno = 0;
        while (start < text.size()) {
          auto end = text.find('\n', start);
          if (end == std::string_view::npos) end = text.size();
          std::string line(text.substr(start, end - start));
          if (!line.empty() && line.back() == '\r') line.pop_back();
          fn(++lineno, line);
          start = end + 1;
        }
      },
      schema, split);
}

Corpus read_corpus(const std::filesystem::path& path, const FeatureSchema& schema, Split split) {
  return load_lines([&](auto&& fn) { for_each_line(path, fn); }, schema, split);
}

json sentence_to_json(const Sentence& s) {
  json rec;
  rec["id"] = s.id;
  if (s.source) rec["source"] = *s.source;
  rec["tokens"] = json::array();
  for (const auto& t : s.tokens) {
    json jt;
    jt["raw"] = t.raw;
    if (t.coda) jt["coda"] = *t.coda;
    jt["analysis"] = analysis_to_json(t.analysis);
    rec["tokens"].push_back(std::move(jt));
  }
  return rec;
}

std::string corpus_to_text(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.sentences) {
    out += sentence_to_json(s).dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  write_file(path, corpus_to_text(corpus));
}

void validate_corpus(const Corpus& corpus, const FeatureSchema& schema) {
  for (const auto& s : corpus.sentences) {
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto& t = s.tokens[i];
      if (t.raw.empty()) throw SchemaError("sentence '" + s.id + "' token " + std::to_string(i) + " has an empty raw form");
      try {
        FeatureBundle full = schema.complete(t.analysis.features);
        if (full.size() != t.analysis.features.size())
          throw ValueError("analysis is missing schema features");
      } catch (const ValueError& e) {
        throw SchemaError("sentence '" + s.id + "' token " + std::to_string(i) + ": " + e.what());
      }
    }
  }
}

const std::set<char32_t>& default_diacritics() {
  static const std::set<char32_t> marks = {0x064B, 0x064C, 0x064D, 0x064E,
                                           0x064F, 0x0650, 0x0651, 0x0652};
  return marks;
}

std::string strip_diacritics(std::string_view text, const std::set<char32_t>& diacritic_set) {
  std::u32string cps = utf8::decode(text);
  std::erase_if(cps, [&](char32_t c) { return diacritic_set.count(c) > 0; });
  return utf8::encode(cps);
}

std::set<char32_t> diacritic_set_from(std::string_view chars) {
  auto cps = utf8::decode(chars);
  return {cps.begin(), cps.end()};
}

void normalize_corpus(Corpus& corpus, const std::set<char32_t>& diacritic_set) {
  for (auto& s : corpus.sentences) {
    for (auto& t : s.tokens) {
      t.raw = strip_diacritics(t.raw, diacritic_set);
      if (t.coda) t.coda = strip_diacritics(*t.coda, diacritic_set);
    }
  }
}

std::vector<Corpus> sample_learning_curve(const Corpus& train, const std::vector<std::size_t>& sizes,
                                          std::uint64_t seed) {
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw ValueError("token budgets must be positive");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw ValueError("token budgets must be strictly increasing");
  }
  std::vector<std::size_t> order(train.sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Corpus> samples;
  Corpus current;
  current.schema_ref = train.schema_ref;
  current.split = train.split;
  std::size_t next = 0, tokens = 0;
  for (std::size_t budget : sizes) {
    while (tokens < budget && next < order.size()) {
      const Sentence& s = train.sentences[order[next++]];
      tokens += s.tokens.size();
      current.sentences.push_back(s);
    }
    samples.push_back(current);
  }
  return samples;
}

std::set<std::string> vocabulary(const Corpus& corpus) {
  std::set<std::string> v;
  for (const auto& s : corpus.sentences)
    for (const auto& t : s.tokens) v.insert(t.raw);
  return v;
}

std::set<std::string> oov_vocabulary(const Corpus& train, const Corpus& eval) {
  const auto seen = vocabulary(train);
  std::set<std::string> out;
  for (const auto& s : eval.sentences)
    for (const auto& t : s.tokens)
      if (!seen.count(t.raw)) out.insert(t.raw);
  return out;
}

}  // namespace morphdis
