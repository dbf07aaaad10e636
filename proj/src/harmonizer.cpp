#include "morphdis/harmonizer.hpp"

#include <algorithm>
#include <numeric>

#include "morphdis/errors.hpp"

namespace morphdis {

using nlohmann::json;

const std::vector<std::string>& all_tags_10_features() {
  static const std::vector<std::string> names = {"pos",  "per",  "gen",  "num",  "asp",
                                                 "prc3", "prc2", "prc1", "prc0", "enc0"};
  return names;
}

bool is_proclitic_feature(std::string_view feature) {
  return feature == "prc0" || feature == "prc1" || feature == "prc2" || feature == "prc3";
}

std::string strip_proclitic_vowels(std::string_view value) {
  auto sep = value.find('_');
  if (sep == std::string_view::npos) return std::string(value);
  std::string form;
  for (char c : value.substr(0, sep))
    if (c != 'a' && c != 'e' && c != 'i' && c != 'o' && c != 'u') form.push_back(c);
  if (form.empty()) return std::string(value);
  return form + std::string(value.substr(sep));
}

HarmonizationConfig harmonization_config_from_json(const json& j) {
  HarmonizationConfig c;
  try {
    if (!j.is_object()) throw FormatError("harmonization config must be an object");
    if (j.contains("dropped_features")) c.dropped_features = j["dropped_features"].get<std::set<std::string>>();
    if (j.contains("proclitic_vowel_strip")) c.proclitic_vowel_strip = j["proclitic_vowel_strip"].get<bool>();
    if (j.contains("proclitic_overrides"))
      c.proclitic_overrides = j["proclitic_overrides"].get<std::map<std::string, std::string>>();
    if (j.contains("target_variant")) c.target_variant = j["target_variant"].get<std::string>();
    if (j.contains("default_remap")) {
      for (const auto& [variant, rules] : j["default_remap"].items()) {
        auto& out = c.default_remap[variant];
        for (const auto& r : rules)
          out.push_back({r.at("pos").get<std::string>(), r.at("feature").get<std::string>(),
                         r.at("from").get<std::string>(), r.at("to").get<std::string>()});
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed harmonization config: ") + e.what());
  }
  return c;
}

json harmonization_config_to_json(const HarmonizationConfig& c) {
  json j;
  j["dropped_features"] = c.dropped_features;
  j["proclitic_vowel_strip"] = c.proclitic_vowel_strip;
  j["proclitic_overrides"] = c.proclitic_overrides;
  j["target_variant"] = c.target_variant;
  j["default_remap"] = json::object();
  for (const auto& [variant, rules] : c.default_remap) {
    auto& arr = j["default_remap"][variant] = json::array();
    for (const auto& r : rules) arr.push_back({{"pos", r.pos}, {"feature", r.feature}, {"from", r.from}, {"to", r.to}});
  }
  return j;
}

HarmonizationConfig load_harmonization_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed harmonization config: ") + e.what());
  }
  return harmonization_config_from_json(j);
}

namespace {

std::vector<std::string> kept_features(const FeatureSchema& target, const std::set<std::string>& dropped) {
  std::vector<std::string> keep;
  for (const auto& name : target.feature_names())
    if (!dropped.count(name)) keep.push_back(name);
  return keep;
}

}  // namespace

Harmonizer::Harmonizer(HarmonizationConfig config, const FeatureSchema& target_schema)
    : config_(std::move(config)),
      reduced_(target_schema.restricted(kept_features(target_schema, config_.dropped_features),
                                        target_schema.variant() + "_all10")) {
  const auto& known = known_feature_names();
  for (const auto& d : config_.dropped_features)
    if (std::find(known.begin(), known.end(), d) == known.end())
      throw SchemaError("dropped feature '" + d + "' is not a known feature");
  if (config_.dropped_features.count("pos")) throw SchemaError("pos cannot be dropped");
  for (const auto& [from, to] : config_.proclitic_overrides) {
    auto again = config_.proclitic_overrides.find(to);
    if (again != config_.proclitic_overrides.end() && again->second != to)
      throw RemapError("proclitic override '" + from + "' -> '" + to + "' chains into another override");
    if (config_.proclitic_vowel_strip && strip_proclitic_vowels(to) != to && !config_.proclitic_overrides.count(to))
      throw RemapError("proclitic override target '" + to + "' would be rewritten again by vowel stripping");
  }
  for (const auto& [variant, rules] : config_.default_remap) {
    for (const auto& r : rules) {
      if (r.feature == "pos") throw RemapError("default remapping may not rewrite pos");
      if (!reduced_.has_feature(r.feature)) continue;  // dropped anyway
      if (is_proclitic_feature(r.feature) && config_.proclitic_vowel_strip && strip_proclitic_vowels(r.to) != r.to)
        throw RemapError("remap target '" + r.to + "' would be rewritten again by vowel stripping");
      if (!reduced_.is_valid(r.feature, r.to))
        throw RemapError("remap target '" + r.to + "' is not a valid " + r.feature + " value in '" +
                         reduced_.variant() + "'");
      for (const auto& other : rules)
        if (other.feature == r.feature && other.from == r.to && (other.pos == r.pos || other.pos == "*" || r.pos == "*"))
          throw RemapError("remap rules for '" + variant + "' chain on " + r.feature + "='" + r.to + "'");
    }
  }
}

Analysis Harmonizer::harmonize_analysis(const Analysis& a, std::string_view source_variant) const {
  Analysis out = a;
  out.features.clear();
  const auto pos_it = a.features.find("pos");
  const std::string pos = pos_it == a.features.end() ? std::string() : pos_it->second;
  const auto rules = config_.default_remap.find(std::string(source_variant));

  for (const auto& f : reduced_.features()) {
    auto it = a.features.find(f.name);
    std::string value = it == a.features.end() ? f.default_value : it->second;
    if (is_proclitic_feature(f.name)) {
      if (auto o = config_.proclitic_overrides.find(value); o != config_.proclitic_overrides.end())
        value = o->second;
      else if (config_.proclitic_vowel_strip)
        value = strip_proclitic_vowels(value);
    }
    if (rules != config_.default_remap.end()) {
      for (const auto& r : rules->second) {
        if (r.feature == f.name && r.from == value && (r.pos == "*" || r.pos == pos)) {
          value = r.to;
          break;
        }
      }
    }
    if (!f.has_value(value))
      throw RemapError("value '" + value + "' of " + f.name + " (from variant '" + std::string(source_variant) +
                       "') has no rule and is not valid in '" + reduced_.variant() + "'");
    out.features.emplace(f.name, std::move(value));
  }
  return out;
}

Corpus Harmonizer::harmonize_corpus(const Corpus& corpus, std::string_view source_variant) const {
  Corpus out = corpus;
  out.schema_ref = reduced_.variant();
  for (auto& s : out.sentences)
    for (auto& t : s.tokens) t.analysis = harmonize_analysis(t.analysis, source_variant);
  return out;
}

Corpus build_merged(const std::vector<VariantCorpus>& corpora, const Harmonizer& harmonizer, std::uint64_t seed) {
  if (corpora.size() < 2) throw ValueError("merging needs at least two corpora");
  Corpus merged;
  merged.schema_ref = harmonizer.reduced_schema().variant();
  merged.split = corpora.front().first.split;
  std::map<std::string, int> occurrences;
  for (const auto& [corpus, variant] : corpora) {
    const int seen = occurrences[variant]++;
    const std::string prefix = seen ? variant + "." + std::to_string(seen) : variant;
    Corpus h = harmonizer.harmonize_corpus(corpus, variant);
    for (auto& s : h.sentences) {
      s.id = prefix + "/" + s.id;
      s.source = variant;
      merged.sentences.push_back(std::move(s));
    }
  }
  Rng rng(seed);
  rng.shuffle(merged.sentences);
  return merged;
}

TrainingStages build_stages(const std::vector<VariantCorpus>& high_resource, const VariantCorpus& low_resource,
                            const Harmonizer& harmonizer, std::uint64_t seed) {
  if (high_resource.empty()) throw ValueError("continued training needs at least one high-resource corpus");
  TrainingStages st;
  if (high_resource.size() == 1) {
    st.stage1 = harmonizer.harmonize_corpus(high_resource.front().first, high_resource.front().second);
    for (auto& s : st.stage1.sentences) s.source = high_resource.front().second;
  } else {
    st.stage1 = build_merged(high_resource, harmonizer, seed);
  }
  st.stage2 = harmonizer.harmonize_corpus(low_resource.first, low_resource.second);
  for (auto& s : st.stage2.sentences) s.source = low_resource.second;
  return st;
}

}  // namespace morphdis
