#include "morphdis/schema.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "morphdis/errors.hpp"
#include "morphdis/harmonizer.hpp"

#ifndef MORPHDIS_DEFAULT_DATA_DIR
#define MORPHDIS_DEFAULT_DATA_DIR "data"
#endif

namespace morphdis {

using nlohmann::json;

const std::vector<std::string>& known_feature_names() {
  static const std::vector<std::string> names = {
      "pos", "per", "gen", "num", "asp", "vox", "mod", "stt",
      "cas", "prc3", "prc2", "prc1", "prc0", "enc0", "enc1", "enc2"};
  return names;
}

bool FeatureDef::has_value(std::string_view v) const {
  return std::binary_search(values.begin(), values.end(), v);
}

FeatureSchema::FeatureSchema(std::string variant, std::string version,
                             std::vector<FeatureDef> features, std::string notes)
    : variant_(std::move(variant)),
      version_(std::move(version)),
      notes_(std::move(notes)),
      features_(std::move(features)) {
  const auto& known = known_feature_names();
  std::set<std::string> seen;
  for (auto& f : features_) {
    if (std::find(known.begin(), known.end(), f.name) == known.end())
      throw SchemaError("unknown feature '" + f.name + "'");
    if (!seen.insert(f.name).second) throw SchemaError("duplicate feature '" + f.name + "'");
    if (f.values.empty()) throw SchemaError("feature '" + f.name + "' has no values");
    std::sort(f.values.begin(), f.values.end());
    if (std::adjacent_find(f.values.begin(), f.values.end()) != f.values.end())
      throw SchemaError("feature '" + f.name + "' lists a value twice");
    for (const auto& v : f.values) {
      if (v.empty()) throw SchemaError("feature '" + f.name + "' has an empty value");
      if (v.find(kTagSeparator) != std::string::npos)
        throw SchemaError("value '" + v + "' of feature '" + f.name + "' contains '+'");
    }
    if (!f.has_value(f.default_value))
      throw SchemaError("default '" + f.default_value + "' of feature '" + f.name +
                        "' is not among its values");
  }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i)
    if (features_[i].name == name) return i;
  return std::nullopt;
}

const FeatureDef& FeatureSchema::feature(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw UnknownFeature("feature '" + std::string(name) + "' not in schema '" + variant_ + "'");
  return features_[*idx];
}

std::vector<std::string> FeatureSchema::feature_names() const {
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (const auto& f : features_) out.push_back(f.name);
  return out;
}

bool FeatureSchema::is_valid(std::string_view feature, std::string_view value) const {
  auto idx = index_of(feature);
  return idx && features_[*idx].has_value(value);
}

FeatureBundle FeatureSchema::complete(const FeatureBundle& bundle) const {
  for (const auto& [name, value] : bundle) {
    auto idx = index_of(name);
    if (!idx) throw ValueError("feature '" + name + "' not in schema '" + variant_ + "'");
    if (!features_[*idx].has_value(value))
      throw ValueError("invalid value '" + value + "' for feature '" + name + "'");
  }
  FeatureBundle out = bundle;
  for (const auto& f : features_) out.emplace(f.name, f.default_value);
  return out;
}

FeatureBundle FeatureSchema::defaults() const {
  FeatureBundle out;
  for (const auto& f : features_) out.emplace(f.name, f.default_value);
  return out;
}

std::uint64_t FeatureSchema::tag_space_size() const {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t product = 1;
  for (const auto& f : features_) {
    const std::uint64_t n = f.values.size();
    if (product > kMax / n) return kMax;
    product *= n;
  }
  return product;
}

FeatureSchema FeatureSchema::restricted(const std::vector<std::string>& keep,
                                        std::string variant) const {
  std::vector<FeatureDef> defs;
  for (const auto& f : features_)
    if (std::find(keep.begin(), keep.end(), f.name) != keep.end()) defs.push_back(f);
  for (const auto& k : keep)
    if (!has_feature(k)) throw UnknownFeature("feature '" + k + "' not in schema '" + variant_ + "'");
  return FeatureSchema(std::move(variant), version_, std::move(defs), notes_);
}

json FeatureSchema::to_json() const {
  json doc;
  doc["variant"] = variant_;
  doc["version"] = version_;
  if (!notes_.empty()) doc["notes"] = notes_;
  doc["features"] = json::array();
  for (const auto& f : features_)
    doc["features"].push_back({{"name", f.name}, {"values", f.values}, {"default", f.default_value}});
  return doc;
}

FeatureSchema load_schema(const json& doc) {
  if (!doc.is_object()) throw SchemaError("schema document must be an object");
  auto str_field = [&](const json& obj, const char* key) -> std::string {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
      throw SchemaError(std::string("missing string field '") + key + "'");
    return it->get<std::string>();
  };
  std::string variant = str_field(doc, "variant");
  std::string version = str_field(doc, "version");
  std::string notes = doc.contains("notes") && doc["notes"].is_string() ? doc["notes"].get<std::string>() : "";
  auto feats = doc.find("features");
  if (feats == doc.end() || !feats->is_array()) throw SchemaError("missing 'features' array");
  std::vector<FeatureDef> defs;
  for (const auto& f : *feats) {
    if (!f.is_object()) throw SchemaError("feature entries must be objects");
    FeatureDef def;
    def.name = str_field(f, "name");
    if (!f.contains("default") || !f["default"].is_string())
      throw SchemaError("feature '" + def.name + "' is missing its default");
    def.default_value = f["default"].get<std::string>();
    if (!f.contains("values") || !f["values"].is_array())
      throw SchemaError("feature '" + def.name + "' is missing its values");
    for (const auto& v : f["values"]) {
      if (!v.is_string()) throw SchemaError("feature '" + def.name + "' has a non-string value");
      def.values.push_back(v.get<std::string>());
    }
    defs.push_back(std::move(def));
  }
  return FeatureSchema(std::move(variant), std::move(version), std::move(defs), std::move(notes));
}

FeatureSchema parse_schema(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed schema document: ") + e.what());
  }
  return load_schema(doc);
}

FeatureSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str());
}

std::string canonical_schema_text(const FeatureSchema& schema) {
  return schema.to_json().dump();
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("MORPHDIS_DATA_DIR"); env && *env) return env;
  return MORPHDIS_DEFAULT_DATA_DIR;
}

FeatureSchema shipped_schema(std::string_view variant) {
  return load_schema(data_dir() / "schemas" / (std::string(variant) + ".json"));
}

FeatureSchema resolve_schema(const std::string& name_or_path) {
  std::filesystem::path p(name_or_path);
  if (std::filesystem::is_regular_file(p)) return load_schema(p);
  // "<variant>_all10" names the harmonized space of a shipped variant.
  constexpr std::string_view reduced = "_all10";
  if (name_or_path.size() > reduced.size() && name_or_path.ends_with(reduced)) {
    const std::string base = name_or_path.substr(0, name_or_path.size() - reduced.size());
    return shipped_schema(base).restricted(all_tags_10_features(), name_or_path);
  }
  return shipped_schema(name_or_path);
}

std::string serialize_unfactored(const FeatureBundle& bundle, const FeatureSchema& schema) {
  FeatureBundle full = schema.complete(bundle);
  std::string out;
  for (const auto& f : schema.features()) {
    if (!out.empty()) out += kTagSeparator;
    out += full.at(f.name);
  }
  return out;
}

FeatureBundle parse_unfactored(std::string_view tag, const FeatureSchema& schema) {
  if (tag.empty()) throw ParseError("empty unfactored tag");
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = tag.find(kTagSeparator, start);
    fields.push_back(tag.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (fields.size() != schema.size())
    throw ParseError("tag '" + std::string(tag) + "' has " + std::to_string(fields.size()) +
                     " fields, schema '" + schema.variant() + "' expects " + std::to_string(schema.size()));
  FeatureBundle out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto& f = schema.features()[i];
    if (!f.has_value(fields[i]))
      throw ParseError("invalid value '" + std::string(fields[i]) + "' for feature '" + f.name + "'");
    out.emplace(f.name, std::string(fields[i]));
  }
  return out;
}

}  // namespace morphdis
