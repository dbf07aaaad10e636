#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace morphdis {

/// Feature name -> value. std::map keeps keys sorted so bundles compare and
/// serialize canonically.
using FeatureBundle = std::map<std::string, std::string>;

/// The sixteen feature names a schema may use, in canonical order.
const std::vector<std::string>& known_feature_names();

inline constexpr char kTagSeparator = '+';

struct FeatureDef {
  std::string name;
  std::vector<std::string> values;  // sorted, unique
  std::string default_value;

  bool has_value(std::string_view v) const;
};

/// Ordered feature inventory for one language variant. Immutable once built.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  /// Validates and takes ownership of the definitions. Throws SchemaError.
  FeatureSchema(std::string variant, std::string version, std::vector<FeatureDef> features,
                std::string notes = {});

  const std::string& variant() const { return variant_; }
  const std::string& version() const { return version_; }
  const std::string& notes() const { return notes_; }
  const std::vector<FeatureDef>& features() const { return features_; }
  std::size_t size() const { return features_.size(); }

  std::optional<std::size_t> index_of(std::string_view name) const;
  bool has_feature(std::string_view name) const { return index_of(name).has_value(); }
  const FeatureDef& feature(std::string_view name) const;
  std::vector<std::string> feature_names() const;

  bool is_valid(std::string_view feature, std::string_view value) const;

  /// Fills every missing schema feature with its default. Throws ValueError on
  /// an unknown feature or an invalid value.
  FeatureBundle complete(const FeatureBundle& bundle) const;
  FeatureBundle defaults() const;

  /// Product of per-feature cardinalities, saturating at UINT64_MAX.
  std::uint64_t tag_space_size() const;

  /// Copy restricted to `keep`, in this schema's order, under a new variant id.
  FeatureSchema restricted(const std::vector<std::string>& keep, std::string variant) const;

  nlohmann::json to_json() const;

 private:
  std::string variant_;
  std::string version_;
  std::string notes_;
  std::vector<FeatureDef> features_;
};

/// Parses a schema document (JSON key-value tree).
FeatureSchema load_schema(const nlohmann::json& doc);
FeatureSchema load_schema(const std::filesystem::path& path);
FeatureSchema parse_schema(std::string_view text);

/// Canonical document text: sorted keys and sorted value lists.
std::string canonical_schema_text(const FeatureSchema& schema);

/// Directory holding the shipped schema documents (compiled-in default,
/// overridable through the MORPHDIS_DATA_DIR environment variable).
std::filesystem::path data_dir();
/// Loads `<data_dir>/schemas/<variant>.json`.
FeatureSchema shipped_schema(std::string_view variant);

/// Resolves a --schema argument: an existing file path or a shipped variant id.
FeatureSchema resolve_schema(const std::string& name_or_path);

std::string serialize_unfactored(const FeatureBundle& bundle, const FeatureSchema& schema);
FeatureBundle parse_unfactored(std::string_view tag, const FeatureSchema& schema);

}  // namespace morphdis
