#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "morphdis/analyzer.hpp"
#include "morphdis/eval.hpp"
#include "morphdis/tagger.hpp"

namespace morphdis {

enum class Strategy { kSingle, kMerged, kContinued };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct ExperimentPaths {
  std::filesystem::path train, tune, dev, test;
  std::optional<std::filesystem::path> analyzer;
  /// Tagger output from outside (the interchange format), replacing the
  /// built-in tagger's predictions on DEV and TEST.
  std::optional<std::filesystem::path> external_dev, external_test;
};

struct HighResourceCorpus {
  std::string variant;
  std::filesystem::path path;
  /// Schema name or path; defaults to the variant's shipped schema.
  std::string schema;
};

struct ExperimentSpec {
  std::string variant;
  /// Schema name or path for the target corpora; defaults to `variant`.
  std::string schema;
  TaggerKind kind = TaggerKind::kFactored;
  bool use_analyzer = false;
  std::vector<std::size_t> sizes;
  Strategy strategy = Strategy::kSingle;
  std::uint64_t seed = kDefaultSeed;
  int epochs = 10;
  ExperimentPaths paths;
  std::vector<HighResourceCorpus> high_resource;
  /// Harmonization config for MERGED / CONTINUED; the shipped default when unset.
  std::optional<std::filesystem::path> harmonization;
  BackoffPolicy backoff = BackoffPolicy::kKeepPredictions;

  /// Throws ValueError on a malformed spec.
  void validate() const;
};

/// Relative paths in `j` are resolved against `base_dir`.
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json experiment_spec_to_json(const ExperimentSpec& spec);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);

/// Key of one evaluation: "<split>/<system>/<subset>/<slice>", e.g.
/// "dev/factored+morph/all/oov".
std::string report_key(std::string_view split, std::string_view system, std::string_view subset, Slice slice);

struct SizeOutcome {
  std::size_t budget = 0;
  std::size_t train_tokens = 0;
  std::filesystem::path dir;
  std::map<std::string, EvalReport> reports;
  std::map<std::string, ErrorStats> errors;  // "<split>/<system>"
  std::map<std::string, double> unseen_tag_rate;  // per split
};

struct ExperimentResult {
  std::filesystem::path run_dir;
  std::vector<SizeOutcome> sizes;
  /// "<split>/<subset>" -> learning-curve table over sizes and systems.
  std::map<std::string, CurveTable> curves;

  const EvalReport& report(std::size_t budget, const std::string& key) const;
};

/// Trains, optionally retags and evaluates every size of the grid. Writes
/// everything under a fresh "run-<UTC time>" directory in `out_dir`.
/// Module errors are re-raised as StageError naming the failing stage.
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir);

}  // namespace morphdis
