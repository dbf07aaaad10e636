#include "morphdis/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "morphdis/errors.hpp"
#include "morphdis/harmonizer.hpp"

namespace morphdis {

using nlohmann::json;

std::string_view slice_name(Slice s) { return s == Slice::kAll ? "all" : "oov"; }

Slice parse_slice(std::string_view name) {
  std::string n = to_lower_ascii(name);
  if (n == "all") return Slice::kAll;
  if (n == "oov") return Slice::kOov;
  throw ValueError("unknown slice '" + std::string(name) + "'");
}

std::vector<std::string> all_tags_star_features(std::string_view variant, const FeatureSchema& schema) {
  std::vector<std::string> out;
  if (variant == "glf") {
    for (const auto& f : schema.feature_names())
      if (std::find(all_tags_10_features().begin(), all_tags_10_features().end(), f) != all_tags_10_features().end())
        out.push_back(f);
    return out;
  }
  const bool drop_enc12 = variant == "egy" || variant == "lev";
  for (const auto& f : schema.feature_names())
    if (!drop_enc12 || (f != "enc1" && f != "enc2")) out.push_back(f);
  return out;
}

FeatureSubset resolve_subset(std::string_view spec, const FeatureSchema& schema) {
  std::string s(spec);
  FeatureSubset out;
  auto require = [&](const std::vector<std::string>& names) {
    for (const auto& n : names)
      if (!schema.has_feature(n))
        throw UnknownFeature("feature '" + n + "' is not in schema '" + schema.variant() + "'");
    return names;
  };
  if (s == "pos") {
    out = {"POS", require({"pos"})};
  } else if (s == "all") {
    out = {"ALL TAGS", schema.feature_names()};
  } else if (s == "all10") {
    out = {"ALL TAGS 10", require(all_tags_10_features())};
  } else if (s.rfind("all-star:", 0) == 0) {
    out = {"ALL TAGS*", all_tags_star_features(s.substr(9), schema)};
  } else {
    std::vector<std::string> names;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) names.push_back(item);
    if (names.empty()) throw UnknownFeature("empty feature subset");
    out = {"SUBSET", require(names)};
  }
  return out;
}

json EvalReport::to_json() const {
  json j{{"metric", metric_name},
         {"subset", feature_subset},
         {"slice", std::string(slice_name(slice))},
         {"total", total_tokens},
         {"correct", correct_tokens},
         {"accuracy", accuracy}};
  if (backoff_tokens) j["backoff_tokens"] = *backoff_tokens;
  return j;
}

namespace {

void check_aligned(const Corpus& pred, const Corpus& gold) {
  if (pred.sentences.size() != gold.sentences.size())
    throw AlignmentError("prediction has " + std::to_string(pred.sentences.size()) + " sentences, gold has " +
                         std::to_string(gold.sentences.size()));
  for (std::size_t s = 0; s < gold.sentences.size(); ++s) {
    const auto& p = pred.sentences[s];
    const auto& g = gold.sentences[s];
    if (p.tokens.size() != g.tokens.size())
      throw AlignmentError("sentence '" + g.id + "': " + std::to_string(p.tokens.size()) + " predicted tokens vs " +
                           std::to_string(g.tokens.size()) + " gold");
    for (std::size_t i = 0; i < g.tokens.size(); ++i)
      if (p.tokens[i].raw != g.tokens[i].raw)
        throw AlignmentError("sentence '" + g.id + "' token " + std::to_string(i) + ": '" + p.tokens[i].raw +
                             "' vs gold '" + g.tokens[i].raw + "'");
  }
}

const std::string& value_of(const FeatureBundle& b, const FeatureSchema& schema, const std::string& feature) {
  auto it = b.find(feature);
  return it == b.end() ? schema.feature(feature).default_value : it->second;
}

void check_subset(const FeatureSchema& schema, const std::vector<std::string>& subset) {
  for (const auto& f : subset)
    if (!schema.has_feature(f)) throw UnknownFeature("feature '" + f + "' is not in schema '" + schema.variant() + "'");
}

}  // namespace

std::vector<bool> token_correctness(const Corpus& pred, const Corpus& gold, const FeatureSchema& schema,
                                    const std::vector<std::string>& subset) {
  check_aligned(pred, gold);
  check_subset(schema, subset);
  std::vector<bool> out;
  out.reserve(gold.token_count());
  for (std::size_t s = 0; s < gold.sentences.size(); ++s) {
    for (std::size_t i = 0; i < gold.sentences[s].tokens.size(); ++i) {
      const auto& p = pred.sentences[s].tokens[i].analysis.features;
      const auto& g = gold.sentences[s].tokens[i].analysis.features;
      bool ok = true;
      for (const auto& f : subset)
        if (value_of(p, schema, f) != value_of(g, schema, f)) {
          ok = false;
          break;
        }
      out.push_back(ok);
    }
  }
  return out;
}

std::vector<bool> oov_mask(const Corpus& eval, const Corpus& train) {
  const auto seen = vocabulary(train);
  std::vector<bool> mask;
  mask.reserve(eval.token_count());
  for (const auto& s : eval.sentences)
    for (const auto& t : s.tokens) mask.push_back(!seen.count(t.raw));
  return mask;
}

EvalReport accuracy(const Corpus& pred, const Corpus& gold, const FeatureSchema& schema, const FeatureSubset& subset,
                    Slice slice, const Corpus* train_ref) {
  const auto correct = token_correctness(pred, gold, schema, subset.features);
  std::vector<bool> mask;
  if (slice == Slice::kOov) {
    if (!train_ref) throw ValueError("the OOV slice needs a training reference corpus");
    mask = oov_mask(gold, *train_ref);
  }
  EvalReport r;
  r.metric_name = subset.metric;
  r.feature_subset = subset.features;
  r.slice = slice;
  for (std::size_t i = 0; i < correct.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    ++r.total_tokens;
    if (correct[i]) ++r.correct_tokens;
  }
  r.accuracy = r.total_tokens ? static_cast<double>(r.correct_tokens) / static_cast<double>(r.total_tokens) : 0.0;
  return r;
}

double unseen_tag_rate(const Corpus& eval, const Corpus& train, const FeatureSchema& schema) {
  std::set<std::string> seen;
  for (const auto& s : train.sentences)
    for (const auto& t : s.tokens) seen.insert(serialize_unfactored(t.analysis.features, schema));
  std::size_t total = 0, unseen = 0;
  for (const auto& s : eval.sentences)
    for (const auto& t : s.tokens) {
      ++total;
      if (!seen.count(serialize_unfactored(t.analysis.features, schema))) ++unseen;
    }
  return total ? static_cast<double>(unseen) / static_cast<double>(total) : 0.0;
}

const std::string& PosCategoryMap::operator()(const std::string& pos) const {
  auto it = category_of.find(pos);
  return it == category_of.end() ? fallback : it->second;
}

PosCategoryMap pos_categories_from_json(const json& j) {
  PosCategoryMap m;
  try {
    if (j.contains("fallback")) m.fallback = j["fallback"].get<std::string>();
    for (const auto& [category, members] : j.at("categories").items())
      for (const auto& pos : members) {
        auto [it, fresh] = m.category_of.emplace(pos.get<std::string>(), category);
        if (!fresh) throw FormatError("pos '" + it->first + "' is listed in two categories");
      }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed category map: ") + e.what());
  }
  return m;
}

PosCategoryMap load_pos_categories(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed category map: ") + e.what());
  }
  return pos_categories_from_json(j);
}

double ErrorStats::percentage(const std::string& feature) const {
  if (!total_error_tokens) return 0.0;
  auto it = per_feature_error_counts.find(feature);
  const std::size_t n = it == per_feature_error_counts.end() ? 0 : it->second;
  return 100.0 * static_cast<double>(n) / static_cast<double>(total_error_tokens);
}

json ErrorStats::to_json() const {
  json j;
  j["subset"] = feature_subset;
  j["total_error_tokens"] = total_error_tokens;
  j["mean_failures_per_error"] = mean_failures_per_error;
  j["features"] = json::object();
  for (const auto& [f, n] : per_feature_error_counts) j["features"][f] = {{"count", n}, {"percent", percentage(f)}};
  j["pos_confusion"] = json::array();
  for (const auto& [cell, n] : pos_confusion) j["pos_confusion"].push_back({{"gold", cell.first}, {"pred", cell.second}, {"count", n}});
  return j;
}

ErrorStats feature_error_stats(const Corpus& pred, const Corpus& gold, const FeatureSchema& schema,
                               const std::vector<std::string>& subset, const PosCategoryMap& categories) {
  check_aligned(pred, gold);
  check_subset(schema, subset);
  ErrorStats st;
  st.feature_subset = subset;
  for (const auto& f : subset) st.per_feature_error_counts[f] = 0;
  std::size_t failures = 0;
  for (std::size_t s = 0; s < gold.sentences.size(); ++s) {
    for (std::size_t i = 0; i < gold.sentences[s].tokens.size(); ++i) {
      const auto& p = pred.sentences[s].tokens[i].analysis.features;
      const auto& g = gold.sentences[s].tokens[i].analysis.features;
      std::size_t wrong = 0;
      for (const auto& f : subset)
        if (value_of(p, schema, f) != value_of(g, schema, f)) {
          ++st.per_feature_error_counts[f];
          ++wrong;
        }
      if (!wrong) continue;
      ++st.total_error_tokens;
      failures += wrong;
      if (schema.has_feature("pos"))
        ++st.pos_confusion[{categories(value_of(g, schema, "pos")), categories(value_of(p, schema, "pos"))}];
    }
  }
  st.mean_failures_per_error =
      st.total_error_tokens ? static_cast<double>(failures) / static_cast<double>(st.total_error_tokens) : 0.0;
  return st;
}

json McNemarResult::to_json() const {
  return {{"b", b}, {"c", c}, {"exact", exact}, {"statistic", statistic}, {"p", p_value}, {"significant", significant}};
}

McNemarResult mcnemar_counts(std::size_t b, std::size_t c, double alpha, std::size_t exact_below) {
  McNemarResult r;
  r.b = b;
  r.c = c;
  const std::size_t n = b + c;
  if (n < exact_below) {
    r.exact = true;
    const std::size_t k_max = std::min(b, c);
    // Two-sided exact binomial with p = 1/2: 2 * P(X <= min(b, c)).
    double coef = 1.0, tail = 0.0;
    for (std::size_t k = 0; k <= k_max; ++k) {
      tail += coef;
      coef = coef * static_cast<double>(n - k) / static_cast<double>(k + 1);
    }
    r.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
  } else {
    r.exact = false;
    const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
    const double d = std::max(diff, 0.0);
    r.statistic = d * d / static_cast<double>(n);
    r.p_value = std::erfc(std::sqrt(r.statistic / 2.0));
  }
  r.significant = r.p_value < alpha;
  return r;
}

McNemarResult mcnemar(const std::vector<bool>& correct_a, const std::vector<bool>& correct_b, double alpha,
                      std::size_t exact_below) {
  if (correct_a.size() != correct_b.size())
    throw LengthMismatch("McNemar inputs have lengths " + std::to_string(correct_a.size()) + " and " +
                         std::to_string(correct_b.size()));
  std::size_t b = 0, c = 0;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    if (correct_a[i] && !correct_b[i]) ++b;
    if (!correct_a[i] && correct_b[i]) ++c;
  }
  return mcnemar_counts(b, c, alpha, exact_below);
}

const CurveTable::Entry* CurveTable::find(std::size_t size, const std::string& system) const {
  for (const auto& e : entries)
    if (e.size == size && e.system == system) return &e;
  return nullptr;
}

json CurveTable::to_json() const {
  json j;
  j["metric"] = metric;
  j["sizes"] = sizes;
  j["systems"] = systems;
  j["cells"] = json::array();
  for (const auto& e : entries) {
    json c{{"size", e.size},
           {"system", e.system},
           {"accuracy", e.accuracy},
           {"best", e.best},
           {"insignificant_vs_best", e.insignificant_vs_best}};
    if (e.p_vs_best) c["p_vs_best"] = *e.p_vs_best;
    j["cells"].push_back(std::move(c));
  }
  return j;
}

std::string CurveTable::to_text() const {
  std::size_t width = 8;
  for (const auto& s : systems) width = std::max(width, s.size() + 2);
  std::ostringstream os;
  os << metric << '\n' << std::left << std::setw(10) << "size";
  for (const auto& s : systems) os << std::right << std::setw(static_cast<int>(width)) << s;
  os << '\n';
  for (auto size : sizes) {
    os << std::left << std::setw(10) << size;
    for (const auto& sys : systems) {
      std::string cell = "-";
      if (const Entry* e = find(size, sys)) {
        std::ostringstream v;
        v << std::fixed << std::setprecision(1) << 100.0 * e->accuracy;
        cell = v.str() + (e->best ? "*" : e->insignificant_vs_best ? "_" : " ");
      }
      os << std::right << std::setw(static_cast<int>(width)) << cell;
    }
    os << '\n';
  }
  return os.str();
}

CurveTable learning_curve_report(const std::map<CurveKey, CurveCell>& results, double alpha) {
  CurveTable t;
  if (results.empty()) return t;
  const auto& first = results.begin()->second.report;
  t.metric = first.metric_name;
  std::set<std::size_t> sizes;
  std::set<std::string> systems;
  for (const auto& [key, cell] : results) {
    if (cell.report.metric_name != first.metric_name || cell.report.feature_subset != first.feature_subset ||
        cell.report.slice != first.slice)
      throw InconsistentMetric("learning-curve cells mix metrics ('" + first.metric_name + "' vs '" +
                               cell.report.metric_name + "')");
    sizes.insert(key.first);
    systems.insert(key.second);
  }
  t.sizes.assign(sizes.begin(), sizes.end());
  t.systems.assign(systems.begin(), systems.end());

  double best_acc = -1.0;
  for (const auto& [_, cell] : results) best_acc = std::max(best_acc, cell.report.accuracy);
  const CurveCell* reference = nullptr;
  for (const auto& [key, cell] : results) {
    CurveTable::Entry e;
    e.size = key.first;
    e.system = key.second;
    e.accuracy = cell.report.accuracy;
    e.best = cell.report.accuracy == best_acc;
    if (e.best && !reference) reference = &cell;
    t.entries.push_back(std::move(e));
  }
  auto it = results.begin();
  for (auto& e : t.entries) {
    const CurveCell& cell = (it++)->second;
    if (e.best || reference->correct.empty() || cell.correct.empty()) continue;
    const auto m = mcnemar(reference->correct, cell.correct, alpha);
    e.p_vs_best = m.p_value;
    e.insignificant_vs_best = !m.significant;
  }
  return t;
}

}  // namespace morphdis
