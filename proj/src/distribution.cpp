#include "morphdis/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "morphdis/errors.hpp"

namespace morphdis {

using nlohmann::json;

double FeatureDistribution::prob(const std::string& feature, const std::string& value) const {
  auto f = per_feature.find(feature);
  if (f == per_feature.end()) return 0.0;
  auto v = f->second.find(value);
  return v == f->second.end() ? 0.0 : v->second;
}

FeatureBundle argmax_bundle(const FeatureDistribution& dist, const FeatureSchema& schema) {
  FeatureBundle out;
  for (const auto& f : schema.features()) {
    auto it = dist.per_feature.find(f.name);
    if (it == dist.per_feature.end() || it->second.empty()) {
      out.emplace(f.name, f.default_value);
      continue;
    }
    const std::string* best = nullptr;
    double best_p = -1.0;
    for (const auto& [value, p] : it->second) {  // map order: ties keep the smaller value
      if (p > best_p) {
        best_p = p;
        best = &value;
      }
    }
    out.emplace(f.name, *best);
  }
  return out;
}

FeatureBundle prediction_bundle(const FeatureDistribution& dist, const FeatureSchema& schema) {
  if (!dist.unfactored.empty()) return parse_unfactored(dist.unfactored.front().first, schema);
  return argmax_bundle(dist, schema);
}

void derive_marginals(FeatureDistribution& dist, const FeatureSchema& schema) {
  double total = 0.0;
  for (const auto& [_, p] : dist.unfactored) total += p;
  if (total <= 0.0) throw NormalizationError("unfactored distribution has no mass");
  dist.per_feature.clear();
  for (const auto& f : schema.features()) {
    auto& vec = dist.per_feature[f.name];
    for (const auto& v : f.values) vec[v] = 0.0;
  }
  for (const auto& [tag, p] : dist.unfactored) {
    FeatureBundle b = parse_unfactored(tag, schema);
    for (const auto& [name, value] : b) dist.per_feature[name][value] += p / total;
  }
}

namespace {

void sort_unfactored(std::vector<std::pair<std::string, double>>& list) {
  std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
}

}  // namespace

namespace {

// 12 significant digits: well past the interchange minimum, and coarse enough
// that renormalizing on reload does not leak last-ulp noise into the text.
double written(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", p);
  return std::strtod(buf, nullptr);
}

}  // namespace

std::string distributions_to_text(const std::vector<SentenceDistributions>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    json rec;
    rec["id"] = s.id;
    rec["tokens"] = json::array();
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const auto& d = s.tokens[i];
      json t;
      t["raw"] = i < s.raw.size() ? s.raw[i] : std::string();
      t["feats"] = json::object();
      for (const auto& [feat, vec] : d.per_feature)
        for (const auto& [value, p] : vec) t["feats"][feat][value] = written(p);
      if (!d.unfactored.empty()) {
        t["unfactored"] = json::object();
        for (const auto& [tag, p] : d.unfactored) t["unfactored"][tag] = written(p);
      }
      rec["tokens"].push_back(std::move(t));
    }
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void write_distributions(const std::filesystem::path& path, const std::vector<SentenceDistributions>& sentences) {
  write_file(path, distributions_to_text(sentences));
}

namespace {

double read_prob(const json& v, const std::string& what) {
  if (!v.is_number()) throw FormatError(what + " must be a number");
  double p = v.get<double>();
  if (!std::isfinite(p) || p < 0.0 || p > 1.0 + kNormalizationTolerance)
    throw NormalizationError(what + " = " + std::to_string(p) + " is outside [0,1]");
  return std::min(p, 1.0);
}

FeatureDistribution token_from_json(const json& t, const FeatureSchema& schema, DistributionLoadReport& report) {
  FeatureDistribution d;
  if (auto u = t.find("unfactored"); u != t.end() && !u->is_null()) {
    if (!u->is_object()) throw FormatError("'unfactored' must be an object");
    double total = 0.0;
    for (const auto& [tag, p] : u->items()) {
      try {
        parse_unfactored(tag, schema);
      } catch (const ParseError& e) {
        throw FormatError(std::string("bad unfactored tag: ") + e.what());
      }
      double prob = read_prob(p, "probability of tag '" + tag + "'");
      total += prob;
      d.unfactored.emplace_back(tag, prob);
    }
    if (total > 1.0 + kNormalizationTolerance)
      throw NormalizationError("unfactored probabilities sum to " + std::to_string(total));
    sort_unfactored(d.unfactored);
  }
  auto feats = t.find("feats");
  if (feats != t.end() && !feats->is_object()) throw FormatError("'feats' must be an object");
  for (const auto& f : schema.features()) {
    if (feats == t.end() || !feats->contains(f.name)) continue;
    const json& vec = (*feats)[f.name];
    if (!vec.is_object()) throw FormatError("distribution of '" + f.name + "' must be an object");
    std::map<std::string, double> probs;
    for (const auto& v : f.values) probs[v] = 0.0;
    double total = 0.0;
    for (const auto& [value, p] : vec.items()) {
      if (!f.has_value(value)) throw FormatError("invalid value '" + value + "' for feature '" + f.name + "'");
      double prob = read_prob(p, "probability of " + f.name + "=" + value);
      probs[value] = prob;
      total += prob;
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance)
      throw NormalizationError("distribution of '" + f.name + "' sums to " + std::to_string(total));
    // rounding residue in written files is not worth reporting
    if (std::abs(total - 1.0) > 1e-9) ++report.renormalized;
    if (total != 1.0)
      for (auto& [_, p] : probs) p /= total;
    d.per_feature.emplace(f.name, std::move(probs));
  }
  if (feats != t.end())
    for (const auto& [name, _] : feats->items())
      if (!schema.has_feature(name)) throw FormatError("unknown feature '" + name + "'");
  if (d.per_feature.size() != schema.size()) {
    if (d.unfactored.empty()) throw FormatError("token is missing per-feature distributions");
    FeatureDistribution marg = d;
    derive_marginals(marg, schema);
    for (auto& [name, vec] : marg.per_feature) d.per_feature.emplace(name, std::move(vec));
  }
  return d;
}

}  // namespace

std::vector<SentenceDistributions> parse_distributions(std::string_view text, const FeatureSchema& schema,
                                                       DistributionLoadReport* report) {
  DistributionLoadReport local;
  std::vector<SentenceDistributions> out;
  std::size_t start = 0, lineno = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(std::string("malformed record: ") + e.what(), lineno);
    }
    try {
      if (!rec.is_object() || !rec.contains("id") || !rec.contains("tokens") || !rec["tokens"].is_array())
        throw FormatError("record needs 'id' and 'tokens'");
      SentenceDistributions s;
      s.id = rec["id"].is_string() ? rec["id"].get<std::string>() : rec["id"].dump();
      for (const auto& t : rec["tokens"]) {
        if (!t.is_object()) throw FormatError("token must be an object");
        s.raw.push_back(t.contains("raw") && t["raw"].is_string() ? t["raw"].get<std::string>() : std::string());
        s.tokens.push_back(token_from_json(t, schema, local));
        ++local.tokens;
      }
      out.push_back(std::move(s));
      ++local.sentences;
    } catch (const NormalizationError& e) {
      throw NormalizationError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(e.what(), lineno);
    }
  }
  if (report) *report = local;
  return out;
}

std::vector<std::vector<FeatureDistribution>> load_external_distributions(const std::filesystem::path& path,
                                                                          const FeatureSchema& schema,
                                                                          const Corpus& corpus,
                                                                          DistributionLoadReport* report) {
  auto sentences = parse_distributions(read_file(path), schema, report);
  if (sentences.size() != corpus.sentences.size())
    throw AlignmentError("distribution file has " + std::to_string(sentences.size()) + " sentences, corpus has " +
                         std::to_string(corpus.sentences.size()));
  std::vector<std::vector<FeatureDistribution>> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& gold = corpus.sentences[i];
    auto& s = sentences[i];
    if (s.id != gold.id)
      throw AlignmentError("sentence " + std::to_string(i) + ": id '" + s.id + "' does not match corpus id '" +
                           gold.id + "'");
    if (s.tokens.size() != gold.tokens.size())
      throw AlignmentError("sentence '" + s.id + "': " + std::to_string(s.tokens.size()) +
                           " distributions for " + std::to_string(gold.tokens.size()) + " tokens");
    for (std::size_t k = 0; k < s.raw.size(); ++k)
      if (!s.raw[k].empty() && s.raw[k] != gold.tokens[k].raw)
        throw AlignmentError("sentence '" + s.id + "' token " + std::to_string(k) + ": '" + s.raw[k] +
                             "' vs corpus '" + gold.tokens[k].raw + "'");
    out.push_back(std::move(s.tokens));
  }
  return out;
}

}  // namespace morphdis
