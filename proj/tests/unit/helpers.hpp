#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "morphdis/corpus.hpp"
#include "morphdis/schema.hpp"
#include "morphdis/util.hpp"

namespace testutil {

namespace fs = std::filesystem;

// Fresh scratch directory per test name and process.
inline fs::path temp_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("morphdis-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Small schema used where the shipped ones would make fixtures unreadable.
inline morphdis::FeatureSchema toy_schema() {
  return morphdis::FeatureSchema("toy", "1.0",
                                 {{"pos", {"adj", "noun", "prep", "verb"}, "noun"},
                                  {"gen", {"f", "m", "na"}, "na"},
                                  {"num", {"na", "p", "s"}, "na"},
                                  {"prc1", {"0", "bi_prep", "li_prep"}, "0"},
                                  {"enc0", {"0", "3ms_poss"}, "0"}});
}

inline morphdis::Analysis analysis(const morphdis::FeatureSchema& schema, const morphdis::FeatureBundle& feats,
                                   std::string lex = "UNK", std::string diac = "UNK") {
  morphdis::Analysis a;
  a.features = schema.complete(feats);
  a.lex = std::move(lex);
  a.diac = std::move(diac);
  return a;
}

inline morphdis::Sentence sentence(std::string id,
                                   const std::vector<std::pair<std::string, morphdis::Analysis>>& tokens) {
  morphdis::Sentence s;
  s.id = std::move(id);
  for (const auto& [raw, a] : tokens) s.tokens.push_back({raw, std::nullopt, a});
  return s;
}

inline morphdis::Corpus corpus(const morphdis::FeatureSchema& schema, std::vector<morphdis::Sentence> sentences,
                               morphdis::Split split = morphdis::Split::kTrain) {
  morphdis::Corpus c;
  c.schema_ref = schema.variant();
  c.sentences = std::move(sentences);
  c.split = split;
  return c;
}

inline morphdis::FeatureBundle random_bundle(morphdis::Rng& rng, const morphdis::FeatureSchema& schema) {
  morphdis::FeatureBundle b;
  for (const auto& f : schema.features()) b[f.name] = f.values[rng.below(f.values.size())];
  return b;
}

}  // namespace testutil
