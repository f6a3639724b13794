#include "normbench/prior/prior.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "normbench/engine/rng.hpp"

namespace normbench::prior {

using engine::ParseError;
using engine::ValidationError;
using nlohmann::json;

namespace {

// Light suffix stemmer, enough to collapse the inflections that appear in
// action elaborations (helps/helped/helping -> help).
std::string stem(std::string word) {
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  auto ends_with = [&](const char* suffix) {
    const size_t n = std::strlen(suffix);
    return word.size() > n + 2 && word.compare(word.size() - n, n, suffix) == 0;
  };
  if (ends_with("ing")) word.erase(word.size() - 3);
  else if (ends_with("ied")) { word.erase(word.size() - 3); word.push_back('y'); }
  else if (ends_with("ed")) word.erase(word.size() - 2);
  else if (ends_with("ies")) { word.erase(word.size() - 3); word.push_back('y'); }
  else if (ends_with("es")) word.erase(word.size() - 2);
  else if (ends_with("s") && !ends_with("ss")) word.pop_back();
  // Drop a trailing e so "shove"/"shoved" and "share"/"sharing" agree.
  if (word.size() > 3 && word.back() == 'e') word.pop_back();
  return word;
}

std::vector<std::string> tokenize_stems(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalpha(c) || c == '\'') {
      current.push_back(static_cast<char>(c));
    } else if (!current.empty()) {
      out.push_back(stem(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(stem(current));
  return out;
}

}  // namespace

LexiconPrior::LexiconPrior(double base_norm, double base_nonnorm)
    : base_norm_(base_norm), base_nonnorm_(base_nonnorm) {}

void LexiconPrior::add_cue(const std::string& term, bool normative, double weight) {
  std::vector<std::string> stems = tokenize_stems(term);
  if (stems.empty()) throw ValidationError("lexicon cue has no tokens: '" + term + "'");
  std::pair<double, double> w{normative ? weight : 0.0, normative ? 0.0 : weight};
  if (stems.size() == 1) {
    auto& slot = single_[stems[0]];
    slot.first += w.first;
    slot.second += w.second;
  } else {
    multi_.emplace_back(std::move(stems), w);
  }
}

Valence LexiconPrior::classify(const std::string& sentence) const {
  if (sentence.empty()) throw ValidationError("classify: empty sentence");
  const std::vector<std::string> stems = tokenize_stems(sentence);
  Valence v{base_norm_, base_nonnorm_};
  for (const auto& s : stems) {
    auto it = single_.find(s);
    if (it != single_.end()) {
      v.l_norm += it->second.first;
      v.l_nonnorm += it->second.second;
    }
  }
  for (const auto& [pattern, w] : multi_) {
    if (pattern.size() > stems.size()) continue;
    for (size_t i = 0; i + pattern.size() <= stems.size(); ++i) {
      if (std::equal(pattern.begin(), pattern.end(), stems.begin() + i)) {
        v.l_norm += w.first;
        v.l_nonnorm += w.second;
      }
    }
  }
  return v;
}

TablePrior::TablePrior(std::unordered_map<std::string, Valence> entries)
    : entries_(std::move(entries)) {}

Valence TablePrior::classify(const std::string& sentence) const {
  if (sentence.empty()) throw ValidationError("classify: empty sentence");
  auto it = entries_.find(sentence);
  if (it == entries_.end())
    throw ValidationError("logit table has no entry for sentence: '" + sentence + "'");
  return it->second;
}

std::vector<std::string> TablePrior::missing_for(const worlds::ScenarioBundle& bundle) const {
  std::vector<std::string> missing;
  for (const auto& set : bundle.elaborations)
    for (const auto& phrase : set.phrases)
      if (!entries_.count(phrase)) missing.push_back(phrase);
  return missing;
}

OraclePrior::OraclePrior(const worlds::ScenarioBundle& bundle, const OracleParams& params)
    : params_(params) {
  std::unordered_map<std::string, bool> flips;
  if (params.use_flip_set)
    for (const auto& s : bundle.misread_sentences) flips[s] = true;
  for (size_t ai = 0; ai < bundle.elaborations.size(); ++ai) {
    const engine::TagMask tags = bundle.spec.actions[ai].tags;
    Class cls = Class::neutral;
    if (engine::has_tag(tags, engine::Tag::normative) ||
        engine::has_tag(tags, engine::Tag::altruistic)) {
      cls = Class::positive;
    } else if (engine::has_tag(tags, engine::Tag::non_normative)) {
      cls = Class::negative;
    }
    for (const auto& phrase : bundle.elaborations[ai].phrases)
      bindings_[phrase] = Binding{cls, flips.count(phrase) > 0};
  }
}

Valence OraclePrior::classify(const std::string& sentence) const {
  if (sentence.empty()) throw ValidationError("classify: empty sentence");
  auto it = bindings_.find(sentence);
  if (it == bindings_.end())
    throw ValidationError("oracle prior: sentence not bound to any action: '" + sentence + "'");

  Valence v;
  switch (it->second.cls) {
    case Class::positive:
      v = {params_.magnitude, -params_.magnitude};
      break;
    case Class::negative:
      v = {-params_.magnitude, params_.magnitude};
      break;
    case Class::neutral:
      v = {params_.neutral_base + params_.neutral_lean,
           params_.neutral_base - params_.neutral_lean};
      // Neutral text is where a real classifier wobbles; tagged classes keep
      // their exact confidences.
      if (params_.noise_sigma > 0.0) {
        engine::Rng noise(
            engine::hash_combine(engine::hash_string(sentence), params_.noise_seed));
        v.l_nonnorm += params_.noise_sigma * noise.normal();
      }
      break;
  }
  if (it->second.flipped) std::swap(v.l_norm, v.l_nonnorm);
  return v;
}

std::shared_ptr<TablePrior> load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open logit table: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
    throw ParseError(path + ": missing or unsupported schema_version");
  if (!j.contains("entries") || !j["entries"].is_array())
    throw ParseError(path + ": missing 'entries' array");
  std::unordered_map<std::string, Valence> entries;
  for (const auto& ej : j["entries"]) {
    if (!ej.contains("sentence") || !ej.contains("l_norm") || !ej.contains("l_nonnorm"))
      throw ParseError(path + ": entry needs sentence, l_norm, l_nonnorm");
    const std::string sentence = ej["sentence"].get<std::string>();
    Valence v{ej["l_norm"].get<double>(), ej["l_nonnorm"].get<double>()};
    if (!std::isfinite(v.l_norm) || !std::isfinite(v.l_nonnorm))
      throw ParseError(path + ": non-finite logits for '" + sentence + "'");
    if (!entries.emplace(sentence, v).second)
      throw ParseError(path + ": duplicate sentence key '" + sentence + "'");
  }
  return std::make_shared<TablePrior>(std::move(entries));
}

std::shared_ptr<LexiconPrior> load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open lexicon: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
    throw ParseError(path + ": missing or unsupported schema_version");
  auto model = std::make_shared<LexiconPrior>(j.value("base_norm", 0.0),
                                              j.value("base_nonnorm", 0.0));
  for (const auto& cj : j.value("cues", json::array())) {
    const std::string cls = cj.at("class").get<std::string>();
    if (cls != "norm" && cls != "nonnorm")
      throw ParseError(path + ": cue class must be 'norm' or 'nonnorm'");
    model->add_cue(cj.at("term").get<std::string>(), cls == "norm",
                   cj.at("weight").get<double>());
  }
  return model;
}

}  // namespace normbench::prior
