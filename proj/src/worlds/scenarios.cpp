#include "normbench/worlds/scenarios.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "normbench/engine/world.hpp"

#ifndef NORMBENCH_DATA_DIR
#define NORMBENCH_DATA_DIR "data"
#endif

namespace normbench::worlds {

using engine::ParseError;
using engine::ValidationError;
using nlohmann::json;

std::string default_data_dir() {
  if (const char* env = std::getenv("NORMBENCH_DATA")) return env;
  return NORMBENCH_DATA_DIR;
}

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open data file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void check_schema(const json& j, const std::string& path) {
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
    throw ParseError(path + ": missing or unsupported schema_version");
}

}  // namespace

ScenarioBundle scenario(const std::string& name, const std::string& data_dir) {
  static const std::set<std::string> known = {"playground", "superhero", "clerk"};
  if (!known.count(name))
    throw ValidationError("unknown scenario '" + name +
                          "' (expected playground, superhero or clerk)");
  const std::string root = data_dir.empty() ? default_data_dir() : data_dir;
  const std::string dir = root + "/" + name;

  ScenarioBundle bundle;
  bundle.name = name;
  bundle.spec = engine::load_world_file(dir + "/world.json");

  const std::string elab_path = dir + "/elaborations.json";
  json ej = load_json_file(elab_path);
  check_schema(ej, elab_path);
  if (!ej.contains("elaborations") || !ej["elaborations"].is_object())
    throw ParseError(elab_path + ": missing 'elaborations' object");

  bundle.elaborations.resize(bundle.spec.actions.size());
  std::vector<char> covered(bundle.spec.actions.size(), 0);
  std::set<std::string> seen_phrases;
  for (const auto& [action_id, phrases] : ej["elaborations"].items()) {
    auto it = bundle.spec.action_by_id.find(action_id);
    if (it == bundle.spec.action_by_id.end())
      throw ValidationError(elab_path + ": elaborations for undefined action '" + action_id + "'");
    if (!phrases.is_array() || phrases.size() != 3)
      throw ValidationError(elab_path + ": action '" + action_id +
                            "' must have exactly 3 phrases");
    ElaborationSet set;
    set.action_id = action_id;
    for (size_t k = 0; k < 3; ++k) {
      set.phrases[k] = phrases[k].get<std::string>();
      if (set.phrases[k].empty())
        throw ValidationError(elab_path + ": empty phrase for action '" + action_id + "'");
      if (!seen_phrases.insert(set.phrases[k]).second)
        throw ValidationError(elab_path + ": duplicate phrase '" + set.phrases[k] + "'");
    }
    bundle.elaborations[it->second] = std::move(set);
    covered[it->second] = 1;
  }
  for (size_t i = 0; i < covered.size(); ++i)
    if (!covered[i])
      throw ValidationError(elab_path + ": no elaborations for action '" +
                            bundle.spec.actions[i].id + "'");

  const std::string labels_path = dir + "/labels.json";
  json lj = load_json_file(labels_path);
  check_schema(lj, labels_path);
  if (lj.contains("overrides")) {
    for (const auto& [action_id, label] : lj["overrides"].items()) {
      if (!bundle.spec.action_by_id.count(action_id))
        throw ValidationError(labels_path + ": override for undefined action '" + action_id + "'");
      bundle.label_overrides[action_id] = label.get<std::string>();
    }
  }
  if (lj.contains("misread_sentences")) {
    for (const auto& s : lj["misread_sentences"]) {
      const std::string sentence = s.get<std::string>();
      if (!seen_phrases.count(sentence))
        throw ValidationError(labels_path + ": misread sentence is not a bundled phrase: '" +
                              sentence + "'");
      bundle.misread_sentences.push_back(sentence);
    }
  }
  return bundle;
}

const std::string& elaborate(const ScenarioBundle& bundle, int action_index,
                             const PhraseMode& mode, engine::Rng& rng) {
  if (action_index < 0 || action_index >= static_cast<int>(bundle.elaborations.size()))
    throw ValidationError("elaborate: action index out of range");
  const auto& phrases = bundle.elaborations[static_cast<size_t>(action_index)].phrases;
  if (mode.uniform) return phrases[rng.uniform_int(3)];
  if (mode.fixed_index < 0 || mode.fixed_index > 2)
    throw ValidationError("elaborate: fixed phrase index " + std::to_string(mode.fixed_index) +
                          " out of range [0,2]");
  return phrases[static_cast<size_t>(mode.fixed_index)];
}

}  // namespace normbench::worlds
