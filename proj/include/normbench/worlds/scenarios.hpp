#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "normbench/engine/types.hpp"

namespace normbench::worlds {

// Every action carries exactly three natural-language elaborations; a step's
// descriptive text is drawn from them.
struct ElaborationSet {
  std::string action_id;
  std::array<std::string, 3> phrases;
};

struct ScenarioBundle {
  std::string name;
  engine::WorldSpec spec;
  std::vector<ElaborationSet> elaborations;  // aligned with spec.actions
  std::map<std::string, std::string> label_overrides;  // action id -> label
  std::vector<std::string> misread_sentences;  // phrases a classifier gets backwards

  const std::array<std::string, 3>& phrases_of(int action_index) const {
    return elaborations[static_cast<size_t>(action_index)].phrases;
  }
};

// Phrase selection: uniform over the three phrases, or pinned to one index.
struct PhraseMode {
  bool uniform = true;
  int fixed_index = 0;

  static PhraseMode Uniform() { return {true, 0}; }
  static PhraseMode Fixed(int k) { return {false, k}; }
};

// Returns the bundled scenario. Accepted names: playground, superhero,
// clerk. data_dir empty means: $NORMBENCH_DATA if set, else the path baked in
// at build time.
ScenarioBundle scenario(const std::string& name, const std::string& data_dir = "");

std::string default_data_dir();

// Draws one elaboration phrase for an action. Uniform mode consumes one draw
// from rng; fixed mode is deterministic and validates the index.
const std::string& elaborate(const ScenarioBundle& bundle, int action_index,
                             const PhraseMode& mode, engine::Rng& rng);

}  // namespace normbench::worlds
