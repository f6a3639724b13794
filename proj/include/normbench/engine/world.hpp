#pragma once

#include <string>
#include <utility>
#include <vector>

#include "normbench/engine/types.hpp"

namespace normbench::engine {

// Parse and validate a world definition (JSON text). Throws ParseError on
// malformed input and ValidationError when an invariant is violated.
WorldSpec load_world(const std::string& spec_text);
WorldSpec load_world_file(const std::string& path);

bool predicate_holds(const WorldSpec& spec, const WorldState& state, const Predicate& p);
bool action_admissible(const WorldSpec& spec, const WorldState& state, int action_index);
std::vector<int> admissible_actions(const WorldSpec& spec, const WorldState& state);

std::pair<WorldState, Observation> reset(const WorldSpec& spec, uint64_t seed);

// Executes one admissible action. Throws std::invalid_argument when the
// action's preconditions do not hold (an agent/mask bug, never normal play)
// and std::logic_error when stepping a terminal state.
StepOutcome step(const WorldSpec& spec, WorldState& state, int action_index);

Observation observe(const WorldSpec& spec, const WorldState& state);

// Fixed-length feature vector for a policy network. Length depends only on
// the spec; throws ValidationError when the observation names something the
// spec does not define.
std::vector<double> encode_observation(const Observation& obs, const WorldSpec& spec);

}  // namespace normbench::engine
