#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "normbench/engine/types.hpp"

namespace normbench::engine {

// Canonical state identity for graph search. Step count and the rng stream
// are excluded: they never change which actions are admissible or what an
// action does, beyond the episode-length cutoff.
struct StateKey {
  int agent_room;
  uint64_t inventory;
  uint64_t flags;
  uint64_t completed;
  uint64_t invalidated;
  std::vector<int8_t> item_locations;

  bool operator==(const StateKey&) const = default;
};

struct StateNode {
  StateKey key;
  bool terminal = false;
  bool failed = false;
  bool success = false;  // terminal via the completion condition
};

struct StateEdge {
  int from = -1;
  int to = -1;
  int action = -1;
  double reward = 0.0;
};

struct StateGraph {
  std::vector<StateNode> nodes;  // node 0 is the initial state
  std::vector<StateEdge> edges;
  bool complete = true;  // false when the node cap stopped expansion

  // Action indices along a shortest path from the initial state to a success
  // terminal; empty when no success state was found.
  std::vector<int> shortest_success;
};

struct ExploreOptions {
  size_t cap = 200000;  // maximum number of nodes to expand
  // When set, only actions accepted by the filter are explored.
  std::function<bool(const ActionDef&)> action_filter;
};

// Breadth-first enumeration of reachable states. Stochastic penalty hooks are
// expanded as one edge per possible invalidation victim.
StateGraph enumerate_reachable(const WorldSpec& spec, const ExploreOptions& options = {});

// Maximum total reward over any path from the initial state to a success
// terminal, or nullopt when no success state is reachable. Exact: positive
// rewards strictly grow the completed-quest set, so every cycle in the graph
// is reward-free and the DP over strongly connected components terminates.
std::optional<double> max_success_reward(const StateGraph& graph);

// Edge-list export (JSON text) in the same structured format as world specs.
std::string graph_to_json(const StateGraph& graph, const WorldSpec& spec);

}  // namespace normbench::engine
