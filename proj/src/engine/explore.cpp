#include "normbench/engine/explore.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>

#include <json.hpp>

#include "normbench/engine/world.hpp"

namespace normbench::engine {

namespace {

struct KeyHash {
  size_t operator()(const StateKey& k) const {
    uint64_t h = hash_combine(static_cast<uint64_t>(k.agent_room), k.inventory);
    h = hash_combine(h, k.flags);
    h = hash_combine(h, k.completed);
    h = hash_combine(h, k.invalidated);
    for (int8_t loc : k.item_locations) h = hash_combine(h, static_cast<uint64_t>(loc) + 7);
    return static_cast<size_t>(h);
  }
};

StateKey key_of(const WorldState& s) {
  return StateKey{s.agent_room, s.inventory, s.flags, s.completed_quests, s.invalidated_quests,
                  s.item_locations};
}

WorldState state_of(const WorldSpec& spec, const StateKey& k) {
  WorldState s;
  s.agent_room = k.agent_room;
  s.inventory = k.inventory;
  s.flags = k.flags;
  s.completed_quests = k.completed;
  s.invalidated_quests = k.invalidated;
  s.item_locations = k.item_locations;
  (void)spec;
  return s;
}

// One deterministic transition with a forced penalty-hook victim (or none).
// Mirrors step()'s ordering exactly, minus the step-count cutoff.
struct Successor {
  StateKey key;
  double reward = 0.0;
  bool done = false;
  bool failed = false;
  bool success = false;
};

Successor apply_forced(const WorldSpec& spec, const StateKey& from, int action_index,
                       int forced_victim) {
  WorldState s = state_of(spec, from);
  const ActionDef& action = spec.actions[action_index];
  for (const auto& e : action.effects) {
    switch (e.kind) {
      case Effect::Kind::move_to: s.agent_room = e.a; break;
      case Effect::Kind::take:
        s.inventory |= (1ull << e.a);
        s.item_locations[e.a] = -1;
        break;
      case Effect::Kind::set_flag: s.flags |= (1ull << e.a); break;
      case Effect::Kind::clear_flag: s.flags &= ~(1ull << e.a); break;
    }
  }
  if (forced_victim >= 0) s.invalidated_quests |= (1ull << forced_victim);

  Successor out;
  for (size_t q = 0; q < spec.quests.size(); ++q) {
    const bool open =
        !((s.completed_quests >> q) & 1u) && !((s.invalidated_quests >> q) & 1u);
    if (open) {
      bool holds = true;
      for (const auto& p : spec.quests[q].condition)
        if (!predicate_holds(spec, s, p)) { holds = false; break; }
      if (holds) {
        s.completed_quests |= (1ull << q);
        out.reward += spec.quests[q].reward;
      }
    }
  }
  for (const auto& p : spec.failure_states) {
    if (predicate_holds(spec, s, p)) {
      out.done = true;
      out.failed = true;
      break;
    }
  }
  if (out.failed) {
    out.reward = 0.0;
  } else {
    bool completed = true;
    for (const auto& p : spec.completion)
      if (!predicate_holds(spec, s, p)) { completed = false; break; }
    if (completed) {
      out.done = true;
      out.success = true;
      out.reward += spec.final_reward;
    }
  }
  out.key = key_of(s);
  return out;
}

std::vector<int> hook_victims(const WorldSpec& spec, const StateKey& from, int action_index) {
  // Victim set of the (single) invalidate-random-subgoal hook, if triggered.
  std::vector<int> victims;
  const ActionDef& action = spec.actions[action_index];
  bool triggered = false;
  for (const auto& hook : spec.penalty_hooks)
    if (has_tag(action.tags, hook.trigger)) triggered = true;
  if (!triggered) return victims;
  for (size_t q = 0; q < spec.quests.size(); ++q) {
    const bool open = !((from.completed >> q) & 1u) && !((from.invalidated >> q) & 1u);
    if (open && spec.quests[q].reward > 0.0) victims.push_back(static_cast<int>(q));
  }
  return victims;
}

}  // namespace

StateGraph enumerate_reachable(const WorldSpec& spec, const ExploreOptions& options) {
  StateGraph graph;
  std::unordered_map<StateKey, int, KeyHash> index;

  auto [init_state, init_obs] = reset(spec, 0);
  (void)init_obs;
  StateKey init = key_of(init_state);
  index.emplace(init, 0);
  graph.nodes.push_back({init, false, false, false});

  // parent edge per node (for shortest-path reconstruction): (parent, action)
  std::vector<std::pair<int, int>> parent{{-1, -1}};
  std::deque<int> frontier{0};
  int success_node = -1;

  while (!frontier.empty()) {
    const int ni = frontier.front();
    frontier.pop_front();
    if (graph.nodes[ni].terminal) continue;

    WorldState s = state_of(spec, graph.nodes[ni].key);
    for (size_t ai = 0; ai < spec.actions.size(); ++ai) {
      if (!action_admissible(spec, s, static_cast<int>(ai))) continue;
      if (options.action_filter && !options.action_filter(spec.actions[ai])) continue;

      std::vector<int> victims = hook_victims(spec, graph.nodes[ni].key, static_cast<int>(ai));
      std::vector<int> forced;
      if (victims.empty())
        forced.push_back(-1);
      else
        forced = victims;  // branch per possible invalidation outcome

      for (int victim : forced) {
        Successor succ = apply_forced(spec, graph.nodes[ni].key, static_cast<int>(ai), victim);
        auto [it, inserted] = index.emplace(succ.key, static_cast<int>(graph.nodes.size()));
        if (inserted) {
          if (graph.nodes.size() >= options.cap) {
            index.erase(it);
            graph.complete = false;
            continue;
          }
          graph.nodes.push_back({succ.key, succ.done, succ.failed, succ.success});
          parent.emplace_back(ni, static_cast<int>(ai));
          frontier.push_back(it->second);
          if (succ.success && success_node < 0) success_node = it->second;
        }
        graph.edges.push_back({ni, it->second, static_cast<int>(ai), succ.reward});
      }
    }
  }

  if (success_node >= 0) {
    std::vector<int> path;
    for (int n = success_node; parent[n].first >= 0; n = parent[n].first)
      path.push_back(parent[n].second);
    std::reverse(path.begin(), path.end());
    graph.shortest_success = std::move(path);
  }
  return graph;
}

std::optional<double> max_success_reward(const StateGraph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  if (n == 0) return std::nullopt;

  std::vector<std::vector<int>> out_edges(n);
  for (size_t e = 0; e < graph.edges.size(); ++e)
    out_edges[graph.edges[e].from].push_back(static_cast<int>(e));

  // Tarjan SCC (iterative). Positive-reward edges always leave their
  // component, so the condensation DP below is exact.
  std::vector<int> comp(n, -1), low(n, 0), disc(n, -1), stack;
  std::vector<char> on_stack(n, 0);
  int timer = 0, ncomp = 0;
  struct Frame { int node; size_t edge; };
  for (int root = 0; root < n; ++root) {
    if (disc[root] != -1) continue;
    std::vector<Frame> call{{root, 0}};
    disc[root] = low[root] = timer++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < out_edges[f.node].size()) {
        int to = graph.edges[out_edges[f.node][f.edge++]].to;
        if (disc[to] == -1) {
          disc[to] = low[to] = timer++;
          stack.push_back(to);
          on_stack[to] = 1;
          call.push_back({to, 0});
        } else if (on_stack[to]) {
          low[f.node] = std::min(low[f.node], disc[to]);
        }
      } else {
        if (low[f.node] == disc[f.node]) {
          while (true) {
            int v = stack.back();
            stack.pop_back();
            on_stack[v] = 0;
            comp[v] = ncomp;
            if (v == f.node) break;
          }
          ++ncomp;
        }
        int done_node = f.node;
        call.pop_back();
        if (!call.empty())
          low[call.back().node] = std::min(low[call.back().node], low[done_node]);
      }
    }
  }

  // Tarjan numbers components in reverse topological order: every edge goes
  // from a higher comp id to a lower-or-equal one. DP in increasing comp id.
  std::vector<double> best(ncomp, -1.0);  // best reward from component to success
  for (int i = 0; i < n; ++i)
    if (graph.nodes[i].success) best[comp[i]] = 0.0;

  std::vector<std::vector<int>> comp_edges(ncomp);
  for (size_t e = 0; e < graph.edges.size(); ++e) {
    int cf = comp[graph.edges[e].from];
    comp_edges[cf].push_back(static_cast<int>(e));
  }
  for (int c = 0; c < ncomp; ++c) {
    for (int ei : comp_edges[c]) {
      const StateEdge& edge = graph.edges[ei];
      int ct = comp[edge.to];
      if (best[ct] < 0.0) continue;
      double candidate = edge.reward + best[ct];
      if (candidate > best[c]) best[c] = candidate;
    }
  }
  if (best[comp[0]] < 0.0) return std::nullopt;
  return best[comp[0]];
}

std::string graph_to_json(const StateGraph& graph, const WorldSpec& spec) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["world"] = spec.name;
  j["complete"] = graph.complete;
  j["node_count"] = graph.nodes.size();
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& node : graph.nodes) {
    nlohmann::json nj;
    nj["room"] = spec.rooms[node.key.agent_room].id;
    nj["terminal"] = node.terminal;
    nj["failed"] = node.failed;
    nj["success"] = node.success;
    nodes.push_back(std::move(nj));
  }
  j["nodes"] = std::move(nodes);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& edge : graph.edges) {
    edges.push_back({{"from", edge.from},
                     {"to", edge.to},
                     {"action", spec.actions[edge.action].id},
                     {"reward", edge.reward}});
  }
  j["edges"] = std::move(edges);
  nlohmann::json path = nlohmann::json::array();
  for (int a : graph.shortest_success) path.push_back(spec.actions[a].id);
  j["shortest_success"] = std::move(path);
  return j.dump(2);
}

}  // namespace normbench::engine
