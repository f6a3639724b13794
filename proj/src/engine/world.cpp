#include "normbench/engine/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include <json.hpp>

namespace normbench::engine {

using nlohmann::json;

Tag tag_from_string(const std::string& s) {
  if (s == "task") return Tag::task;
  if (s == "normative") return Tag::normative;
  if (s == "non-normative") return Tag::non_normative;
  if (s == "altruistic") return Tag::altruistic;
  if (s == "failure-inducing") return Tag::failure_inducing;
  if (s == "neutral") return Tag::neutral;
  throw ParseError("unknown tag: '" + s + "'");
}

const char* tag_to_string(Tag t) {
  switch (t) {
    case Tag::task: return "task";
    case Tag::normative: return "normative";
    case Tag::non_normative: return "non-normative";
    case Tag::altruistic: return "altruistic";
    case Tag::failure_inducing: return "failure-inducing";
    case Tag::neutral: return "neutral";
  }
  return "?";
}

int WorldSpec::action_index(const std::string& id) const {
  auto it = action_by_id.find(id);
  if (it == action_by_id.end()) throw ValidationError("unknown action id: '" + id + "'");
  return it->second;
}

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

std::string req_string(const json& j, const char* field, const std::string& where) {
  if (!j.contains(field) || !j[field].is_string())
    parse_fail(where, std::string("missing or non-string field '") + field + "'");
  return j[field].get<std::string>();
}

double req_number(const json& j, const char* field, const std::string& where) {
  if (!j.contains(field) || !j[field].is_number())
    parse_fail(where, std::string("missing or non-numeric field '") + field + "'");
  return j[field].get<double>();
}

int lookup(const std::unordered_map<std::string, int>& table, const std::string& key,
           const std::string& kind, const std::string& where) {
  auto it = table.find(key);
  if (it == table.end())
    throw ValidationError(where + ": references undefined " + kind + " '" + key + "'");
  return it->second;
}

Predicate parse_predicate(const json& j, const WorldSpec& spec, const std::string& where) {
  if (!j.is_object() || j.size() != 1)
    parse_fail(where, "predicate must be a single-key object");
  const auto& key = j.begin().key();
  const auto& val = j.begin().value();
  Predicate p{};
  if (key == "in_room") {
    p.kind = Predicate::Kind::in_room;
    p.a = lookup(spec.room_by_id, val.get<std::string>(), "room", where);
  } else if (key == "has_item") {
    p.kind = Predicate::Kind::has_item;
    p.a = lookup(spec.item_by_id, val.get<std::string>(), "item", where);
  } else if (key == "not_has_item") {
    p.kind = Predicate::Kind::not_has_item;
    p.a = lookup(spec.item_by_id, val.get<std::string>(), "item", where);
  } else if (key == "item_at") {
    if (!val.is_array() || val.size() != 2) parse_fail(where, "item_at expects [item, room]");
    p.kind = Predicate::Kind::item_at;
    p.a = lookup(spec.item_by_id, val[0].get<std::string>(), "item", where);
    p.b = lookup(spec.room_by_id, val[1].get<std::string>(), "room", where);
  } else if (key == "flag") {
    p.kind = Predicate::Kind::flag_set;
    p.a = lookup(spec.flag_by_id, val.get<std::string>(), "flag", where);
  } else if (key == "not_flag") {
    p.kind = Predicate::Kind::flag_clear;
    p.a = lookup(spec.flag_by_id, val.get<std::string>(), "flag", where);
  } else {
    parse_fail(where, "unknown predicate '" + key + "'");
  }
  return p;
}

Effect parse_effect(const json& j, const WorldSpec& spec, const std::string& where) {
  if (!j.is_object() || j.size() != 1) parse_fail(where, "effect must be a single-key object");
  const auto& key = j.begin().key();
  const auto& val = j.begin().value();
  Effect e{};
  if (key == "move_to") {
    e.kind = Effect::Kind::move_to;
    e.a = lookup(spec.room_by_id, val.get<std::string>(), "room", where);
  } else if (key == "take") {
    e.kind = Effect::Kind::take;
    e.a = lookup(spec.item_by_id, val.get<std::string>(), "item", where);
  } else if (key == "set_flag") {
    e.kind = Effect::Kind::set_flag;
    e.a = lookup(spec.flag_by_id, val.get<std::string>(), "flag", where);
  } else if (key == "clear_flag") {
    e.kind = Effect::Kind::clear_flag;
    e.a = lookup(spec.flag_by_id, val.get<std::string>(), "flag", where);
  } else {
    parse_fail(where, "unknown effect '" + key + "'");
  }
  return e;
}

std::vector<Predicate> parse_predicates(const json& j, const WorldSpec& spec,
                                        const std::string& where) {
  if (!j.is_array()) parse_fail(where, "expected an array of predicates");
  std::vector<Predicate> out;
  for (const auto& p : j) out.push_back(parse_predicate(p, spec, where));
  return out;
}

const std::string& opposite_direction(const std::string& dir) {
  static const std::map<std::string, std::string> opp = {
      {"north", "south"}, {"south", "north"}, {"east", "west"},
      {"west", "east"},   {"up", "down"},     {"down", "up"},
  };
  auto it = opp.find(dir);
  if (it == opp.end()) throw ValidationError("unknown direction '" + dir + "'");
  return it->second;
}

void validate_connectivity(const WorldSpec& spec) {
  if (spec.rooms.empty())
    throw ValidationError("rooms: connected graph required (room list is empty)");
  std::vector<char> seen(spec.rooms.size(), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    int r = q.front();
    q.pop();
    for (const auto& [dir, nbr] : spec.rooms[r].exits) {
      if (!seen[nbr]) {
        seen[nbr] = 1;
        q.push(nbr);
      }
    }
  }
  for (size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i])
      throw ValidationError("rooms: connected graph required (room '" + spec.rooms[i].id +
                            "' is unreachable)");
  }
}

std::string entity_fact(const std::string& name) { return name + " is here"; }

}  // namespace

WorldSpec load_world(const std::string& spec_text) {
  json j;
  try {
    j = json::parse(spec_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("world spec: ") + e.what());
  }

  WorldSpec spec;
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
    parse_fail("world spec", "missing integer 'schema_version'");
  spec.schema_version = j["schema_version"].get<int>();
  if (spec.schema_version != 1)
    parse_fail("world spec", "unsupported schema_version " + std::to_string(spec.schema_version));
  spec.name = req_string(j, "name", "world spec");

  // Rooms.
  if (!j.contains("rooms") || !j["rooms"].is_array())
    parse_fail("world spec", "missing 'rooms' array");
  for (const auto& rj : j["rooms"]) {
    RoomDef r;
    r.id = req_string(rj, "id", "room");
    r.name = req_string(rj, "name", "room '" + r.id + "'");
    r.description = rj.value("description", r.name);
    if (!spec.room_by_id.emplace(r.id, static_cast<int>(spec.rooms.size())).second)
      throw ValidationError("duplicate room id '" + r.id + "'");
    if (!spec.room_by_name.emplace(r.name, static_cast<int>(spec.rooms.size())).second)
      throw ValidationError("duplicate room name '" + r.name + "'");
    spec.rooms.push_back(std::move(r));
  }
  if (spec.rooms.empty())
    throw ValidationError("rooms: connected graph required (room list is empty)");

  // Exits (second pass, rooms now indexable).
  {
    size_t idx = 0;
    for (const auto& rj : j["rooms"]) {
      RoomDef& r = spec.rooms[idx++];
      if (rj.contains("exits")) {
        if (!rj["exits"].is_object()) parse_fail("room '" + r.id + "'", "'exits' must be an object");
        for (const auto& [dir, dest] : rj["exits"].items()) {
          opposite_direction(dir);  // validates the direction token
          r.exits[dir] = lookup(spec.room_by_id, dest.get<std::string>(), "room",
                                "room '" + r.id + "' exit " + dir);
        }
      }
    }
  }

  // Exit symmetry: a west exit implies the neighbor's east exit back.
  for (size_t i = 0; i < spec.rooms.size(); ++i) {
    for (const auto& [dir, nbr] : spec.rooms[i].exits) {
      const auto& back = opposite_direction(dir);
      auto it = spec.rooms[nbr].exits.find(back);
      if (it == spec.rooms[nbr].exits.end() || it->second != static_cast<int>(i))
        throw ValidationError("asymmetric connection: room '" + spec.rooms[i].id + "' " + dir +
                              " -> '" + spec.rooms[nbr].id + "' lacks the " + back + " return");
    }
  }
  validate_connectivity(spec);

  spec.start_room = lookup(spec.room_by_id, req_string(j, "start_room", "world spec"), "room",
                           "start_room");

  // Items.
  if (j.contains("items")) {
    for (const auto& ij : j["items"]) {
      ItemDef item;
      item.id = req_string(ij, "id", "item");
      item.name = req_string(ij, "name", "item '" + item.id + "'");
      item.location = lookup(spec.room_by_id, req_string(ij, "location", "item '" + item.id + "'"),
                             "room", "item '" + item.id + "'");
      item.portable = ij.value("portable", true);
      if (!spec.item_by_id.emplace(item.id, static_cast<int>(spec.items.size())).second)
        throw ValidationError("duplicate item id '" + item.id + "'");
      if (!spec.entity_by_name.emplace(item.name, static_cast<int>(spec.items.size())).second)
        throw ValidationError("duplicate entity name '" + item.name + "'");
      spec.items.push_back(std::move(item));
    }
  }
  if (spec.items.size() > 64) throw ValidationError("at most 64 items supported");

  // NPCs.
  if (j.contains("npcs")) {
    for (const auto& nj : j["npcs"]) {
      NpcDef npc;
      npc.id = req_string(nj, "id", "npc");
      npc.name = req_string(nj, "name", "npc '" + npc.id + "'");
      npc.location = lookup(spec.room_by_id, req_string(nj, "location", "npc '" + npc.id + "'"),
                            "room", "npc '" + npc.id + "'");
      if (!spec.npc_by_id.emplace(npc.id, static_cast<int>(spec.npcs.size())).second)
        throw ValidationError("duplicate npc id '" + npc.id + "'");
      int entity_index = static_cast<int>(spec.items.size() + spec.npcs.size());
      if (!spec.entity_by_name.emplace(npc.name, entity_index).second)
        throw ValidationError("duplicate entity name '" + npc.name + "'");
      spec.npcs.push_back(std::move(npc));
    }
  }

  // Flags.
  if (j.contains("flags")) {
    for (const auto& fj : j["flags"]) {
      FlagDef f;
      f.id = req_string(fj, "id", "flag");
      f.fact = req_string(fj, "fact", "flag '" + f.id + "'");
      if (f.fact.empty()) throw ValidationError("flag '" + f.id + "' has an empty fact");
      if (!spec.flag_by_id.emplace(f.id, static_cast<int>(spec.flags.size())).second)
        throw ValidationError("duplicate flag id '" + f.id + "'");
      if (!spec.flag_by_fact.emplace(f.fact, static_cast<int>(spec.flags.size())).second)
        throw ValidationError("duplicate flag fact '" + f.fact + "'");
      spec.flags.push_back(std::move(f));
    }
  }
  if (spec.flags.size() > 64) throw ValidationError("at most 64 flags supported");
  for (const auto& item : spec.items)
    if (spec.flag_by_fact.count(entity_fact(item.name)))
      throw ValidationError("flag fact collides with presence fact for '" + item.name + "'");
  for (const auto& npc : spec.npcs)
    if (spec.flag_by_fact.count(entity_fact(npc.name)))
      throw ValidationError("flag fact collides with presence fact for '" + npc.name + "'");

  // Actions.
  if (!j.contains("actions") || !j["actions"].is_array() || j["actions"].empty())
    parse_fail("world spec", "missing non-empty 'actions' array");
  for (const auto& aj : j["actions"]) {
    ActionDef a;
    a.id = req_string(aj, "id", "action");
    const std::string where = "action '" + a.id + "'";
    a.command = req_string(aj, "command", where);
    if (a.command.empty()) throw ValidationError(where + ": empty command text");
    a.reaction = aj.value("reaction", "");
    if (aj.contains("pre")) a.preconditions = parse_predicates(aj["pre"], spec, where);
    if (aj.contains("effects")) {
      if (!aj["effects"].is_array()) parse_fail(where, "'effects' must be an array");
      for (const auto& ej : aj["effects"]) a.effects.push_back(parse_effect(ej, spec, where));
    }
    if (aj.contains("tags")) {
      if (!aj["tags"].is_array()) parse_fail(where, "'tags' must be an array");
      for (const auto& tj : aj["tags"]) a.tags |= tag_bit(tag_from_string(tj.get<std::string>()));
    }
    if (!spec.action_by_id.emplace(a.id, static_cast<int>(spec.actions.size())).second)
      throw ValidationError("duplicate action id '" + a.id + "'");
    spec.actions.push_back(std::move(a));
  }
  if (spec.actions.size() > 64) throw ValidationError("at most 64 actions supported");

  // Quests.
  if (j.contains("quests")) {
    for (const auto& qj : j["quests"]) {
      QuestDef q;
      q.id = req_string(qj, "id", "quest");
      const std::string where = "quest '" + q.id + "'";
      q.condition = parse_predicates(qj.value("condition", json::array()), spec, where);
      if (q.condition.empty()) throw ValidationError(where + ": empty condition");
      q.reward = req_number(qj, "reward", where);
      if (!std::isfinite(q.reward) || q.reward < 0.0)
        throw ValidationError(where + ": reward must be finite and >= 0");
      if (!spec.quest_by_id.emplace(q.id, static_cast<int>(spec.quests.size())).second)
        throw ValidationError("duplicate quest id '" + q.id + "'");
      spec.quests.push_back(std::move(q));
    }
  }
  if (spec.quests.size() > 64) throw ValidationError("at most 64 quests supported");

  if (!j.contains("completion"))
    parse_fail("world spec", "missing 'completion' predicate list");
  spec.completion = parse_predicates(j["completion"], spec, "completion");
  if (spec.completion.empty()) throw ValidationError("completion: empty condition");

  spec.final_reward = req_number(j, "final_reward", "world spec");
  if (!std::isfinite(spec.final_reward) || spec.final_reward < 0.0)
    throw ValidationError("final_reward must be finite and >= 0");

  if (j.contains("failure_states"))
    spec.failure_states = parse_predicates(j["failure_states"], spec, "failure_states");

  if (j.contains("penalty_hooks")) {
    if (!j["penalty_hooks"].is_array()) parse_fail("world spec", "'penalty_hooks' must be an array");
    for (const auto& hj : j["penalty_hooks"]) {
      PenaltyHook h;
      h.trigger = tag_from_string(req_string(hj, "trigger_tag", "penalty_hook"));
      const std::string effect = req_string(hj, "effect", "penalty_hook");
      if (effect != "invalidate_random_subgoal")
        parse_fail("penalty_hook", "unknown effect '" + effect + "'");
      spec.penalty_hooks.push_back(h);
    }
  }

  double max_steps = req_number(j, "max_steps", "world spec");
  spec.max_steps = static_cast<int>(max_steps);
  if (spec.max_steps < 1) throw ValidationError("max_steps must be >= 1");

  return spec;
}

WorldSpec load_world_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open world spec file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_world(ss.str());
}

bool predicate_holds(const WorldSpec& spec, const WorldState& state, const Predicate& p) {
  (void)spec;
  switch (p.kind) {
    case Predicate::Kind::in_room: return state.agent_room == p.a;
    case Predicate::Kind::has_item: return (state.inventory >> p.a) & 1u;
    case Predicate::Kind::not_has_item: return !((state.inventory >> p.a) & 1u);
    case Predicate::Kind::item_at: return state.item_locations[p.a] == p.b;
    case Predicate::Kind::flag_set: return (state.flags >> p.a) & 1u;
    case Predicate::Kind::flag_clear: return !((state.flags >> p.a) & 1u);
  }
  return false;
}

namespace {

bool all_hold(const WorldSpec& spec, const WorldState& state,
              const std::vector<Predicate>& preds) {
  for (const auto& p : preds)
    if (!predicate_holds(spec, state, p)) return false;
  return true;
}

}  // namespace

bool action_admissible(const WorldSpec& spec, const WorldState& state, int action_index) {
  return all_hold(spec, state, spec.actions[action_index].preconditions);
}

std::vector<int> admissible_actions(const WorldSpec& spec, const WorldState& state) {
  std::vector<int> out;
  if (state.done) return out;
  for (size_t i = 0; i < spec.actions.size(); ++i)
    if (action_admissible(spec, state, static_cast<int>(i))) out.push_back(static_cast<int>(i));
  return out;
}

Observation observe(const WorldSpec& spec, const WorldState& state) {
  Observation obs;
  const RoomDef& room = spec.rooms[state.agent_room];
  obs.room_name = room.name;
  obs.room_description = room.description;
  for (size_t i = 0; i < spec.items.size(); ++i)
    if ((state.inventory >> i) & 1u) obs.inventory_names.push_back(spec.items[i].name);
  for (size_t f = 0; f < spec.flags.size(); ++f)
    if ((state.flags >> f) & 1u) obs.facts.push_back(spec.flags[f].fact);
  for (size_t i = 0; i < spec.items.size(); ++i)
    if (state.item_locations[i] == state.agent_room)
      obs.facts.push_back(spec.items[i].name + " is here");
  for (const auto& npc : spec.npcs)
    if (npc.location == state.agent_room) obs.facts.push_back(npc.name + " is here");
  if (!state.last_reaction.empty()) obs.reactive_text = state.last_reaction;
  for (int a : admissible_actions(spec, state))
    obs.admissible.push_back({a, spec.actions[a].id, spec.actions[a].command});
  return obs;
}

std::pair<WorldState, Observation> reset(const WorldSpec& spec, uint64_t seed) {
  WorldState state;
  state.agent_room = spec.start_room;
  state.item_locations.resize(spec.items.size());
  for (size_t i = 0; i < spec.items.size(); ++i)
    state.item_locations[i] = static_cast<int8_t>(spec.items[i].location);
  state.rng_stream = Rng(hash_combine(hash_string(spec.name), seed));
  return {state, observe(spec, state)};
}

StepOutcome step(const WorldSpec& spec, WorldState& state, int action_index) {
  if (state.done) throw std::logic_error("step on a terminal state");
  if (action_index < 0 || action_index >= static_cast<int>(spec.actions.size()))
    throw std::invalid_argument("action index out of range");
  const ActionDef& action = spec.actions[action_index];
  if (!action_admissible(spec, state, action_index))
    throw std::invalid_argument("inadmissible action '" + action.id +
                                "' (preconditions do not hold); agent or mask bug");

  for (const auto& e : action.effects) {
    switch (e.kind) {
      case Effect::Kind::move_to:
        state.agent_room = e.a;
        break;
      case Effect::Kind::take:
        state.inventory |= (1ull << e.a);
        state.item_locations[e.a] = -1;
        break;
      case Effect::Kind::set_flag:
        state.flags |= (1ull << e.a);
        break;
      case Effect::Kind::clear_flag:
        state.flags &= ~(1ull << e.a);
        break;
    }
  }
  state.step_count += 1;
  state.last_reaction = action.reaction;

  // Penalty hooks fire before the quest scan, so a subgoal invalidated by
  // this very step can no longer complete on it.
  for (const auto& hook : spec.penalty_hooks) {
    if (!has_tag(action.tags, hook.trigger)) continue;
    std::vector<int> eligible;
    for (size_t q = 0; q < spec.quests.size(); ++q) {
      const bool open = !((state.completed_quests >> q) & 1u) &&
                        !((state.invalidated_quests >> q) & 1u);
      if (open && spec.quests[q].reward > 0.0) eligible.push_back(static_cast<int>(q));
    }
    if (!eligible.empty()) {
      int victim = eligible[state.rng_stream.uniform_int(eligible.size())];
      state.invalidated_quests |= (1ull << victim);
    }
  }

  double reward = 0.0;
  for (size_t q = 0; q < spec.quests.size(); ++q) {
    const bool open = !((state.completed_quests >> q) & 1u) &&
                      !((state.invalidated_quests >> q) & 1u);
    if (open && all_hold(spec, state, spec.quests[q].condition)) {
      state.completed_quests |= (1ull << q);
      reward += spec.quests[q].reward;
    }
  }

  if (!spec.failure_states.empty()) {
    for (const auto& p : spec.failure_states) {
      if (predicate_holds(spec, state, p)) {
        state.done = true;
        state.failed = true;
        break;
      }
    }
  }
  if (state.failed) {
    reward = 0.0;
  } else if (all_hold(spec, state, spec.completion)) {
    state.done = true;
    reward += spec.final_reward;
  } else if (state.step_count >= spec.max_steps) {
    state.done = true;  // timeout, not failure
  }

  StepOutcome out;
  out.reward_env = reward;
  out.done = state.done;
  out.failed = state.failed;
  out.observation = observe(spec, state);
  return out;
}

std::vector<double> encode_observation(const Observation& obs, const WorldSpec& spec) {
  const size_t rooms = spec.rooms.size();
  const size_t items = spec.items.size();
  const size_t flags = spec.flags.size();
  const size_t entities = spec.items.size() + spec.npcs.size();
  std::vector<double> x(rooms + items + flags + entities, 0.0);

  auto room_it = spec.room_by_name.find(obs.room_name);
  if (room_it == spec.room_by_name.end())
    throw ValidationError("encode: unknown room name '" + obs.room_name + "'");
  x[room_it->second] = 1.0;

  for (const auto& name : obs.inventory_names) {
    auto it = spec.entity_by_name.find(name);
    if (it == spec.entity_by_name.end() || it->second >= static_cast<int>(items))
      throw ValidationError("encode: unknown item name '" + name + "'");
    x[rooms + it->second] = 1.0;
  }

  for (const auto& fact : obs.facts) {
    auto fit = spec.flag_by_fact.find(fact);
    if (fit != spec.flag_by_fact.end()) {
      x[rooms + items + fit->second] = 1.0;
      continue;
    }
    // Presence facts have the fixed form "<entity name> is here".
    constexpr std::string_view suffix = " is here";
    if (fact.size() > suffix.size() &&
        fact.compare(fact.size() - suffix.size(), suffix.size(), suffix) == 0) {
      const std::string name = fact.substr(0, fact.size() - suffix.size());
      auto it = spec.entity_by_name.find(name);
      if (it != spec.entity_by_name.end()) {
        x[rooms + items + flags + it->second] = 1.0;
        continue;
      }
    }
    throw ValidationError("encode: unknown fact '" + fact + "'");
  }
  return x;
}

}  // namespace normbench::engine
