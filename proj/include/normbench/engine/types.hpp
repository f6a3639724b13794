#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "normbench/engine/rng.hpp"

namespace normbench::engine {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ground-truth normativity tags. Metadata only: nothing the agent learns from
// may branch on them. Consumers are the metrics side, the oracle prior, and
// the world's own penalty hooks.
enum class Tag : uint8_t {
  task,
  normative,
  non_normative,
  altruistic,
  failure_inducing,
  neutral,
};

constexpr int kTagCount = 6;

Tag tag_from_string(const std::string& s);
const char* tag_to_string(Tag t);

using TagMask = uint8_t;

constexpr TagMask tag_bit(Tag t) { return static_cast<TagMask>(1u << static_cast<int>(t)); }
constexpr bool has_tag(TagMask m, Tag t) { return (m & tag_bit(t)) != 0; }

// State predicates, compiled to index form at load time.
struct Predicate {
  enum class Kind : uint8_t {
    in_room,       // a = room index
    has_item,      // a = item index
    not_has_item,  // a = item index
    item_at,       // a = item index, b = room index
    flag_set,      // a = flag index
    flag_clear,    // a = flag index
  };
  Kind kind;
  int a = -1;
  int b = -1;
};

// State mutations.
struct Effect {
  enum class Kind : uint8_t {
    move_to,     // a = room index
    take,        // a = item index
    set_flag,    // a = flag index
    clear_flag,  // a = flag index
  };
  Kind kind;
  int a = -1;
};

struct RoomDef {
  std::string id;
  std::string name;
  std::string description;
  std::map<std::string, int> exits;  // direction -> room index
};

struct ItemDef {
  std::string id;
  std::string name;
  int location = -1;  // initial room index
  bool portable = true;
};

struct NpcDef {
  std::string id;
  std::string name;
  int location = -1;
};

struct FlagDef {
  std::string id;
  std::string fact;  // observation text while the flag is set
};

struct ActionDef {
  std::string id;
  std::string command;   // short imperative shown to the agent
  std::string reaction;  // optional reactive text after execution
  std::vector<Predicate> preconditions;
  std::vector<Effect> effects;
  TagMask tags = 0;
};

struct QuestDef {
  std::string id;
  std::vector<Predicate> condition;  // conjunction
  double reward = 0.0;
};

// Only one hook effect exists: invalidate one random uncompleted rewarded
// subgoal when an action carrying the trigger tag executes.
struct PenaltyHook {
  Tag trigger;
};

struct WorldSpec {
  int schema_version = 1;
  std::string name;
  int start_room = 0;
  int max_steps = 0;
  double final_reward = 0.0;

  std::vector<RoomDef> rooms;
  std::vector<ItemDef> items;
  std::vector<NpcDef> npcs;
  std::vector<FlagDef> flags;
  std::vector<ActionDef> actions;
  std::vector<QuestDef> quests;
  std::vector<Predicate> completion;  // conjunction; success terminal
  std::vector<Predicate> failure_states;
  std::vector<PenaltyHook> penalty_hooks;

  // Lookup tables built during validation.
  std::unordered_map<std::string, int> room_by_id;
  std::unordered_map<std::string, int> room_by_name;
  std::unordered_map<std::string, int> item_by_id;
  std::unordered_map<std::string, int> npc_by_id;
  std::unordered_map<std::string, int> entity_by_name;  // items then npcs
  std::unordered_map<std::string, int> flag_by_id;
  std::unordered_map<std::string, int> flag_by_fact;
  std::unordered_map<std::string, int> action_by_id;
  std::unordered_map<std::string, int> quest_by_id;

  int action_index(const std::string& id) const;

  // Feature layout: one-hot room ++ multi-hot inventory ++ multi-hot flags ++
  // multi-hot visible entities (items then npcs).
  int encoding_size() const {
    return static_cast<int>(rooms.size() + items.size() + flags.size() + items.size() +
                            npcs.size());
  }
};

struct WorldState {
  int agent_room = 0;
  uint64_t inventory = 0;               // bit per item
  std::vector<int8_t> item_locations;   // room index, -1 when held
  uint64_t flags = 0;                   // bit per flag
  int step_count = 0;
  uint64_t completed_quests = 0;        // bit per quest
  uint64_t invalidated_quests = 0;
  Rng rng_stream;
  bool done = false;
  bool failed = false;
  std::string last_reaction;
};

struct AdmissibleAction {
  int index;            // position in WorldSpec::actions
  std::string id;
  std::string command;
};

struct Observation {
  std::string room_name;
  std::string room_description;
  std::vector<std::string> inventory_names;
  std::vector<std::string> facts;
  std::optional<std::string> reactive_text;
  std::vector<AdmissibleAction> admissible;
};

struct StepOutcome {
  Observation observation;
  double reward_env = 0.0;
  bool done = false;
  bool failed = false;
};

}  // namespace normbench::engine
