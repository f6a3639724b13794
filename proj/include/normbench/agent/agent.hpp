#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "normbench/engine/world.hpp"
#include "normbench/neural/net.hpp"
#include "normbench/prior/prior.hpp"
#include "normbench/worlds/scenarios.hpp"

namespace normbench::agent {

// The four ways of consuming the normative prior. Baseline ignores it; GgPos
// scales the environment reward by the positive-class confidence; GgMix
// scales it by the confidence difference (which can flip the sign); GgShaped
// leaves the training reward alone and reranks action logits before sampling.
enum class Strategy { baseline, gg_pos, gg_mix, gg_shaped };

Strategy strategy_from_string(const std::string& s);
const char* strategy_to_string(Strategy s);

struct ShapingConfig {
  Strategy strategy = Strategy::baseline;
  double prior_scale = 1.0;  // multiplier applied to valence quantities
};

double shape_reward(double r_env, const prior::Valence& v, const ShapingConfig& shaping);

// Elementwise logit rerank: L'_i = L_i * (prior_scale * (l_norm - l_nonnorm)).
// Applied only by the gg_shaped strategy. Note the verbatim multiplicative
// form: a negative logit under a negative score turns positive, and zero
// logits are fixed points.
std::vector<double> rerank_logits(std::span<const double> logits,
                                  std::span<const prior::Valence> valences, double prior_scale);

// Chooses an action id. Sampling strategies draw from the masked softmax of
// raw logits (baseline, gg_pos, gg_mix) or reranked logits (gg_shaped);
// greedy mode takes the argmax of the same distribution. valences must cover
// the full vocabulary when the strategy is gg_shaped (only masked entries are
// read) and may be empty otherwise.
int select_action(std::span<const double> logits, std::span<const uint8_t> mask,
                  const ShapingConfig& shaping, std::span<const prior::Valence> valences,
                  engine::Rng& rng, bool greedy = false);

struct AgentConfig {
  int episodes = 1000;
  double gamma = 0.95;
  double lr = 3e-5;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  uint64_t seed = 0;
  worlds::PhraseMode phrase_mode = worlds::PhraseMode::Uniform();
  ShapingConfig shaping;
  int hidden_dim = 64;
  // Optimizer cadence: 0 applies one update over the full episode trajectory,
  // k > 0 applies an update every k steps (bootstrapping past the chunk end).
  int update_every = 0;
  int eval_every = 50;
};

// Per-scenario defaults: 4000 episodes for playground, 2500 for superhero,
// 1000 for clerk; everything else as in AgentConfig.
AgentConfig default_agent_config(const std::string& scenario_name);

struct StepRecord {
  int action = -1;
  int phrase_index = -1;
  prior::Valence valence;   // valence used by the shaping strategy, if any
  bool valence_set = false;
  double r_env = 0.0;
  double r_train = 0.0;
};

struct EpisodeTrace {
  std::vector<StepRecord> steps;
  double env_score = 0.0;
  double shaped_return = 0.0;
  bool done = false;
  bool failed = false;
  std::array<int, engine::kTagCount> tag_counts{};
  std::vector<int> action_counts;  // executions per action id
};

struct EpisodeRecord {
  double env_score = 0.0;
  double shaped_return = 0.0;
  int steps = 0;
  bool failed = false;
  double loss = 0.0;
  std::vector<int> action_counts;
};

struct EvalRecord {
  int after_episode = 0;
  double env_score = 0.0;
  std::vector<int> action_counts;
};

struct TrainResult {
  std::vector<EpisodeRecord> episodes;
  std::vector<EvalRecord> evals;
  int64_t classify_calls = 0;
};

// One training run: owns the policy, the optimizer state and every rng stream
// involved, so (bundle, config) fully determines the outputs. The prior may
// be null only for the baseline strategy.
class Trainer {
public:
  Trainer(const worlds::ScenarioBundle& bundle,
          std::shared_ptr<const prior::PriorModel> prior, AgentConfig config);

  // Plays one episode, learning unless told otherwise. Greedy mode takes
  // argmax actions and never updates.
  EpisodeTrace run_episode(bool learn, bool greedy, std::optional<uint64_t> env_seed = {});

  TrainResult train();

  const neural::PolicyNet& net() const { return net_; }
  neural::PolicyNet& net() { return net_; }
  int64_t classify_calls() const { return classify_calls_; }
  const AgentConfig& config() const { return config_; }

private:
  int phrase_pick_index(int action_index, const std::string& phrase) const;

  const worlds::ScenarioBundle& bundle_;
  std::shared_ptr<const prior::PriorModel> prior_;
  AgentConfig config_;
  neural::PolicyNet net_;
  neural::AdamState adam_;
  engine::Rng sample_rng_;
  engine::Rng elab_rng_;
  int64_t episode_counter_ = 0;
  int64_t classify_calls_ = 0;
  double last_episode_loss_ = 0.0;
};

}  // namespace normbench::agent
