#include "normbench/agent/agent.hpp"

#include <cmath>
#include <stdexcept>

namespace normbench::agent {

using engine::Rng;
using prior::Valence;

Strategy strategy_from_string(const std::string& s) {
  if (s == "baseline") return Strategy::baseline;
  if (s == "gg-pos") return Strategy::gg_pos;
  if (s == "gg-mix") return Strategy::gg_mix;
  if (s == "gg-shaped") return Strategy::gg_shaped;
  throw std::invalid_argument("unknown strategy '" + s +
                              "' (expected baseline, gg-pos, gg-mix or gg-shaped)");
}

const char* strategy_to_string(Strategy s) {
  switch (s) {
    case Strategy::baseline: return "baseline";
    case Strategy::gg_pos: return "gg-pos";
    case Strategy::gg_mix: return "gg-mix";
    case Strategy::gg_shaped: return "gg-shaped";
  }
  return "?";
}

double shape_reward(double r_env, const Valence& v, const ShapingConfig& shaping) {
  switch (shaping.strategy) {
    case Strategy::baseline:
    case Strategy::gg_shaped:
      return r_env;  // policy shaping leaves the loss reward untouched
    case Strategy::gg_pos:
      return r_env * (shaping.prior_scale * v.l_norm);
    case Strategy::gg_mix:
      return r_env * (shaping.prior_scale * valence_score(v));
  }
  return r_env;
}

std::vector<double> rerank_logits(std::span<const double> logits,
                                  std::span<const Valence> valences, double prior_scale) {
  if (logits.size() != valences.size())
    throw std::invalid_argument("rerank_logits: logits/valences length mismatch");
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i)
    out[i] = logits[i] * (prior_scale * valence_score(valences[i]));
  return out;
}

int select_action(std::span<const double> logits, std::span<const uint8_t> mask,
                  const ShapingConfig& shaping, std::span<const Valence> valences, Rng& rng,
                  bool greedy) {
  std::vector<double> effective(logits.begin(), logits.end());
  if (shaping.strategy == Strategy::gg_shaped) {
    if (valences.size() != logits.size())
      throw std::invalid_argument("select_action: gg-shaped needs a valence per action");
    std::vector<double> reranked =
        rerank_logits(effective, valences, shaping.prior_scale);
    for (size_t i = 0; i < effective.size(); ++i)
      if (mask[i]) effective[i] = reranked[i];
  }
  const std::vector<double> probs = neural::masked_softmax(effective, mask);
  if (greedy) {
    int best = -1;
    for (size_t i = 0; i < probs.size(); ++i)
      if (mask[i] && (best < 0 || probs[i] > probs[static_cast<size_t>(best)]))
        best = static_cast<int>(i);
    return best;
  }
  double u = rng.uniform_real();
  double cum = 0.0;
  int last_admissible = -1;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (!mask[i]) continue;
    last_admissible = static_cast<int>(i);
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return last_admissible;  // guards against rounding at cum ~ 1.0
}

AgentConfig default_agent_config(const std::string& scenario_name) {
  AgentConfig config;
  if (scenario_name == "playground") config.episodes = 4000;
  else if (scenario_name == "superhero") config.episodes = 2500;
  else if (scenario_name == "clerk") config.episodes = 1000;
  return config;
}

Trainer::Trainer(const worlds::ScenarioBundle& bundle,
                 std::shared_ptr<const prior::PriorModel> prior, AgentConfig config)
    : bundle_(bundle), prior_(std::move(prior)), config_(config) {
  if (config_.shaping.strategy != Strategy::baseline && !prior_)
    throw std::invalid_argument("strategy requires a prior model");
  const int input_dim = bundle_.spec.encoding_size();
  const int action_dim = static_cast<int>(bundle_.spec.actions.size());
  Rng master(config_.seed);
  net_ = neural::PolicyNet::init(input_dim, config_.hidden_dim, action_dim,
                                 master.fork(1).next_u64());
  adam_ = neural::AdamState::for_net(net_);
  sample_rng_ = master.fork(2);
  elab_rng_ = master.fork(3);
}

EpisodeTrace Trainer::run_episode(bool learn, bool greedy, std::optional<uint64_t> env_seed) {
  const engine::WorldSpec& spec = bundle_.spec;
  const int action_dim = static_cast<int>(spec.actions.size());
  const uint64_t seed =
      env_seed ? *env_seed
               : engine::hash_combine(config_.seed, static_cast<uint64_t>(episode_counter_));
  auto [state, obs] = engine::reset(spec, seed);

  EpisodeTrace trace;
  trace.action_counts.assign(static_cast<size_t>(action_dim), 0);

  std::vector<neural::TrajectoryStep> trajectory;
  std::vector<double> step_values;  // V(x_t) at collection time
  double episode_loss = 0.0;

  auto flush = [&](double bootstrap_value) {
    if (trajectory.empty()) return;
    // Per-episode cadence fills next values from the recorded forward passes
    // (parameters are unchanged within the chunk); the last step bootstraps.
    for (size_t t = 0; t + 1 < trajectory.size(); ++t)
      trajectory[t].next_value = step_values[t + 1];
    trajectory.back().next_value = bootstrap_value;
    neural::UpdateStats stats =
        a2c_update(net_, adam_, trajectory, config_.gamma, config_.lr, config_.value_coef,
                   config_.entropy_coef);
    episode_loss += stats.loss;
    trajectory.clear();
    step_values.clear();
  };

  std::vector<uint8_t> mask(static_cast<size_t>(action_dim));
  std::vector<Valence> valences;
  std::vector<int> phrase_choice(static_cast<size_t>(action_dim), -1);

  while (!state.done) {
    const std::vector<double> x = engine::encode_observation(obs, spec);
    const neural::ForwardResult fwd = forward(net_, x);

    std::fill(mask.begin(), mask.end(), 0);
    for (const auto& entry : obs.admissible) mask[static_cast<size_t>(entry.index)] = 1;

    const Strategy strategy = config_.shaping.strategy;
    valences.clear();
    if (strategy == Strategy::gg_shaped) {
      // The shaped agent judges every admissible action's elaboration before
      // choosing; the draw made here is also the one logged for the action
      // actually taken.
      valences.assign(static_cast<size_t>(action_dim), Valence{});
      for (const auto& entry : obs.admissible) {
        const std::string& phrase =
            worlds::elaborate(bundle_, entry.index, config_.phrase_mode, elab_rng_);
        phrase_choice[static_cast<size_t>(entry.index)] = phrase_pick_index(entry.index, phrase);
        valences[static_cast<size_t>(entry.index)] = prior_->classify(phrase);
        ++classify_calls_;
      }
    }

    const int action =
        select_action(fwd.logits, mask, config_.shaping, valences, sample_rng_, greedy);

    StepRecord record;
    record.action = action;
    if (strategy == Strategy::gg_shaped) {
      record.phrase_index = phrase_choice[static_cast<size_t>(action)];
      record.valence = valences[static_cast<size_t>(action)];
      record.valence_set = true;
    } else {
      const std::string& phrase =
          worlds::elaborate(bundle_, action, config_.phrase_mode, elab_rng_);
      record.phrase_index = phrase_pick_index(action, phrase);
      if (strategy == Strategy::gg_pos || strategy == Strategy::gg_mix) {
        record.valence = prior_->classify(phrase);
        record.valence_set = true;
        ++classify_calls_;
      }
    }

    const engine::StepOutcome outcome = engine::step(spec, state, action);
    record.r_env = outcome.reward_env;
    record.r_train = shape_reward(outcome.reward_env, record.valence, config_.shaping);

    trace.steps.push_back(record);
    trace.env_score += record.r_env;
    trace.shaped_return += record.r_train;
    trace.action_counts[static_cast<size_t>(action)] += 1;
    for (int t = 0; t < engine::kTagCount; ++t)
      if (engine::has_tag(spec.actions[static_cast<size_t>(action)].tags,
                          static_cast<engine::Tag>(t)))
        trace.tag_counts[static_cast<size_t>(t)] += 1;

    if (learn) {
      neural::TrajectoryStep ts;
      ts.x = x;
      ts.action = action;
      ts.mask.assign(mask.begin(), mask.end());
      ts.reward = record.r_train;
      if (strategy == Strategy::gg_shaped) {
        // The gradient must follow the distribution the action was sampled
        // from, i.e. the reranked one.
        ts.logit_scale.resize(static_cast<size_t>(action_dim), 1.0);
        for (const auto& entry : obs.admissible)
          ts.logit_scale[static_cast<size_t>(entry.index)] =
              config_.shaping.prior_scale *
              valence_score(valences[static_cast<size_t>(entry.index)]);
      }
      trajectory.push_back(std::move(ts));
      step_values.push_back(fwd.value);

      if (outcome.done) {
        flush(0.0);
      } else if (config_.update_every > 0 &&
                 static_cast<int>(trajectory.size()) >= config_.update_every) {
        const std::vector<double> x_next = engine::encode_observation(outcome.observation, spec);
        flush(forward(net_, x_next).value);
      }
    }
    obs = outcome.observation;
  }

  trace.done = state.done;
  trace.failed = state.failed;
  last_episode_loss_ = episode_loss;
  return trace;
}

int Trainer::phrase_pick_index(int action_index, const std::string& phrase) const {
  const auto& phrases = bundle_.phrases_of(action_index);
  for (int k = 0; k < 3; ++k)
    if (phrases[static_cast<size_t>(k)] == phrase) return k;
  return -1;
}

TrainResult Trainer::train() {
  TrainResult result;
  result.episodes.reserve(static_cast<size_t>(config_.episodes));
  for (int ep = 0; ep < config_.episodes; ++ep) {
    episode_counter_ = ep;
    EpisodeTrace trace;
    try {
      trace = run_episode(/*learn=*/true, /*greedy=*/false);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("training aborted at episode " + std::to_string(ep) + ": " +
                               e.what());
    }
    EpisodeRecord record;
    record.env_score = trace.env_score;
    record.shaped_return = trace.shaped_return;
    record.steps = static_cast<int>(trace.steps.size());
    record.failed = trace.failed;
    record.loss = last_episode_loss_;
    record.action_counts = trace.action_counts;
    result.episodes.push_back(std::move(record));

    if (config_.eval_every > 0 && (ep + 1) % config_.eval_every == 0) {
      const uint64_t eval_seed =
          engine::hash_combine(engine::hash_combine(config_.seed, 0x6576616cULL),
                               static_cast<uint64_t>(ep));
      EpisodeTrace eval = run_episode(/*learn=*/false, /*greedy=*/true, eval_seed);
      EvalRecord er;
      er.after_episode = ep + 1;
      er.env_score = eval.env_score;
      er.action_counts = eval.action_counts;
      result.evals.push_back(std::move(er));
    }
  }
  result.classify_calls = classify_calls_;
  return result;
}

}  // namespace normbench::agent
