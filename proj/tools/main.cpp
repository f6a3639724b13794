// Command-line front end for the workbench: single training runs, the three
// preset experiments, label inspection, valence dumps and a manual
// step-through mode for debugging worlds.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "normbench/agent/agent.hpp"
#include "normbench/engine/explore.hpp"
#include "normbench/harness/experiment.hpp"
#include "normbench/harness/metrics.hpp"
#include "normbench/neural/net.hpp"
#include "normbench/prior/prior.hpp"
#include "normbench/worlds/scenarios.hpp"

using namespace normbench;

namespace {

struct CommonOptions {
  std::string scenario = "playground";
  std::string strategy = "baseline";
  std::string prior_mode = "oracle";
  std::string prior_file;
  std::string data_dir;
  std::string out;
  uint64_t seed = 1;
  int episodes = 0;
  int phrase_set = -1;  // -1 = uniform draws
  std::optional<double> lr, entropy_coef, value_coef, gamma, prior_scale;
  std::optional<int> update_every;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_strategy) {
  cmd->add_option("--scenario", opt.scenario, "playground, superhero or clerk")
      ->check(CLI::IsMember({"playground", "superhero", "clerk"}));
  if (with_strategy)
    cmd->add_option("--strategy", opt.strategy, "baseline, gg-pos, gg-mix or gg-shaped")
        ->check(CLI::IsMember({"baseline", "gg-pos", "gg-mix", "gg-shaped"}));
  cmd->add_option("--prior", opt.prior_mode, "oracle, lexicon or table")
      ->check(CLI::IsMember({"oracle", "lexicon", "table"}));
  cmd->add_option("--prior-file", opt.prior_file, "lexicon/table file for those prior modes");
  cmd->add_option("--seed", opt.seed, "base random seed");
  cmd->add_option("--episodes", opt.episodes, "override the episode budget");
  cmd->add_option("--phrase-set", opt.phrase_set, "pin elaborations to one phrase index (0-2)");
  cmd->add_option("--out", opt.out, "output directory");
  cmd->add_option("--data-dir", opt.data_dir, "scenario data directory");
  cmd->add_option("--lr", opt.lr, "learning rate override");
  cmd->add_option("--entropy-coef", opt.entropy_coef, "entropy bonus override");
  cmd->add_option("--value-coef", opt.value_coef, "value-loss weight override");
  cmd->add_option("--gamma", opt.gamma, "discount override");
  cmd->add_option("--update-every", opt.update_every,
                  "optimizer cadence in steps (0 = once per episode)");
  cmd->add_option("--prior-scale", opt.prior_scale, "valence multiplier override");
}

// Run-configuration file: the same knobs as the flags, as JSON. Explicit
// flags win over file values.
void apply_config_file(const std::string& path, CommonOptions& opt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run config: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("schema_version", 1) != 1)
    throw std::runtime_error(path + ": unsupported schema_version");
  if (j.contains("scenario")) opt.scenario = j["scenario"].get<std::string>();
  if (j.contains("strategy")) opt.strategy = j["strategy"].get<std::string>();
  if (j.contains("seed")) opt.seed = j["seed"].get<uint64_t>();
  if (j.contains("episodes")) opt.episodes = j["episodes"].get<int>();
  if (j.contains("lr")) opt.lr = j["lr"].get<double>();
  if (j.contains("entropy_coef")) opt.entropy_coef = j["entropy_coef"].get<double>();
  if (j.contains("value_coef")) opt.value_coef = j["value_coef"].get<double>();
  if (j.contains("gamma")) opt.gamma = j["gamma"].get<double>();
  if (j.contains("update_every")) opt.update_every = j["update_every"].get<int>();
  if (j.contains("prior_scale")) opt.prior_scale = j["prior_scale"].get<double>();
  if (j.contains("elaboration_mode")) {
    const auto& mode = j["elaboration_mode"];
    if (mode.is_string() && mode.get<std::string>() == "uniform") opt.phrase_set = -1;
    else opt.phrase_set = mode.get<int>();
  }
  if (j.contains("prior")) {
    const auto& p = j["prior"];
    if (p.contains("mode")) opt.prior_mode = p["mode"].get<std::string>();
    if (p.contains("file")) opt.prior_file = p["file"].get<std::string>();
  }
  if (j.contains("out")) opt.out = j["out"].get<std::string>();
}

harness::PriorSpec prior_spec_for(const CommonOptions& opt) {
  harness::PriorSpec spec;
  spec.mode = harness::PriorSpec::mode_from_string(opt.prior_mode);
  if (spec.mode != harness::PriorSpec::Mode::oracle && opt.prior_file.empty())
    throw std::invalid_argument("--prior-file is required for lexicon/table priors");
  spec.file = opt.prior_file;
  return spec;
}

harness::ExperimentConfig experiment_config(const CommonOptions& opt) {
  harness::ExperimentConfig config;
  config.scenario = opt.scenario;
  config.base_seed = opt.seed;
  config.prior = prior_spec_for(opt);
  config.data_dir = opt.data_dir;
  config.out_dir = opt.out;
  if (opt.episodes > 0) config.episodes = opt.episodes;
  if (opt.phrase_set >= 0) config.phrase_mode = worlds::PhraseMode::Fixed(opt.phrase_set);
  config.lr = opt.lr;
  config.entropy_coef = opt.entropy_coef;
  config.value_coef = opt.value_coef;
  config.gamma = opt.gamma;
  config.update_every = opt.update_every;
  config.prior_scale = opt.prior_scale;
  return config;
}

agent::AgentConfig agent_config_for(const CommonOptions& opt,
                                    const harness::RunSettings& settings) {
  agent::AgentConfig ac = agent::default_agent_config(opt.scenario);
  ac.seed = opt.seed;
  if (opt.episodes > 0) ac.episodes = opt.episodes;
  if (opt.phrase_set >= 0) ac.phrase_mode = worlds::PhraseMode::Fixed(opt.phrase_set);
  ac.lr = opt.lr.value_or(settings.lr);
  ac.entropy_coef = opt.entropy_coef.value_or(settings.entropy_coef);
  ac.value_coef = opt.value_coef.value_or(settings.value_coef);
  ac.gamma = opt.gamma.value_or(settings.gamma);
  ac.update_every = opt.update_every.value_or(settings.update_every);
  ac.shaping.strategy = agent::strategy_from_string(opt.strategy);
  ac.shaping.prior_scale = opt.prior_scale.value_or(settings.prior_scale);
  return ac;
}

int cmd_run(const CommonOptions& opt, const std::string& checkpoint) {
  worlds::ScenarioBundle bundle = worlds::scenario(opt.scenario, opt.data_dir);
  const harness::RunSettings settings = harness::preset_run_settings(opt.scenario);
  agent::AgentConfig ac = agent_config_for(opt, settings);

  harness::PriorSpec prior_spec = prior_spec_for(opt);
  if (prior_spec.mode == harness::PriorSpec::Mode::oracle) prior_spec.oracle = settings.oracle;
  std::shared_ptr<const prior::PriorModel> prior_model;
  if (ac.shaping.strategy != agent::Strategy::baseline)
    prior_model = harness::make_prior(prior_spec, bundle);

  agent::Trainer trainer(bundle, prior_model, ac);
  auto result = trainer.train();

  const auto labels = harness::derive_labels(bundle);
  harness::Series env, ratio;
  for (const auto& ep : result.episodes) {
    env.push_back(ep.env_score);
    ratio.push_back(harness::normative_ratio(ep.action_counts, labels));
  }
  double final100 = 0.0;
  const size_t n = result.episodes.size();
  const size_t window = std::min<size_t>(100, n);
  for (size_t i = n - window; i < n; ++i) final100 += result.episodes[i].env_score;
  final100 /= static_cast<double>(window);

  std::cout << "scenario " << opt.scenario << ", strategy " << opt.strategy << ", seed "
            << opt.seed << "\n"
            << "episodes " << n << ", final-" << window << " env score "
            << harness::format_number(final100) << "\n"
            << "final smoothed env score "
            << harness::format_cell(harness::final_smoothed(env)) << ", normative ratio "
            << harness::format_cell(harness::final_smoothed(ratio)) << "\n"
            << "prior classifications: " << result.classify_calls << "\n";

  if (!opt.out.empty()) {
    harness::ExperimentConfig config = experiment_config(opt);
    config.strategies = {ac.shaping.strategy};
    config.iterations = 1;
    harness::run_experiment(config);
    std::cout << "exports written to " << opt.out << "\n";
  }
  if (!checkpoint.empty()) {
    neural::save_net(trainer.net(), checkpoint);
    std::cout << "checkpoint written to " << checkpoint << "\n";
  }
  return 0;
}

int cmd_experiment(CommonOptions opt, int preset, int iterations) {
  harness::ExperimentConfig config = experiment_config(opt);
  config.iterations = iterations;
  if (config.out_dir.empty()) config.out_dir = "experiment_out/" + opt.scenario;
  if (preset == 3) {
    auto results = harness::run_phrase_set_experiment(config);
    std::cout << "phrase-set comparison (gg-mix, " << opt.scenario << "):\n";
    for (const auto& r : results)
      std::cout << "  set " << r.phrase_set << ": final two-path ratio "
                << harness::format_number(r.final_ratio) << "\n";
    std::cout << "exports written to " << config.out_dir << "\n";
    return 0;
  }
  auto result = harness::run_experiment(config);
  std::cout << "experiment " << preset << " on " << opt.scenario << " (" << iterations
            << " iterations per strategy):\n";
  for (size_t k = 0; k < result.strategies.size(); ++k) {
    const auto& sr = result.strategies[k];
    std::cout << "  " << agent::strategy_to_string(sr.strategy) << ": final smoothed env "
              << harness::format_cell(harness::final_smoothed(sr.env_mean)) << ", normalized "
              << harness::format_cell(harness::final_smoothed(result.env_normalized[k]))
              << ", ratio " << harness::format_cell(harness::final_smoothed(sr.ratio_mean));
    if (opt.scenario == "superhero")
      std::cout << ", two-path ratio "
                << harness::format_cell(harness::final_smoothed(sr.path_ratio_mean));
    if (opt.scenario == "clerk")
      std::cout << ", altruistic/episode "
                << harness::format_cell(harness::final_smoothed(sr.altruistic_mean));
    std::cout << "\n";
  }
  std::cout << "exports written to " << config.out_dir << "\n";
  return 0;
}

int cmd_labels(const CommonOptions& opt, const std::string& graph_out) {
  auto bundle = worlds::scenario(opt.scenario, opt.data_dir);
  auto labels = harness::derive_labels(bundle);
  std::cout << "derived behavioral labels for " << opt.scenario << ":\n";
  for (size_t i = 0; i < bundle.spec.actions.size(); ++i)
    std::cout << "  " << bundle.spec.actions[i].id << ": "
              << harness::label_to_string(labels.by_action[i]) << "\n";
  if (!labels.disagreements.empty()) {
    std::cout << "overrides applied (derived -> override):\n";
    for (const auto& d : labels.disagreements)
      std::cout << "  " << d.action_id << ": " << harness::label_to_string(d.derived) << " -> "
                << harness::label_to_string(d.overridden) << "\n";
  }
  if (!graph_out.empty()) {
    engine::ExploreOptions options;
    options.cap = 1000000;
    // Same hook-free subgraph the label derivation explores; the full Clerk
    // graph does not fit a reasonable export.
    if (!bundle.spec.penalty_hooks.empty()) {
      options.action_filter = [&bundle](const engine::ActionDef& a) {
        for (const auto& h : bundle.spec.penalty_hooks)
          if (engine::has_tag(a.tags, h.trigger)) return false;
        return true;
      };
    }
    auto graph = engine::enumerate_reachable(bundle.spec, options);
    std::ofstream out(graph_out);
    if (!out) throw std::runtime_error("cannot write " + graph_out);
    out << engine::graph_to_json(graph, bundle.spec);
    std::cout << "state graph (" << graph.nodes.size() << " nodes) written to " << graph_out
              << "\n";
  }
  return 0;
}

int cmd_valence_dump(const CommonOptions& opt) {
  auto bundle = worlds::scenario(opt.scenario, opt.data_dir);
  harness::PriorSpec spec = prior_spec_for(opt);
  if (spec.mode == harness::PriorSpec::Mode::oracle)
    spec.oracle = harness::preset_run_settings(opt.scenario).oracle;
  auto model = harness::make_prior(spec, bundle);
  const std::string csv = harness::valence_dump_csv(bundle, *model);
  if (opt.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(opt.out);
    if (!out) throw std::runtime_error("cannot write " + opt.out);
    out << csv;
    std::cout << "valence dump written to " << opt.out << "\n";
  }
  return 0;
}

int cmd_play(const CommonOptions& opt) {
  auto bundle = worlds::scenario(opt.scenario, opt.data_dir);
  auto [state, obs] = engine::reset(bundle.spec, opt.seed);
  double total = 0.0;
  while (true) {
    std::cout << "\n== " << obs.room_name << " ==\n" << obs.room_description << "\n";
    for (const auto& fact : obs.facts) std::cout << "  - " << fact << "\n";
    if (obs.reactive_text) std::cout << "  (" << *obs.reactive_text << ")\n";
    if (state.done) {
      std::cout << (state.failed ? "FAILED" : "DONE") << "; total env score " << total << "\n";
      return 0;
    }
    for (size_t i = 0; i < obs.admissible.size(); ++i)
      std::cout << "  [" << i << "] " << obs.admissible[i].command << " (" << obs.admissible[i].id
                << ")\n";
    std::cout << "score " << total << ", step " << state.step_count << " > " << std::flush;
    std::string line;
    if (!std::getline(std::cin, line) || line == "q" || line == "quit") return 0;
    int choice = -1;
    try {
      choice = std::stoi(line);
    } catch (...) {
      for (size_t i = 0; i < obs.admissible.size(); ++i)
        if (obs.admissible[i].id == line || obs.admissible[i].command == line)
          choice = static_cast<int>(i);
    }
    if (choice < 0 || choice >= static_cast<int>(obs.admissible.size())) {
      std::cout << "unrecognized choice (index, id or command; q to quit)\n";
      continue;
    }
    auto outcome =
        engine::step(bundle.spec, state, obs.admissible[static_cast<size_t>(choice)].index);
    total += outcome.reward_env;
    if (outcome.reward_env != 0.0) std::cout << "reward +" << outcome.reward_env << "\n";
    obs = outcome.observation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"normbench: actor-critic agents in social text worlds with a normative prior"};
  app.require_subcommand(1);

  CommonOptions run_opt, exp_opt, label_opt, valence_opt, play_opt;
  std::string checkpoint, graph_out;
  int preset = 1;
  int iterations = 5;

  std::string config_path;
  auto* run = app.add_subcommand("run", "train one agent and report its final scores");
  add_common(run, run_opt, true);
  run->add_option("--save-net", checkpoint, "write the trained policy checkpoint here");
  run->add_option("--config", config_path, "run configuration file (flags override it)");

  auto* experiment =
      app.add_subcommand("experiment", "run a preset experiment over all strategies");
  add_common(experiment, exp_opt, false);
  experiment->add_option("--preset", preset, "1: env score, 2: behavior ratios, 3: phrase sets")
      ->check(CLI::Range(1, 3));
  experiment->add_option("--iterations", iterations, "training iterations per strategy");

  auto* labels = app.add_subcommand("labels", "print derived behavioral labels");
  add_common(labels, label_opt, false);
  labels->add_option("--graph-out", graph_out, "also export the reachable state graph (JSON)");

  auto* valence = app.add_subcommand("valence-dump", "classify every bundled elaboration");
  add_common(valence, valence_opt, false);

  auto* play = app.add_subcommand("play", "step through a world manually (stdin commands)");
  add_common(play, play_opt, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (!config_path.empty()) {
        CommonOptions file_opt;
        apply_config_file(config_path, file_opt);
        auto flag_unset = [&](const char* name) { return run->count(name) == 0; };
        if (flag_unset("--scenario")) run_opt.scenario = file_opt.scenario;
        if (flag_unset("--strategy")) run_opt.strategy = file_opt.strategy;
        if (flag_unset("--prior")) run_opt.prior_mode = file_opt.prior_mode;
        if (flag_unset("--prior-file")) run_opt.prior_file = file_opt.prior_file;
        if (flag_unset("--seed")) run_opt.seed = file_opt.seed;
        if (flag_unset("--episodes")) run_opt.episodes = file_opt.episodes;
        if (flag_unset("--phrase-set")) run_opt.phrase_set = file_opt.phrase_set;
        if (flag_unset("--out")) run_opt.out = file_opt.out;
        if (flag_unset("--lr")) run_opt.lr = file_opt.lr;
        if (flag_unset("--entropy-coef")) run_opt.entropy_coef = file_opt.entropy_coef;
        if (flag_unset("--value-coef")) run_opt.value_coef = file_opt.value_coef;
        if (flag_unset("--gamma")) run_opt.gamma = file_opt.gamma;
        if (flag_unset("--update-every")) run_opt.update_every = file_opt.update_every;
        if (flag_unset("--prior-scale")) run_opt.prior_scale = file_opt.prior_scale;
      }
      return cmd_run(run_opt, checkpoint);
    }
    if (experiment->parsed()) return cmd_experiment(exp_opt, preset, iterations);
    if (labels->parsed()) return cmd_labels(label_opt, graph_out);
    if (valence->parsed()) return cmd_valence_dump(valence_opt);
    if (play->parsed()) return cmd_play(play_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
