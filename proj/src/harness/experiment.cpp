#include "normbench/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace normbench::harness {

using agent::Strategy;

PriorSpec::Mode PriorSpec::mode_from_string(const std::string& s) {
  if (s == "oracle") return Mode::oracle;
  if (s == "lexicon") return Mode::lexicon;
  if (s == "table") return Mode::table;
  throw std::invalid_argument("unknown prior mode '" + s + "'");
}

std::shared_ptr<const prior::PriorModel> make_prior(const PriorSpec& spec,
                                                    const worlds::ScenarioBundle& bundle) {
  switch (spec.mode) {
    case PriorSpec::Mode::oracle:
      return std::make_shared<prior::OraclePrior>(bundle, spec.oracle);
    case PriorSpec::Mode::lexicon:
      return prior::load_lexicon(spec.file);
    case PriorSpec::Mode::table: {
      auto table = prior::load_table(spec.file);
      const auto missing = table->missing_for(bundle);
      if (!missing.empty()) {
        std::string msg = "logit table does not cover the bundle; missing:";
        for (const auto& s : missing) msg += "\n  '" + s + "'";
        throw engine::ValidationError(msg);
      }
      return table;
    }
  }
  throw std::invalid_argument("bad prior mode");
}

RunSettings preset_run_settings(const std::string& scenario) {
  RunSettings s;
  s.oracle.magnitude = 0.5;
  s.oracle.neutral_lean = 0.25;
  s.oracle.noise_seed = 0xa11ce5ULL;
  s.oracle.use_flip_set = true;
  if (scenario == "playground") {
    s.oracle.neutral_base = -0.23;
    s.oracle.noise_sigma = 1.2;
    s.prior_scale = 1.0;
    s.entropy_coef = 0.1;
  } else if (scenario == "superhero") {
    s.oracle.neutral_base = -0.23;
    s.oracle.noise_sigma = 1.2;
    s.prior_scale = 0.4;
    s.entropy_coef = 0.1;
  } else if (scenario == "clerk") {
    s.oracle.neutral_base = 0.466667;
    s.oracle.neutral_lean = 0.333333;
    s.oracle.noise_sigma = 0.666667;
    s.prior_scale = 0.06;
    s.entropy_coef = 0.06;
  } else {
    throw std::invalid_argument("no preset settings for scenario '" + scenario + "'");
  }
  return s;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string format_cell(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

std::optional<double> final_smoothed(const Series& series, int w) {
  const Series smoothed = sliding_window(series, w);
  for (auto it = smoothed.rbegin(); it != smoothed.rend(); ++it)
    if (*it) return *it;
  return std::nullopt;
}

const StrategyResult& ExperimentResult::by_strategy(Strategy s) const {
  for (const auto& r : strategies)
    if (r.strategy == s) return r;
  throw std::out_of_range("strategy not part of this experiment");
}

namespace {

struct Job {
  size_t strategy_index;
  int iteration;
  uint64_t seed;
};

agent::AgentConfig job_config(const ExperimentConfig& config, const RunSettings& settings,
                              const worlds::ScenarioBundle& bundle, Strategy strategy,
                              uint64_t seed) {
  agent::AgentConfig ac = agent::default_agent_config(bundle.name);
  if (config.episodes) ac.episodes = *config.episodes;
  ac.seed = seed;
  ac.phrase_mode = config.phrase_mode;
  ac.shaping.strategy = strategy;
  ac.lr = config.lr.value_or(settings.lr);
  ac.entropy_coef = config.entropy_coef.value_or(settings.entropy_coef);
  ac.value_coef = config.value_coef.value_or(settings.value_coef);
  ac.gamma = config.gamma.value_or(settings.gamma);
  ac.update_every = config.update_every.value_or(settings.update_every);
  ac.shaping.prior_scale = config.prior_scale.value_or(settings.prior_scale);
  return ac;
}

Series env_series(const agent::TrainResult& run) {
  Series s;
  s.reserve(run.episodes.size());
  for (const auto& ep : run.episodes) s.push_back(ep.env_score);
  return s;
}

Series ratio_series(const agent::TrainResult& run, const ActionLabels& labels) {
  Series s;
  s.reserve(run.episodes.size());
  for (const auto& ep : run.episodes) s.push_back(normative_ratio(ep.action_counts, labels));
  return s;
}

Series path_ratio_series(const agent::TrainResult& run, const engine::WorldSpec& spec) {
  Series s;
  s.reserve(run.episodes.size());
  for (const auto& ep : run.episodes) s.push_back(norm_vs_nonnorm_ratio(ep.action_counts, spec));
  return s;
}

Series altruistic_series(const agent::TrainResult& run, const engine::WorldSpec& spec) {
  Series s;
  s.reserve(run.episodes.size());
  for (const auto& ep : run.episodes) {
    int n = 0;
    for (size_t i = 0; i < ep.action_counts.size(); ++i)
      if (engine::has_tag(spec.actions[i].tags, engine::Tag::altruistic))
        n += ep.action_counts[i];
    s.push_back(static_cast<double>(n));
  }
  return s;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string raw_run_csv(const agent::TrainResult& run, const worlds::ScenarioBundle& bundle,
                        const ActionLabels& labels) {
  std::string csv = "episode,steps,env_score,shaped_return,failed,loss,ratio,n_task,n_norm,"
                    "n_altruistic,n_nonnorm";
  for (const auto& a : bundle.spec.actions) csv += ",n_" + a.id;
  csv += "\n";
  for (size_t ep = 0; ep < run.episodes.size(); ++ep) {
    const auto& r = run.episodes[ep];
    int n_alt = 0, n_nonnorm = 0;
    for (size_t i = 0; i < r.action_counts.size(); ++i) {
      if (engine::has_tag(bundle.spec.actions[i].tags, engine::Tag::altruistic))
        n_alt += r.action_counts[i];
      if (engine::has_tag(bundle.spec.actions[i].tags, engine::Tag::non_normative))
        n_nonnorm += r.action_counts[i];
    }
    csv += std::to_string(ep) + "," + std::to_string(r.steps) + "," +
           format_number(r.env_score) + "," + format_number(r.shaped_return) + "," +
           (r.failed ? "1" : "0") + "," + format_number(r.loss) + "," +
           format_cell(normative_ratio(r.action_counts, labels)) + "," +
           std::to_string(labels.count(r.action_counts, LabelClass::task)) + "," +
           std::to_string(labels.count(r.action_counts, LabelClass::normative)) + "," +
           std::to_string(n_alt) + "," + std::to_string(n_nonnorm);
    for (int c : r.action_counts) csv += "," + std::to_string(c);
    csv += "\n";
  }
  return csv;
}

std::string eval_run_csv(const agent::TrainResult& run, const worlds::ScenarioBundle& bundle,
                         const ActionLabels& labels) {
  std::string csv = "after_episode,env_score,ratio,path_ratio\n";
  for (const auto& ev : run.evals) {
    csv += std::to_string(ev.after_episode) + "," + format_number(ev.env_score) + "," +
           format_cell(normative_ratio(ev.action_counts, labels)) + "," +
           format_cell(norm_vs_nonnorm_ratio(ev.action_counts, bundle.spec)) + "\n";
  }
  return csv;
}

std::string curve_csv(const std::vector<StrategyResult>& strategies,
                      const std::vector<Series>& columns) {
  std::string csv = "episode";
  for (const auto& s : strategies) csv += std::string(",") + strategy_to_string(s.strategy);
  csv += "\n";
  size_t length = 0;
  for (const auto& c : columns) length = std::max(length, c.size());
  for (size_t t = 0; t < length; ++t) {
    csv += std::to_string(t);
    for (const auto& c : columns) csv += "," + (t < c.size() ? format_cell(c[t]) : std::string());
    csv += "\n";
  }
  return csv;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  worlds::ScenarioBundle bundle = worlds::scenario(config.scenario, config.data_dir);
  const RunSettings settings = preset_run_settings(config.scenario);
  PriorSpec prior_spec = config.prior;
  if (prior_spec.mode == PriorSpec::Mode::oracle && config.use_preset_oracle)
    prior_spec.oracle = settings.oracle;
  std::shared_ptr<const prior::PriorModel> shared_prior = make_prior(prior_spec, bundle);

  ExperimentResult result;
  result.config = config;
  result.labels = derive_labels(bundle);
  result.strategies.resize(config.strategies.size());

  std::vector<Job> jobs;
  for (size_t si = 0; si < config.strategies.size(); ++si) {
    auto& sr = result.strategies[si];
    sr.strategy = config.strategies[si];
    sr.runs.resize(static_cast<size_t>(config.iterations));
    for (int it = 0; it < config.iterations; ++it) {
      const uint64_t seed = config.base_seed + static_cast<uint64_t>(it);
      sr.seeds.push_back(seed);
      jobs.push_back({si, it, seed});
    }
  }

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers =
      std::min<unsigned>(config.threads > 0 ? static_cast<unsigned>(config.threads) : hw,
                         static_cast<unsigned>(jobs.size()));
  std::atomic<size_t> next{0};
  std::vector<std::string> errors(jobs.size());
  auto worker = [&]() {
    while (true) {
      const size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const Job& job = jobs[j];
      try {
        // Baseline runs carry no prior at all (strategy isolation).
        auto prior_for_job = config.strategies[job.strategy_index] == Strategy::baseline
                                 ? nullptr
                                 : shared_prior;
        agent::Trainer trainer(
            bundle, prior_for_job,
            job_config(config, settings, bundle, config.strategies[job.strategy_index],
                       job.seed));
        result.strategies[job.strategy_index].runs[static_cast<size_t>(job.iteration)] =
            trainer.train();
      } catch (const std::exception& e) {
        errors[j] = std::string(e.what()) + " (strategy " +
                    strategy_to_string(config.strategies[job.strategy_index]) + ", seed " +
                    std::to_string(job.seed) + ")";
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& err : errors)
    if (!err.empty()) throw std::runtime_error("training run failed: " + err);

  for (auto& sr : result.strategies) {
    std::vector<Series> env, ratio, path_ratio, altruistic;
    for (const auto& run : sr.runs) {
      env.push_back(env_series(run));
      ratio.push_back(ratio_series(run, result.labels));
      path_ratio.push_back(path_ratio_series(run, bundle.spec));
      altruistic.push_back(altruistic_series(run, bundle.spec));
    }
    sr.env_mean = mean_across(env);
    sr.ratio_mean = mean_across(ratio);
    sr.path_ratio_mean = mean_across(path_ratio);
    sr.altruistic_mean = mean_across(altruistic);
  }
  {
    std::vector<Series> env_means;
    for (const auto& sr : result.strategies) env_means.push_back(sr.env_mean);
    result.env_normalized = normalized_env_score(env_means);
  }

  if (!config.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    const std::string dir = config.out_dir + "/";

    for (const auto& sr : result.strategies) {
      for (size_t it = 0; it < sr.runs.size(); ++it) {
        const std::string tag =
            std::string(strategy_to_string(sr.strategy)) + "_iter" + std::to_string(it);
        write_file(dir + "raw_" + tag + ".csv", raw_run_csv(sr.runs[it], bundle, result.labels));
        write_file(dir + "eval_" + tag + ".csv", eval_run_csv(sr.runs[it], bundle, result.labels));
      }
    }

    auto smoothed = [](const std::vector<Series>& in) {
      std::vector<Series> out;
      for (const auto& s : in) out.push_back(sliding_window(s, 20));
      return out;
    };
    std::vector<Series> env, ratio, path_ratio, altruistic;
    for (const auto& sr : result.strategies) {
      env.push_back(sr.env_mean);
      ratio.push_back(sr.ratio_mean);
      path_ratio.push_back(sr.path_ratio_mean);
      altruistic.push_back(sr.altruistic_mean);
    }
    write_file(dir + "curve_env_raw.csv", curve_csv(result.strategies, env));
    write_file(dir + "curve_env_smoothed.csv", curve_csv(result.strategies, smoothed(env)));
    write_file(dir + "curve_env_normalized.csv",
               curve_csv(result.strategies, smoothed(result.env_normalized)));
    write_file(dir + "curve_ratio_smoothed.csv", curve_csv(result.strategies, smoothed(ratio)));
    write_file(dir + "curve_path_ratio_smoothed.csv",
               curve_csv(result.strategies, smoothed(path_ratio)));
    write_file(dir + "curve_altruistic_smoothed.csv",
               curve_csv(result.strategies, smoothed(altruistic)));
    write_file(dir + "valence_dump.csv", valence_dump_csv(bundle, *shared_prior));

    nlohmann::json manifest;
    manifest["schema_version"] = 1;
    manifest["tool_version"] = "1.0.0";
    manifest["scenario"] = config.scenario;
    manifest["iterations"] = config.iterations;
    manifest["base_seed"] = config.base_seed;
    manifest["episodes"] =
        config.episodes ? *config.episodes : agent::default_agent_config(bundle.name).episodes;
    manifest["prior_scale"] = config.prior_scale.value_or(settings.prior_scale);
    manifest["lr"] = config.lr.value_or(settings.lr);
    manifest["entropy_coef"] = config.entropy_coef.value_or(settings.entropy_coef);
    manifest["value_coef"] = config.value_coef.value_or(settings.value_coef);
    manifest["data_schema_version"] = 1;
    manifest["gamma"] = config.gamma.value_or(settings.gamma);
    manifest["update_every"] = config.update_every.value_or(settings.update_every);
    manifest["phrase_mode"] = config.phrase_mode.uniform
                                  ? std::string("uniform")
                                  : "fixed(" + std::to_string(config.phrase_mode.fixed_index) + ")";
    switch (prior_spec.mode) {
      case PriorSpec::Mode::oracle: {
        manifest["prior"] = {{"mode", "oracle"},
                             {"magnitude", prior_spec.oracle.magnitude},
                             {"neutral_base", prior_spec.oracle.neutral_base},
                             {"neutral_lean", prior_spec.oracle.neutral_lean},
                             {"noise_sigma", prior_spec.oracle.noise_sigma},
                             {"noise_seed", prior_spec.oracle.noise_seed},
                             {"use_flip_set", prior_spec.oracle.use_flip_set}};
        break;
      }
      case PriorSpec::Mode::lexicon:
        manifest["prior"] = {{"mode", "lexicon"}, {"file", prior_spec.file}};
        break;
      case PriorSpec::Mode::table:
        manifest["prior"] = {{"mode", "table"}, {"file", prior_spec.file}};
        break;
    }
    nlohmann::json strategies = nlohmann::json::array();
    for (const auto& sr : result.strategies) {
      strategies.push_back(
          {{"strategy", strategy_to_string(sr.strategy)}, {"seeds", sr.seeds}});
    }
    manifest["runs"] = std::move(strategies);
    write_file(dir + "manifest.json", manifest.dump(2));
  }
  return result;
}

std::vector<PhraseSetResult> run_phrase_set_experiment(ExperimentConfig config) {
  config.strategies = {Strategy::gg_mix};
  std::vector<PhraseSetResult> results;
  const std::string base_out = config.out_dir;
  std::string summary = "phrase_set,final_ratio\n";
  for (int k = 0; k < 3; ++k) {
    ExperimentConfig c = config;
    c.phrase_mode = worlds::PhraseMode::Fixed(k);
    if (!base_out.empty()) c.out_dir = base_out + "/phrase_set_" + std::to_string(k);
    PhraseSetResult r;
    r.phrase_set = k;
    r.experiment = run_experiment(c);
    const auto& sr = r.experiment.strategies.front();
    const Series& ratios = config.scenario == "superhero" ? sr.path_ratio_mean : sr.ratio_mean;
    r.final_ratio = final_smoothed(ratios).value_or(0.0);
    summary += std::to_string(k) + "," + format_number(r.final_ratio) + "\n";
    results.push_back(std::move(r));
  }
  if (!base_out.empty()) {
    std::filesystem::create_directories(base_out);
    write_file(base_out + "/phrase_set_ratios.csv", summary);
  }
  return results;
}

std::string valence_dump_csv(const worlds::ScenarioBundle& bundle,
                             const prior::PriorModel& model) {
  std::string csv =
      "action,phrase_index,l_norm,l_nonnorm,score,norm_confidence,action_avg_confidence,"
      "action_max_confidence\n";
  for (size_t ai = 0; ai < bundle.elaborations.size(); ++ai) {
    const auto& set = bundle.elaborations[ai];
    double confidences[3];
    prior::Valence valences[3];
    double avg = 0.0, best = 0.0;
    for (int k = 0; k < 3; ++k) {
      valences[k] = model.classify(set.phrases[static_cast<size_t>(k)]);
      confidences[k] = 1.0 / (1.0 + std::exp(-prior::valence_score(valences[k])));
      avg += confidences[k] / 3.0;
      best = std::max(best, confidences[k]);
    }
    for (int k = 0; k < 3; ++k) {
      csv += set.action_id + "," + std::to_string(k) + "," +
             format_number(valences[k].l_norm) + "," + format_number(valences[k].l_nonnorm) +
             "," + format_number(prior::valence_score(valences[k])) + "," +
             format_number(confidences[k]) + "," + format_number(avg) + "," +
             format_number(best) + "\n";
    }
  }
  return csv;
}

}  // namespace normbench::harness
