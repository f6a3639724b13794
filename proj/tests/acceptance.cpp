// Acceptance suite: exercises every headline behavior of the workbench end
// to end and prints one PASS/FAIL line per criterion. Exit code 0 only when
// every criterion holds.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "normbench/agent/agent.hpp"
#include "normbench/engine/explore.hpp"
#include "normbench/harness/experiment.hpp"
#include "normbench/harness/metrics.hpp"
#include "normbench/neural/net.hpp"
#include "normbench/prior/prior.hpp"
#include "normbench/worlds/scenarios.hpp"

using namespace normbench;
using agent::Strategy;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s — %s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) { return harness::format_number(v); }

// ---------------------------------------------------------------- criterion 1

double frozen_loss(const neural::PolicyNet& net, const std::vector<neural::TrajectoryStep>& traj,
                   const std::vector<double>& advantage, const std::vector<double>& target,
                   double value_coef, double entropy_coef) {
  double loss = 0.0;
  for (size_t t = 0; t < traj.size(); ++t) {
    auto f = neural::forward(net, traj[t].x);
    std::vector<double> effective = f.logits;
    if (!traj[t].logit_scale.empty())
      for (size_t i = 0; i < effective.size(); ++i) effective[i] *= traj[t].logit_scale[i];
    auto probs = neural::masked_softmax(effective, traj[t].mask);
    double entropy = 0.0;
    for (size_t i = 0; i < probs.size(); ++i)
      if (traj[t].mask[i] && probs[i] > 0.0) entropy -= probs[i] * std::log(probs[i]);
    loss += -std::log(probs[static_cast<size_t>(traj[t].action)]) * advantage[t];
    const double diff = target[t] - f.value;
    loss += value_coef * diff * diff;
    loss -= entropy_coef * entropy;
  }
  return loss;
}

void criterion_gradient_oracle() {
  const auto start = Clock::now();
  engine::Rng rng(20260808);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int input_dim = 2 + static_cast<int>(rng.uniform_int(4));
    const int hidden_dim = 2 + static_cast<int>(rng.uniform_int(4));
    const int action_dim = 2 + static_cast<int>(rng.uniform_int(4));
    neural::PolicyNet net =
        neural::PolicyNet::init(input_dim, hidden_dim, action_dim, rng.next_u64());
    auto params = net.flatten();
    for (auto& p : params) p += 0.3 * (2.0 * rng.uniform_real() - 1.0);
    net.unflatten(params);

    const double gamma = 0.9, value_coef = 0.5, entropy_coef = 0.01;
    const int length = 1 + static_cast<int>(rng.uniform_int(5));
    const bool scaled = trial % 2 == 1;
    std::vector<neural::TrajectoryStep> traj(static_cast<size_t>(length));
    for (auto& s : traj) {
      s.x.resize(static_cast<size_t>(input_dim));
      for (auto& v : s.x) v = 2.0 * rng.uniform_real() - 1.0;
      s.mask.assign(static_cast<size_t>(action_dim), 0);
      const int admissible = 1 + static_cast<int>(rng.uniform_int(action_dim));
      for (int i = 0; i < admissible; ++i) s.mask[rng.uniform_int(action_dim)] = 1;
      s.mask[rng.uniform_int(action_dim)] = 1;
      do {
        s.action = static_cast<int>(rng.uniform_int(action_dim));
      } while (!s.mask[static_cast<size_t>(s.action)]);
      s.reward = 4.0 * rng.uniform_real() - 1.0;
      s.next_value = 2.0 * rng.uniform_real() - 1.0;
      if (scaled) {
        s.logit_scale.resize(static_cast<size_t>(action_dim));
        for (auto& m : s.logit_scale) m = 3.0 * (2.0 * rng.uniform_real() - 1.0);
      }
    }
    std::vector<double> advantage(traj.size()), target(traj.size());
    for (size_t t = 0; t < traj.size(); ++t) {
      auto f = neural::forward(net, traj[t].x);
      target[t] = traj[t].reward + gamma * traj[t].next_value;
      advantage[t] = target[t] - f.value;
    }
    auto analytic = neural::a2c_gradient(net, traj, gamma, value_coef, entropy_coef);
    const double eps = 1e-4;
    for (size_t p = 0; p < params.size(); ++p) {
      neural::PolicyNet plus = net, minus = net;
      auto fp = params, fm = params;
      fp[p] += eps;
      fm[p] -= eps;
      plus.unflatten(fp);
      minus.unflatten(fm);
      const double fd =
          (frozen_loss(plus, traj, advantage, target, value_coef, entropy_coef) -
           frozen_loss(minus, traj, advantage, target, value_coef, entropy_coef)) /
          (2.0 * eps);
      const double denom = std::max({std::abs(fd), std::abs(analytic[p]), 1e-3});
      worst = std::max(worst, std::abs(fd - analytic[p]) / denom);
    }
  }
  const double elapsed = seconds_since(start);
  report(1, "gradient oracle",
         worst < 1e-4 && elapsed < 10.0,
         "max relative error " + fmt(worst) + " over 100 nets in " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------- criterion 2

void criterion_engine_oracle() {
  const auto start = Clock::now();
  bool ok = true;
  std::string detail;

  auto playground = worlds::scenario("playground");
  engine::ExploreOptions neutral_only;
  neutral_only.action_filter = [](const engine::ActionDef& a) {
    return !engine::has_tag(a.tags, engine::Tag::normative) &&
           !engine::has_tag(a.tags, engine::Tag::non_normative) &&
           !engine::has_tag(a.tags, engine::Tag::altruistic);
  };
  auto pg_graph = engine::enumerate_reachable(playground.spec, neutral_only);
  const bool pg_ok = pg_graph.complete && !pg_graph.shortest_success.empty();
  ok = ok && pg_ok;
  detail += "playground neutral-only completion in " +
            std::to_string(pg_graph.shortest_success.size()) + " steps";

  auto superhero = worlds::scenario("superhero");
  auto full = engine::enumerate_reachable(superhero.spec);
  engine::ExploreOptions no_nonnorm;
  no_nonnorm.action_filter = [](const engine::ActionDef& a) {
    return !engine::has_tag(a.tags, engine::Tag::non_normative);
  };
  auto norm_only = engine::enumerate_reachable(superhero.spec, no_nonnorm);
  const bool sh_ok = full.complete && norm_only.complete && !full.shortest_success.empty() &&
                     !norm_only.shortest_success.empty() &&
                     full.shortest_success.size() < norm_only.shortest_success.size();
  ok = ok && sh_ok;
  detail += "; superhero " + std::to_string(full.shortest_success.size()) + " < " +
            std::to_string(norm_only.shortest_success.size()) + " (normative-only)";

  auto clerk = worlds::scenario("clerk");
  engine::ExploreOptions no_altruism;
  no_altruism.cap = 1000000;
  no_altruism.action_filter = [](const engine::ActionDef& a) {
    return !engine::has_tag(a.tags, engine::Tag::altruistic);
  };
  auto ck_graph = engine::enumerate_reachable(clerk.spec, no_altruism);
  auto max_reward = engine::max_success_reward(ck_graph);
  const bool ck_ok =
      ck_graph.complete && max_reward.has_value() && std::abs(*max_reward - 50.0) < 1e-9;
  ok = ok && ck_ok;
  detail += "; clerk altruism-free max reward " + fmt(max_reward.value_or(-1.0));

  const double elapsed = seconds_since(start);
  ok = ok && elapsed < 30.0;
  report(2, "engine oracle", ok, detail + " in " + fmt(elapsed) + " s");
}

// -------------------------------------------------------- criteria 3, 4, 5, 6

struct FinalStats {
  double env_final100 = 0.0;           // mean over iterations of final-100 env mean
  double ratio_final = 0.0;            // final smoothed label ratio
  bool ratio_defined = false;
  double path_ratio_final = 0.0;       // final smoothed two-path ratio
  bool path_ratio_defined = false;
  double altruistic_final = 0.0;       // final smoothed altruistic executions
  double env_smoothed_final = 0.0;
  double env_normalized_final = 0.0;
};

FinalStats stats_for(const harness::ExperimentResult& result, Strategy strategy) {
  const auto& sr = result.by_strategy(strategy);
  FinalStats out;
  double total = 0.0;
  for (const auto& run : sr.runs) {
    double sum = 0.0;
    const size_t n = run.episodes.size();
    for (size_t i = n - 100; i < n; ++i) sum += run.episodes[i].env_score;
    total += sum / 100.0;
  }
  out.env_final100 = total / static_cast<double>(sr.runs.size());
  if (auto v = harness::final_smoothed(sr.ratio_mean)) {
    out.ratio_final = *v;
    out.ratio_defined = true;
  }
  if (auto v = harness::final_smoothed(sr.path_ratio_mean)) {
    out.path_ratio_final = *v;
    out.path_ratio_defined = true;
  }
  out.altruistic_final = harness::final_smoothed(sr.altruistic_mean).value_or(0.0);
  out.env_smoothed_final = harness::final_smoothed(sr.env_mean).value_or(0.0);
  for (size_t k = 0; k < result.strategies.size(); ++k) {
    if (result.strategies[k].strategy == strategy)
      out.env_normalized_final = harness::final_smoothed(result.env_normalized[k]).value_or(0.0);
  }
  return out;
}

harness::ExperimentResult run_standard(const std::string& scenario) {
  harness::ExperimentConfig config;
  config.scenario = scenario;
  config.iterations = 5;
  config.base_seed = 1;
  config.threads = 0;
  return harness::run_experiment(config);
}

void criterion_convergence(const harness::ExperimentResult& playground,
                           const harness::ExperimentResult& superhero) {
  bool ok = true;
  std::string detail;
  const Strategy all[] = {Strategy::baseline, Strategy::gg_pos, Strategy::gg_mix,
                          Strategy::gg_shaped};
  struct Target {
    const harness::ExperimentResult* result;
    double max_env;
    const char* name;
  } targets[] = {{&playground, 90.0, "playground"}, {&superhero, 30.0, "superhero"}};
  for (const auto& target : targets) {
    detail += std::string(target.name) + ":";
    for (Strategy s : all) {
      const double env = stats_for(*target.result, s).env_final100;
      const bool pass = env >= 0.95 * target.max_env;
      ok = ok && pass;
      detail += std::string(" ") + agent::strategy_to_string(s) + "=" + fmt(env);
      if (!pass) detail += "(!)";
    }
    detail += "; ";
  }
  report(3, "convergence to maximum environmental score", ok, detail);
}

void criterion_clerk_env(const harness::ExperimentResult& clerk) {
  const double baseline = stats_for(clerk, Strategy::baseline).env_smoothed_final;
  double best_other = -1.0;
  for (Strategy s : {Strategy::gg_pos, Strategy::gg_mix, Strategy::gg_shaped})
    best_other = std::max(best_other, stats_for(clerk, s).env_smoothed_final);
  const double shaped_norm = stats_for(clerk, Strategy::gg_shaped).env_normalized_final;
  const bool ok = baseline > best_other && shaped_norm >= 0.25 && shaped_norm <= 0.55;
  report(4, "clerk environmental-score ordering", ok,
         "baseline=" + fmt(baseline) + " best-other=" + fmt(best_other) +
             " shaped-normalized=" + fmt(shaped_norm));
}

void criterion_behavior(const harness::ExperimentResult& playground,
                        const harness::ExperimentResult& superhero,
                        const harness::ExperimentResult& clerk) {
  bool ok = true;
  std::string detail;

  {
    const auto base = stats_for(playground, Strategy::baseline);
    const auto pos = stats_for(playground, Strategy::gg_pos);
    const auto shaped = stats_for(playground, Strategy::gg_shaped);
    const bool pass = base.ratio_defined && base.ratio_final < 0.05 && pos.ratio_defined &&
                      pos.ratio_final >= 0.25 && pos.ratio_final <= 0.55 &&
                      shaped.ratio_defined && shaped.ratio_final >= 0.25 &&
                      shaped.ratio_final <= 0.55;
    ok = ok && pass;
    detail += "playground ratios: baseline=" + fmt(base.ratio_final) +
              " gg-pos=" + fmt(pos.ratio_final) + " gg-shaped=" + fmt(shaped.ratio_final);
    if (!pass) detail += "(!)";
  }
  {
    const auto base = stats_for(superhero, Strategy::baseline);
    const auto pos = stats_for(superhero, Strategy::gg_pos);
    const auto mix = stats_for(superhero, Strategy::gg_mix);
    const auto shaped = stats_for(superhero, Strategy::gg_shaped);
    const double base_ratio = base.path_ratio_defined ? base.path_ratio_final : 0.0;
    const bool pass = base_ratio < 0.3 && pos.path_ratio_defined && pos.path_ratio_final > 0.9 &&
                      mix.path_ratio_defined && mix.path_ratio_final > 0.9 &&
                      shaped.path_ratio_defined && shaped.path_ratio_final > 0.5;
    ok = ok && pass;
    detail += "; superhero path ratios: baseline=" + fmt(base_ratio) +
              " gg-pos=" + fmt(pos.path_ratio_final) + " gg-mix=" + fmt(mix.path_ratio_final) +
              " gg-shaped=" + fmt(shaped.path_ratio_final);
    if (!pass) detail += "(!)";
  }
  {
    const double shaped = stats_for(clerk, Strategy::gg_shaped).altruistic_final;
    bool pass = true;
    detail += "; clerk altruistic/episode: gg-shaped=" + fmt(shaped) + " vs";
    for (Strategy s : {Strategy::baseline, Strategy::gg_pos, Strategy::gg_mix}) {
      const double other = stats_for(clerk, s).altruistic_final;
      detail += std::string(" ") + agent::strategy_to_string(s) + "=" + fmt(other);
      if (shaped < 2.0 * other) pass = false;
    }
    ok = ok && pass;
    if (!pass) detail += "(!)";
  }
  report(5, "behavioral reproduction", ok, detail);
}

void criterion_phrase_sets() {
  harness::ExperimentConfig config;
  config.scenario = "superhero";
  config.iterations = 5;
  config.base_seed = 1;
  auto results = harness::run_phrase_set_experiment(config);
  const double clean_low = std::min(results[0].final_ratio, results[2].final_ratio);
  const double flipped = results[1].final_ratio;
  const bool ok = results[0].final_ratio > 0.9 && results[2].final_ratio > 0.9 &&
                  flipped < clean_low - 0.05 && flipped > 0.05 && flipped < 0.9;
  report(6, "phrase-set sensitivity", ok,
         "set0=" + fmt(results[0].final_ratio) + " set1=" + fmt(flipped) +
             " set2=" + fmt(results[2].final_ratio));
}

// ---------------------------------------------------------------- criterion 7

void criterion_equations() {
  engine::Rng rng(777);
  bool ok = true;
  for (int i = 0; i < 1000 && ok; ++i) {
    const double r_env = 60.0 * (rng.uniform_real() - 0.5);
    const prior::Valence v{8.0 * (rng.uniform_real() - 0.5), 8.0 * (rng.uniform_real() - 0.5)};
    const double scale = 0.1 + 2.0 * rng.uniform_real();
    const double logit = 6.0 * (rng.uniform_real() - 0.5);

    const double pos = agent::shape_reward(r_env, v, {Strategy::gg_pos, scale});
    if (std::abs(pos - r_env * (scale * v.l_norm)) > 1e-12) ok = false;

    const double mix = agent::shape_reward(r_env, v, {Strategy::gg_mix, scale});
    if (std::abs(mix - r_env * (scale * (v.l_norm - v.l_nonnorm))) > 1e-12) ok = false;

    const double shaped = agent::shape_reward(r_env, v, {Strategy::gg_shaped, scale});
    if (shaped != r_env) ok = false;  // reward passthrough

    std::vector<double> logits = {logit};
    std::vector<prior::Valence> valences = {v};
    const auto reranked = agent::rerank_logits(logits, valences, scale);
    if (std::abs(reranked[0] - logit * (scale * (v.l_norm - v.l_nonnorm))) > 1e-12) ok = false;
  }
  report(7, "equation unit suite", ok, "1000 randomized tuples against reference arithmetic");
}

// ---------------------------------------------------------------- criterion 8

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_determinism() {
  namespace fs = std::filesystem;
  const std::string base = "/tmp/normbench_acceptance_det";
  bool ok = true;
  std::string detail;
  for (int round = 0; round < 2; ++round) {
    harness::ExperimentConfig config;
    config.scenario = "clerk";
    config.strategies = {Strategy::gg_shaped};
    config.iterations = 1;
    config.base_seed = 4242;
    config.out_dir = base + std::to_string(round);
    fs::remove_all(config.out_dir);
    harness::run_experiment(config);
  }
  for (const char* file : {"raw_gg-shaped_iter0.csv", "eval_gg-shaped_iter0.csv",
                           "curve_env_smoothed.csv", "valence_dump.csv"}) {
    const std::string a = slurp(base + "0/" + std::string(file));
    const std::string b = slurp(base + "1/" + std::string(file));
    if (a.empty() || a != b) {
      ok = false;
      detail += std::string(file) + " differs; ";
    }
  }
  if (ok) detail = "repeated clerk gg-shaped run exports byte-identical series";
  fs::remove_all(base + "0");
  fs::remove_all(base + "1");
  report(8, "determinism", ok, detail);
}

// ---------------------------------------------------------------- criterion 9

void criterion_sampler_statistics() {
  bool ok = true;
  std::string detail;
  {
    std::vector<double> logits = {std::log(0.7), std::log(0.3)};
    std::vector<uint8_t> mask = {1, 1};
    engine::Rng rng(31337);
    int first = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
      if (agent::select_action(logits, mask, {Strategy::baseline, 1.0}, {}, rng) == 0) ++first;
    const double freq = first / static_cast<double>(draws);
    if (std::abs(freq - 0.7) >= 0.02) ok = false;
    detail += "softmax draw frequency " + fmt(freq) + " (target 0.7)";
  }
  {
    auto bundle = worlds::scenario("superhero");
    engine::Rng rng(4096);
    const int action = bundle.spec.action_index("look_around");
    const auto& phrases = bundle.phrases_of(action);
    int counts[3] = {0, 0, 0};
    const int draws = 30000;
    for (int i = 0; i < draws; ++i) {
      const std::string& phrase =
          worlds::elaborate(bundle, action, worlds::PhraseMode::Uniform(), rng);
      for (int k = 0; k < 3; ++k)
        if (phrase == phrases[static_cast<size_t>(k)]) ++counts[k];
    }
    detail += "; phrase frequencies";
    for (int k = 0; k < 3; ++k) {
      const double freq = counts[k] / static_cast<double>(draws);
      detail += " " + fmt(freq);
      if (std::abs(freq - 1.0 / 3.0) >= 0.02) ok = false;
    }
  }
  report(9, "sampler statistics", ok, detail);
}

}  // namespace

int main() {
  std::printf("normbench acceptance suite\n");
  criterion_gradient_oracle();
  criterion_engine_oracle();

  const auto t0 = Clock::now();
  std::printf("... training experiments (playground, superhero, clerk, phrase sets)\n");
  std::fflush(stdout);
  auto playground = run_standard("playground");
  auto superhero = run_standard("superhero");
  auto clerk = run_standard("clerk");
  std::printf("... experiments done in %s s\n", fmt(seconds_since(t0)).c_str());

  criterion_convergence(playground, superhero);
  criterion_clerk_env(clerk);
  criterion_behavior(playground, superhero, clerk);
  criterion_phrase_sets();
  criterion_equations();
  criterion_determinism();
  criterion_sampler_statistics();

  if (failures == 0) {
    std::printf("all 9 acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", failures);
  return 1;
}
