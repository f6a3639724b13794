#pragma once

#include <optional>
#include <string>
#include <vector>

#include "normbench/agent/agent.hpp"
#include "normbench/worlds/scenarios.hpp"

namespace normbench::harness {

enum class LabelClass : uint8_t { task, normative, failure, neutral };

const char* label_to_string(LabelClass c);
LabelClass label_from_string(const std::string& s);

// Behavioral labels for the ratio metric: the task set comes from a shortest
// successful completion, the failure set from actions that can land on a
// failed terminal, the normative set is the remainder; bundle overrides win.
struct ActionLabels {
  std::vector<LabelClass> by_action;  // aligned with spec.actions

  struct Disagreement {
    std::string action_id;
    LabelClass derived;
    LabelClass overridden;
  };
  std::vector<Disagreement> disagreements;

  int count(const std::vector<int>& action_counts, LabelClass c) const;
};

ActionLabels derive_labels(const worlds::ScenarioBundle& bundle);

// n_norm / (n_norm + n_task); absent when no counted action was executed.
std::optional<double> normative_ratio(const std::vector<int>& action_counts,
                                      const ActionLabels& labels);
std::optional<double> normative_ratio(const agent::EpisodeTrace& trace,
                                      const ActionLabels& labels);

// The two-path variant used for worlds whose task can be completed either
// way: executions of normative-tagged vs non-normative-tagged actions.
std::optional<double> norm_vs_nonnorm_ratio(const std::vector<int>& action_counts,
                                            const engine::WorldSpec& spec);

using Series = std::vector<std::optional<double>>;

// Divides each strategy's value by the running maximum observed across all
// strategies up to that episode; absent while the running maximum is zero.
std::vector<Series> normalized_env_score(const std::vector<Series>& per_strategy);

// Trailing mean over the last w values; absent inputs are skipped, and a
// window with no present value stays absent.
Series sliding_window(const Series& series, int w = 20);

// Pointwise mean across iterations (absent entries skipped).
Series mean_across(const std::vector<Series>& iterations);

}  // namespace normbench::harness
