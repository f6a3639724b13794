#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "normbench/engine/types.hpp"
#include "normbench/worlds/scenarios.hpp"

namespace normbench::prior {

// The prior's pair of unnormalized confidences for the normative and
// non-normative class of a behavior description.
struct Valence {
  double l_norm = 0.0;
  double l_nonnorm = 0.0;
};

inline double valence_score(const Valence& v) { return v.l_norm - v.l_nonnorm; }

// Normative prior interface. classify is a pure function of the sentence:
// every implementation returns the same Valence for the same sentence over
// the model's lifetime, which keeps runs reproducible.
class PriorModel {
public:
  virtual ~PriorModel() = default;
  virtual Valence classify(const std::string& sentence) const = 0;
  virtual std::string describe() const = 0;
};

// Cue-term lexicon: l_norm = base + sum of matched normative cue weights,
// l_nonnorm likewise for non-normative cues. Matching is case-insensitive on
// stemmed tokens; multi-word cues match stemmed token sequences.
class LexiconPrior : public PriorModel {
public:
  LexiconPrior(double base_norm, double base_nonnorm);
  void add_cue(const std::string& term, bool normative, double weight);

  Valence classify(const std::string& sentence) const override;
  std::string describe() const override { return "lexicon"; }

private:
  double base_norm_;
  double base_nonnorm_;
  std::unordered_map<std::string, std::pair<double, double>> single_;  // stem -> weights
  std::vector<std::pair<std::vector<std::string>, std::pair<double, double>>> multi_;
};

// Exact-sentence table of precomputed logits, the bridge for importing the
// output of an externally trained classifier.
class TablePrior : public PriorModel {
public:
  explicit TablePrior(std::unordered_map<std::string, Valence> entries);

  Valence classify(const std::string& sentence) const override;
  std::string describe() const override { return "table"; }

  // Every bundled elaboration must be present; returns the missing sentences.
  std::vector<std::string> missing_for(const worlds::ScenarioBundle& bundle) const;

private:
  std::unordered_map<std::string, Valence> entries_;
};

struct OracleParams {
  double magnitude = 2.0;     // +/- confidence for tagged classes
  double neutral_base = 0.0;  // both-class confidence floor for neutral/task text
  double neutral_lean = 0.0;  // mild normative lean of neutral/task text
  double noise_sigma = 0.0;   // per-sentence spread of the non-normative confidence
  uint64_t noise_seed = 0;
  bool use_flip_set = false;  // swap the pair for the bundle's misread sentences
};

// Ground-truth oracle over a bundle's elaborations. Sentences bound to a
// normative or altruistic action read (+m, -m); non-normative (-m, +m);
// neutral and task text (base + lean, base - lean). With noise_sigma > 0 the
// non-normative confidence additionally carries a fixed per-sentence
// perturbation drawn from the sentence's hash, so distinct elaborations of
// one action disagree slightly, the way a real classifier does, while
// classify stays a pure function.
class OraclePrior : public PriorModel {
public:
  OraclePrior(const worlds::ScenarioBundle& bundle, const OracleParams& params);

  Valence classify(const std::string& sentence) const override;
  std::string describe() const override { return "oracle"; }

  const OracleParams& params() const { return params_; }

private:
  enum class Class : uint8_t { positive, negative, neutral };
  struct Binding {
    Class cls;
    bool flipped;
  };
  OracleParams params_;
  std::unordered_map<std::string, Binding> bindings_;
};

// File loaders (schemas described in the README).
std::shared_ptr<TablePrior> load_table(const std::string& path);
std::shared_ptr<LexiconPrior> load_lexicon(const std::string& path);

}  // namespace normbench::prior
