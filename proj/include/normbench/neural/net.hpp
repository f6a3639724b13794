#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace normbench::neural {

// One-hidden-layer actor-critic: tanh trunk, a logit head over the world's
// full action vocabulary (admissibility is masked downstream) and a scalar
// value head. Parameters live in flat arrays; no framework.
struct PolicyNet {
  int input_dim = 0;
  int hidden_dim = 0;
  int action_dim = 0;

  std::vector<double> w1;  // hidden_dim x input_dim, row-major
  std::vector<double> b1;  // hidden_dim
  std::vector<double> wa;  // action_dim x hidden_dim
  std::vector<double> ba;  // action_dim
  std::vector<double> wc;  // hidden_dim
  std::vector<double> bc;  // 1

  static PolicyNet init(int input_dim, int hidden_dim, int action_dim, uint64_t seed);

  size_t param_count() const;
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);
  bool finite() const;
};

struct ForwardResult {
  std::vector<double> logits;
  double value = 0.0;
  std::vector<double> hidden;  // tanh activations, kept for backprop
};

ForwardResult forward(const PolicyNet& net, std::span<const double> x);

// Probabilities over the mask support, exactly zero elsewhere. Uses
// max-subtraction for stability. Throws on an all-false mask.
std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const uint8_t> mask);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  static AdamState for_net(const PolicyNet& net);
};

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double lr);

struct TrajectoryStep {
  std::vector<double> x;
  int action = -1;
  std::vector<uint8_t> mask;
  double reward = 0.0;      // shaped training reward
  double next_value = 0.0;  // V(s_{t+1}); 0 at terminal steps
  // Per-logit multipliers of the behavior policy (policy shaping). Empty for
  // the plain strategies; when set, the policy term differentiates the
  // distribution the action was actually sampled from, softmax(logit_i *
  // logit_scale_i) over the mask support.
  std::vector<double> logit_scale;
};

struct UpdateStats {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

// One optimization step over a trajectory chunk. Advantages use the
// temporal-difference target A_t = r_t + gamma * next_value_t - V(x_t), are
// treated as constants in the policy term, and drive the squared value loss;
// an entropy bonus is subtracted. Gradients are analytic; throws on
// non-finite losses or gradients.
UpdateStats a2c_update(PolicyNet& net, AdamState& adam,
                       std::span<const TrajectoryStep> trajectory, double gamma, double lr,
                       double value_coef, double entropy_coef);

// Gradient of the same objective without applying an update; exposed so the
// finite-difference test can compare against the exact analytic path.
std::vector<double> a2c_gradient(const PolicyNet& net, std::span<const TrajectoryStep> trajectory,
                                 double gamma, double value_coef, double entropy_coef,
                                 UpdateStats* stats = nullptr);

// Checkpointing: versioned shape header + flat parameter array.
void save_net(const PolicyNet& net, const std::string& path);
PolicyNet load_net(const std::string& path);

}  // namespace normbench::neural
