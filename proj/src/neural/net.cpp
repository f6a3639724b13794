#include "normbench/neural/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "normbench/engine/rng.hpp"

namespace normbench::neural {

namespace {

constexpr double kLn2 = 0.6931471805599453;

void fill_uniform(std::vector<double>& w, int fan_in, engine::Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  for (double& x : w) x = (2.0 * rng.uniform_real() - 1.0) * bound;
}

double softplus(double z) {
  if (z > 30.0) return z;
  if (z < -30.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

// d softplus(z) / dz recovered from the shifted output L = softplus(z) - ln2:
// e^(L + ln2) = 1 + e^z  =>  sigmoid(z) = 1 - exp(-L) / 2.
double softplus_slope(double shifted_logit) {
  return 1.0 - 0.5 * std::exp(-shifted_logit);
}

}  // namespace

PolicyNet PolicyNet::init(int input_dim, int hidden_dim, int action_dim, uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1 || action_dim < 1)
    throw std::invalid_argument("PolicyNet::init: dimensions must be >= 1");
  PolicyNet net;
  net.input_dim = input_dim;
  net.hidden_dim = hidden_dim;
  net.action_dim = action_dim;
  net.w1.resize(static_cast<size_t>(hidden_dim) * input_dim);
  net.b1.assign(static_cast<size_t>(hidden_dim), 0.0);
  net.wa.resize(static_cast<size_t>(action_dim) * hidden_dim);
  net.ba.assign(static_cast<size_t>(action_dim), 0.0);
  net.wc.resize(static_cast<size_t>(hidden_dim));
  net.bc.assign(1, 0.0);
  engine::Rng rng(seed);
  fill_uniform(net.w1, input_dim, rng);
  fill_uniform(net.wa, hidden_dim, rng);
  fill_uniform(net.wc, hidden_dim, rng);
  return net;
}

size_t PolicyNet::param_count() const {
  return w1.size() + b1.size() + wa.size() + ba.size() + wc.size() + bc.size();
}

std::vector<double> PolicyNet::flatten() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const auto* part : {&w1, &b1, &wa, &ba, &wc, &bc})
    flat.insert(flat.end(), part->begin(), part->end());
  return flat;
}

void PolicyNet::unflatten(const std::vector<double>& flat) {
  if (flat.size() != param_count())
    throw std::invalid_argument("unflatten: parameter count mismatch");
  size_t off = 0;
  for (auto* part : {&w1, &b1, &wa, &ba, &wc, &bc}) {
    std::copy(flat.begin() + off, flat.begin() + off + part->size(), part->begin());
    off += part->size();
  }
}

bool PolicyNet::finite() const {
  for (const auto* part : {&w1, &b1, &wa, &ba, &wc, &bc})
    for (double x : *part)
      if (!std::isfinite(x)) return false;
  return true;
}

ForwardResult forward(const PolicyNet& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.input_dim)
    throw std::invalid_argument("forward: input length " + std::to_string(x.size()) +
                                " != input_dim " + std::to_string(net.input_dim));
  ForwardResult out;
  out.hidden.resize(static_cast<size_t>(net.hidden_dim));
  for (int h = 0; h < net.hidden_dim; ++h) {
    double z = net.b1[h];
    const double* row = net.w1.data() + static_cast<size_t>(h) * net.input_dim;
    for (int i = 0; i < net.input_dim; ++i) z += row[i] * x[i];
    out.hidden[h] = std::tanh(z);
  }
  out.logits.resize(static_cast<size_t>(net.action_dim));
  for (int a = 0; a < net.action_dim; ++a) {
    double z = net.ba[a];
    const double* row = net.wa.data() + static_cast<size_t>(a) * net.hidden_dim;
    for (int h = 0; h < net.hidden_dim; ++h) z += row[h] * out.hidden[h];
    // Shifted softplus keeps logits in (-ln2, inf): zero at zero weights, and
    // near-non-negative so a multiplicative logit rerank behaves (a strongly
    // negative logit would otherwise flip sign under a negative rerank
    // weight and dominate the sample).
    out.logits[a] = softplus(z) - kLn2;
  }
  double v = net.bc[0];
  for (int h = 0; h < net.hidden_dim; ++h) v += net.wc[h] * out.hidden[h];
  out.value = v;
  return out;
}

std::vector<double> masked_softmax(std::span<const double> logits,
                                   std::span<const uint8_t> mask) {
  if (logits.size() != mask.size())
    throw std::invalid_argument("masked_softmax: logits/mask length mismatch");
  double max_logit = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < logits.size(); ++i)
    if (mask[i] && logits[i] > max_logit) max_logit = logits[i];
  if (max_logit == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("masked_softmax: mask admits no action");
  std::vector<double> probs(logits.size(), 0.0);
  double total = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    probs[i] = std::exp(logits[i] - max_logit);
    total += probs[i];
  }
  for (size_t i = 0; i < logits.size(); ++i)
    if (mask[i]) probs[i] /= total;
  return probs;
}

AdamState AdamState::for_net(const PolicyNet& net) {
  AdamState state;
  state.m.assign(net.param_count(), 0.0);
  state.v.assign(net.param_count(), 0.0);
  return state;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

namespace {

struct GradViews {
  std::span<double> w1, b1, wa, ba, wc, bc;
};

GradViews views(std::vector<double>& flat, const PolicyNet& net) {
  size_t off = 0;
  auto take = [&](size_t n) {
    std::span<double> s(flat.data() + off, n);
    off += n;
    return s;
  };
  GradViews g;
  g.w1 = take(net.w1.size());
  g.b1 = take(net.b1.size());
  g.wa = take(net.wa.size());
  g.ba = take(net.ba.size());
  g.wc = take(net.wc.size());
  g.bc = take(net.bc.size());
  return g;
}

}  // namespace

std::vector<double> a2c_gradient(const PolicyNet& net, std::span<const TrajectoryStep> trajectory,
                                 double gamma, double value_coef, double entropy_coef,
                                 UpdateStats* stats) {
  if (trajectory.empty()) throw std::invalid_argument("a2c_gradient: empty trajectory");
  std::vector<double> flat(net.param_count(), 0.0);
  GradViews g = views(flat, net);
  UpdateStats acc;

  std::vector<double> dlogits(static_cast<size_t>(net.action_dim));
  std::vector<double> dhidden(static_cast<size_t>(net.hidden_dim));
  std::vector<double> effective(static_cast<size_t>(net.action_dim));

  for (const TrajectoryStep& step : trajectory) {
    if (static_cast<int>(step.mask.size()) != net.action_dim)
      throw std::invalid_argument("a2c_gradient: mask length != action vocabulary");
    if (step.action < 0 || step.action >= net.action_dim || !step.mask[step.action])
      throw std::invalid_argument("a2c_gradient: chosen action outside the mask");
    const bool scaled = !step.logit_scale.empty();
    if (scaled && static_cast<int>(step.logit_scale.size()) != net.action_dim)
      throw std::invalid_argument("a2c_gradient: logit_scale length != action vocabulary");
    ForwardResult f = forward(net, step.x);
    for (int i = 0; i < net.action_dim; ++i)
      effective[i] = scaled ? f.logits[i] * step.logit_scale[i] : f.logits[i];
    const std::vector<double> probs = masked_softmax(effective, step.mask);
    const double advantage = step.reward + gamma * step.next_value - f.value;

    double entropy = 0.0;
    for (size_t i = 0; i < probs.size(); ++i)
      if (step.mask[i] && probs[i] > 0.0) entropy -= probs[i] * std::log(probs[i]);

    acc.policy_loss += -std::log(std::max(probs[step.action], 1e-300)) * advantage;
    acc.value_loss += advantage * advantage;
    acc.entropy += entropy;

    // d loss / d effective-logit_i, mask support only:
    //   policy:   A * (pi_i - [i == a])
    //   entropy: -coef * dH/dl_i with dH/dl_i = -pi_i * (log pi_i + H)
    // With a shaped behavior policy the chain through the rerank multiplier
    // adds a factor logit_scale_i.
    for (int i = 0; i < net.action_dim; ++i) {
      if (!step.mask[i]) {
        dlogits[i] = 0.0;
        continue;
      }
      double d = advantage * (probs[i] - (i == step.action ? 1.0 : 0.0));
      if (probs[i] > 0.0) d += entropy_coef * probs[i] * (std::log(probs[i]) + entropy);
      if (scaled) d *= step.logit_scale[i];
      dlogits[i] = d;
    }
    const double dvalue = -2.0 * value_coef * advantage;

    for (int h = 0; h < net.hidden_dim; ++h) dhidden[h] = net.wc[h] * dvalue;
    for (int a = 0; a < net.action_dim; ++a) {
      const double d = dlogits[a] * softplus_slope(f.logits[a]);
      if (d == 0.0) continue;
      const double* row = net.wa.data() + static_cast<size_t>(a) * net.hidden_dim;
      double* grow = g.wa.data() + static_cast<size_t>(a) * net.hidden_dim;
      for (int h = 0; h < net.hidden_dim; ++h) {
        grow[h] += d * f.hidden[h];
        dhidden[h] += d * row[h];
      }
      g.ba[a] += d;
    }
    for (int h = 0; h < net.hidden_dim; ++h) {
      g.wc[h] += dvalue * f.hidden[h];
      const double dz = dhidden[h] * (1.0 - f.hidden[h] * f.hidden[h]);
      double* grow = g.w1.data() + static_cast<size_t>(h) * net.input_dim;
      for (int i = 0; i < net.input_dim; ++i) grow[i] += dz * step.x[i];
      g.b1[h] += dz;
    }
    g.bc[0] += dvalue;
  }

  acc.loss = acc.policy_loss + value_coef * acc.value_loss - entropy_coef * acc.entropy;
  if (!std::isfinite(acc.loss))
    throw std::runtime_error("a2c: non-finite loss (policy=" + std::to_string(acc.policy_loss) +
                             ", value=" + std::to_string(acc.value_loss) + ")");
  for (double x : flat)
    if (!std::isfinite(x)) throw std::runtime_error("a2c: non-finite gradient component");
  if (stats) *stats = acc;
  return flat;
}

UpdateStats a2c_update(PolicyNet& net, AdamState& adam,
                       std::span<const TrajectoryStep> trajectory, double gamma, double lr,
                       double value_coef, double entropy_coef) {
  UpdateStats stats;
  const std::vector<double> grad = a2c_gradient(net, trajectory, gamma, value_coef, entropy_coef,
                                                &stats);
  std::vector<double> params = net.flatten();
  adam_step(params, grad, adam, lr);
  net.unflatten(params);
  if (!net.finite()) throw std::runtime_error("a2c: parameters became non-finite");
  return stats;
}

void save_net(const PolicyNet& net, const std::string& path) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["input_dim"] = net.input_dim;
  j["hidden_dim"] = net.hidden_dim;
  j["action_dim"] = net.action_dim;
  j["params"] = net.flatten();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump();
}

PolicyNet load_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j = nlohmann::json::parse(ss.str());
  if (j.value("schema_version", 0) != 1)
    throw std::runtime_error(path + ": unsupported checkpoint schema");
  PolicyNet net;
  net.input_dim = j.at("input_dim").get<int>();
  net.hidden_dim = j.at("hidden_dim").get<int>();
  net.action_dim = j.at("action_dim").get<int>();
  net.w1.resize(static_cast<size_t>(net.hidden_dim) * net.input_dim);
  net.b1.resize(static_cast<size_t>(net.hidden_dim));
  net.wa.resize(static_cast<size_t>(net.action_dim) * net.hidden_dim);
  net.ba.resize(static_cast<size_t>(net.action_dim));
  net.wc.resize(static_cast<size_t>(net.hidden_dim));
  net.bc.resize(1);
  net.unflatten(j.at("params").get<std::vector<double>>());
  return net;
}

}  // namespace normbench::neural
