#include <cmath>
#include <stdexcept>

#include "sfv/rlcore.hpp"

namespace sfv {

double EpisodeData::discounted_return(double gamma) const {
  double r = 0.0;
  for (int t = length() - 1; t >= 0; --t) r = rewards[t] + gamma * r;
  return r;
}

double EpisodeData::normalized_return(int horizon_steps) const {
  if (horizon_steps <= 0) return 0.0;
  double sum = 0.0;
  for (double r : rewards) sum += r;
  return sum / static_cast<double>(horizon_steps);
}

std::vector<double> td_lambda_targets(const std::vector<double>& rewards,
                                      const std::vector<double>& values,
                                      double final_value, bool terminated,
                                      double gamma, double lambda) {
  const int n = static_cast<int>(rewards.size());
  if (static_cast<int>(values.size()) != n)
    throw std::invalid_argument("rewards/values length mismatch");
  std::vector<double> targets(n);
  double next_target = terminated ? 0.0 : final_value;
  double next_value = next_target;
  for (int t = n - 1; t >= 0; --t) {
    targets[t] =
        rewards[t] + gamma * ((1.0 - lambda) * next_value + lambda * next_target);
    next_target = targets[t];
    next_value = values[t];
  }
  return targets;
}

std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values,
                                   double final_value, bool terminated,
                                   double gamma, double lambda) {
  const int n = static_cast<int>(rewards.size());
  if (static_cast<int>(values.size()) != n)
    throw std::invalid_argument("rewards/values length mismatch");
  std::vector<double> adv(n);
  double next_adv = 0.0;
  double next_value = terminated ? 0.0 : final_value;
  for (int t = n - 1; t >= 0; --t) {
    const double delta = rewards[t] + gamma * next_value - values[t];
    adv[t] = delta + gamma * lambda * next_adv;
    next_adv = adv[t];
    next_value = values[t];
  }
  return adv;
}

std::vector<TransitionRef> flatten_batch(
    const std::vector<EpisodeData>& episodes) {
  std::vector<TransitionRef> out;
  for (const auto& ep : episodes) {
    for (int t = 0; t < ep.length(); ++t) {
      out.push_back({&ep.obs[t], &ep.actions[t], ep.log_probs[t],
                     ep.advantages[t], ep.td_lambda_returns[t]});
    }
  }
  return out;
}

PpoUpdateStats ppo_update(GaussianPolicy& policy, SgdMomentum& opt,
                          const std::vector<TransitionRef>& minibatch,
                          double clip, double stepsize) {
  PpoUpdateStats stats;
  if (minibatch.empty()) return stats;
  const double n = static_cast<double>(minibatch.size());
  Eigen::VectorXd grad =
      Eigen::VectorXd::Zero(policy.net().param_count());
  int clipped = 0;
  for (const auto& s : minibatch) {
    const double logp = policy.log_prob(*s.obs, *s.action);
    const double rho = std::exp(logp - s.old_log_prob);
    const double unclipped = rho * s.advantage;
    const double rho_c = std::min(std::max(rho, 1.0 - clip), 1.0 + clip);
    stats.surrogate += std::min(unclipped, rho_c * s.advantage) / n;
    // Gradient of min(rho A, clip(rho) A): zero once the clipped branch
    // is active; otherwise rho * A * d log pi / d theta.
    const bool clip_active = (s.advantage > 0.0 && rho > 1.0 + clip) ||
                             (s.advantage < 0.0 && rho < 1.0 - clip);
    if (clip_active) {
      ++clipped;
      continue;
    }
    // Ascent on the surrogate = descent on its negation.
    policy.accumulate_log_prob_grad(*s.obs, *s.action,
                                    -rho * s.advantage / n, grad);
  }
  stats.clip_fraction = clipped / n;
  if (!grad.allFinite()) {
    stats.clip_fraction = -1.0;  // flags a skipped minibatch
    return stats;
  }
  Eigen::VectorXd params = policy.net().params();
  opt.step(params, grad, stepsize);
  policy.net().set_params(params);
  return stats;
}

double value_update(Mlp& value_net, SgdMomentum& opt,
                    const std::vector<TransitionRef>& minibatch,
                    double stepsize) {
  if (minibatch.empty()) return 0.0;
  const double n = static_cast<double>(minibatch.size());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(value_net.param_count());
  double loss = 0.0;
  for (const auto& s : minibatch) {
    Mlp::Trace trace;
    const double v = value_net.forward(*s.obs, trace)[0];
    const double err = v - s.td_target;
    loss += err * err / n;
    Eigen::VectorXd dy(1);
    dy[0] = 2.0 * err / n;
    value_net.backward(trace, dy, grad);
  }
  if (!grad.allFinite()) return loss;
  Eigen::VectorXd params = value_net.params();
  opt.step(params, grad, stepsize);
  value_net.set_params(params);
  return loss;
}

}  // namespace sfv
