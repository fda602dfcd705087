#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sfv/imitenv.hpp"
#include "sfv/initstate.hpp"
#include "sfv/mlp.hpp"

// Policy-gradient training for motion imitation: Gaussian policies over
// PD targets, lambda-return value targets, generalized advantage
// estimation, and clipped-surrogate policy updates.

namespace sfv {

// Running mean/variance of observation components (Welford). Frozen
// copies are baked into checkpoints so saved policies see the same
// normalization they were trained with.
class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(int dim);

  void update(const Eigen::VectorXd& x);
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;

  int dim() const { return static_cast<int>(mean_.size()); }
  std::int64_t count() const { return count_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  Eigen::VectorXd stddev() const;

  void set_state(std::int64_t count, const Eigen::VectorXd& mean,
                 const Eigen::VectorXd& m2);
  const Eigen::VectorXd& m2() const { return m2_; }

 private:
  std::int64_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

// Diagonal-covariance Gaussian policy with a fixed, state-independent
// standard deviation; only the mean network is trained.
class GaussianPolicy {
 public:
  GaussianPolicy(const std::vector<int>& layer_sizes, double action_std,
                 std::uint64_t seed, double output_scale = 1.0);

  int obs_dim() const { return net_.input_dim(); }
  int action_dim() const { return net_.output_dim(); }
  double action_std() const { return std_; }

  // Constant offset added to the network output; the policy mean is
  // net(obs) + offset. Gradients are unaffected, so this is a pure
  // reparameterization that lets training start near a chosen action
  // (e.g. a characteristic pose) instead of zero.
  void set_output_offset(const Eigen::VectorXd& offset);
  const Eigen::VectorXd& output_offset() const { return offset_; }

  Eigen::VectorXd mean_action(const Eigen::VectorXd& obs) const;
  Eigen::VectorXd sample(const Eigen::VectorXd& obs,
                         std::mt19937_64& rng) const;
  double log_prob(const Eigen::VectorXd& obs,
                  const Eigen::VectorXd& action) const;

  // d log pi(a|s) / d params, accumulated into grad scaled by `scale`.
  void accumulate_log_prob_grad(const Eigen::VectorXd& obs,
                                const Eigen::VectorXd& action, double scale,
                                Eigen::VectorXd& grad) const;

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

 private:
  Mlp net_;
  double std_;
  Eigen::VectorXd offset_;
};

// One rollout episode. Observations are stored already normalized;
// `terminated` distinguishes a fall (bootstrap 0) from running out of
// horizon (bootstrap with the value estimate of the final state).
struct EpisodeData {
  std::vector<Eigen::VectorXd> obs;      // s_0 .. s_{T-1}
  std::vector<Eigen::VectorXd> actions;  // a_0 .. a_{T-1}
  std::vector<double> rewards;           // r_0 .. r_{T-1}
  std::vector<double> log_probs;         // log pi_old(a_t | s_t)
  Eigen::VectorXd final_obs;             // s_T
  bool terminated = false;               // true when the character fell

  // Unnormalized observations, kept so the running normalizer can be
  // updated after the batch without disturbing the stored (normalized)
  // inputs the policy actually saw.
  std::vector<Eigen::VectorXd> raw_obs;
  Eigen::VectorXd raw_final_obs;

  // Filled in by the return/advantage passes.
  std::vector<double> values;  // V(s_0) .. V(s_{T-1})
  double final_value = 0.0;    // V(s_T), ignored when terminated
  std::vector<double> td_lambda_returns;
  std::vector<double> advantages;

  // Initial-state bookkeeping for the init-distribution update.
  Eigen::VectorXd init_summary;  // reduced initial state \hat{s}_0
  int init_component = -1;
  double init_phase = 0.0;

  int length() const { return static_cast<int>(rewards.size()); }
  double discounted_return(double gamma) const;
  double normalized_return(int horizon_steps) const;
};

// R_t = r_t + gamma * ((1 - lambda) V(s_{t+1}) + lambda R_{t+1}), with
// R at the boundary equal to the bootstrap value (0 on a fall).
std::vector<double> td_lambda_targets(const std::vector<double>& rewards,
                                      const std::vector<double>& values,
                                      double final_value, bool terminated,
                                      double gamma, double lambda);

// A_t = delta_t + gamma * lambda * A_{t+1},
// delta_t = r_t + gamma V(s_{t+1}) - V(s_t).
std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values,
                                   double final_value, bool terminated,
                                   double gamma, double lambda);

// Flat minibatch view across episodes.
struct TransitionRef {
  const Eigen::VectorXd* obs;
  const Eigen::VectorXd* action;
  double old_log_prob;
  double advantage;
  double td_target;
};

std::vector<TransitionRef> flatten_batch(
    const std::vector<EpisodeData>& episodes);

struct PpoUpdateStats {
  double surrogate = 0.0;     // mean clipped objective before the step
  double clip_fraction = 0.0; // transitions with the clipped branch active
};

// One ascent step on the clipped surrogate over the given minibatch.
PpoUpdateStats ppo_update(GaussianPolicy& policy, SgdMomentum& opt,
                          const std::vector<TransitionRef>& minibatch,
                          double clip, double stepsize);

// One descent step on mean squared error against the lambda-return
// targets. Returns the pre-step loss.
double value_update(Mlp& value_net, SgdMomentum& opt,
                    const std::vector<TransitionRef>& minibatch,
                    double stepsize);

struct TrainConfig {
  double gamma = 0.95;
  double lambda = 0.95;
  double ppo_clip = 0.2;
  double action_std = 0.1;
  // Multiplier on the policy net's final-layer initial weights; small
  // values start the mean action near zero instead of at the He-init
  // scale, which tames early feedback through the actuators.
  double policy_output_scale = 1.0;
  // When true, the policy mean is offset by the reference motion's
  // average joint angles, so an untrained policy holds a characteristic
  // pose instead of driving every joint to zero. Pure reparameterization;
  // gradients are unchanged.
  bool center_actions_on_reference = false;
  double momentum = 0.9;
  double policy_stepsize = 2.5e-6;
  double value_stepsize = 1e-2;
  double init_dist_stepsize = 1e-3;
  int batch_samples = 4096;
  int minibatch = 256;
  int epochs = 1;               // sweeps over the batch per iteration
  int init_dist_batch = 2000;   // episodes per init-distribution step
  std::vector<int> policy_hidden = {1024, 512};
  std::vector<int> value_hidden = {1024, 512};
  bool normalize_observations = true;
  bool normalize_advantages = true;
  bool init_dist_baseline = true;
  int threads = 1;

  void validate() const;
};

struct IterationMetrics {
  int iteration = 0;
  std::int64_t total_samples = 0;
  double avg_normalized_return = 0.0;
  double policy_loss = 0.0;  // negative mean surrogate
  double value_loss = 0.0;
  double avg_episode_len = 0.0;
};

struct EvalStats {
  double avg_normalized_return = 0.0;
  double avg_episode_len = 0.0;
  double avg_reward = 0.0;
};

// Average joint angles of the reference motion over one cycle; used as the
// policy output offset when TrainConfig::center_actions_on_reference is set.
Eigen::VectorXd reference_mean_action(const CharacterModel& model,
                                      const ReferenceMotion& motion);

// Orchestrates rollout collection, return/advantage computation, and the
// value, policy, and initial-state-distribution updates.
class Trainer {
 public:
  Trainer(const CharacterModel& model, const ReferenceMotion& motion,
          const EpisodeConfig& episode_cfg, const RewardWeights& weights,
          const TrainConfig& cfg, const InitStateDist& init_dist,
          std::uint64_t seed);

  IterationMetrics train_iteration();
  EvalStats evaluate(int episodes, bool mean_actions = true);

  // Collects complete episodes until at least min_samples steps, using
  // one deterministic RNG stream per episode index so results do not
  // depend on the number of worker threads.
  std::vector<EpisodeData> collect_batch(int min_samples);

  GaussianPolicy& policy() { return policy_; }
  Mlp& value_net() { return value_; }
  RunningNormalizer& normalizer() { return normalizer_; }
  InitStateDist& init_dist() { return init_dist_; }
  const TrainConfig& config() const { return cfg_; }
  int iteration() const { return iteration_; }
  std::int64_t total_samples() const { return total_samples_; }
  std::int64_t episode_counter() const { return episode_counter_; }

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

 private:
  EpisodeData run_episode(std::uint64_t episode_index, bool stochastic);
  void score_episode(EpisodeData& ep) const;

  CharacterModel model_;
  ReferenceMotion motion_;
  EpisodeConfig episode_cfg_;
  RewardWeights weights_;
  TrainConfig cfg_;
  InitStateDist init_dist_;
  GaussianPolicy policy_;
  Mlp value_;
  SgdMomentum policy_opt_;
  SgdMomentum value_opt_;
  RunningNormalizer normalizer_;
  std::uint64_t seed_;
  int iteration_ = 0;
  std::int64_t total_samples_ = 0;
  std::int64_t episode_counter_ = 0;
  std::vector<InitEpisodeResult> init_buffer_;
};

// Checkpoint serialization: a JSON header describing shapes and scalar
// state, followed by one flat little-endian float64 block holding the
// policy then value parameters.
struct Checkpoint {
  std::vector<int> policy_layers;
  std::vector<int> value_layers;
  double action_std = 0.1;
  int iteration = 0;
  std::int64_t total_samples = 0;
  std::int64_t episode_counter = 0;
  RunningNormalizer normalizer;
  InitStateDist init_dist;
  TrainConfig config;
  Eigen::VectorXd policy_offset;  // constant action offset, may be empty
  Eigen::VectorXd policy_params;
  Eigen::VectorXd value_params;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sfv
