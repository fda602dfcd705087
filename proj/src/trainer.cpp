#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>

#include "sfv/rlcore.hpp"

namespace sfv {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t episode_seed(std::uint64_t master, std::uint64_t tag,
                           std::uint64_t index) {
  return splitmix64(splitmix64(master ^ (tag * 0x9e3779b97f4a7c15ull)) ^
                    index);
}

constexpr std::uint64_t kTrainTag = 1;
constexpr std::uint64_t kEvalTag = 2;
constexpr std::uint64_t kShuffleTag = 3;

std::vector<int> net_layers(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> layers = {in};
  layers.insert(layers.end(), hidden.begin(), hidden.end());
  layers.push_back(out);
  return layers;
}

}  // namespace

void TrainConfig::validate() const {
  if (gamma < 0.0 || gamma > 1.0 || lambda < 0.0 || lambda > 1.0)
    throw std::runtime_error("gamma and lambda must lie in [0, 1]");
  if (ppo_clip <= 0.0) throw std::runtime_error("clip threshold must be > 0");
  if (action_std <= 0.0) throw std::runtime_error("action std must be > 0");
  if (policy_output_scale <= 0.0)
    throw std::runtime_error("policy output scale must be > 0");
  if (batch_samples < 1 || minibatch < 1 || epochs < 1)
    throw std::runtime_error("batch sizes must be positive");
  if (init_dist_batch < 1)
    throw std::runtime_error("init distribution batch must be positive");
  if (threads < 1) throw std::runtime_error("thread count must be positive");
  if (policy_hidden.empty() || value_hidden.empty())
    throw std::runtime_error("networks need at least one hidden layer");
}

Trainer::Trainer(const CharacterModel& model, const ReferenceMotion& motion,
                 const EpisodeConfig& episode_cfg, const RewardWeights& weights,
                 const TrainConfig& cfg, const InitStateDist& init_dist,
                 std::uint64_t seed)
    : model_(model),
      motion_(motion),
      episode_cfg_(episode_cfg),
      weights_(weights),
      cfg_(cfg),
      init_dist_(init_dist),
      policy_(net_layers(ImitEnv(model, motion, episode_cfg, weights).obs_dim(),
                         cfg.policy_hidden, model.joint_count()),
              cfg.action_std, splitmix64(seed), cfg.policy_output_scale),
      value_(net_layers(ImitEnv(model, motion, episode_cfg, weights).obs_dim(),
                        cfg.value_hidden, 1),
             splitmix64(seed + 1)),
      policy_opt_(cfg.momentum),
      value_opt_(cfg.momentum),
      normalizer_(ImitEnv(model, motion, episode_cfg, weights).obs_dim()),
      seed_(seed) {
  cfg_.validate();
  if (cfg_.center_actions_on_reference)
    policy_.set_output_offset(reference_mean_action(model_, motion_));
}

Eigen::VectorXd reference_mean_action(const CharacterModel& model,
                                      const ReferenceMotion& motion) {
  // Average joint angles over one cycle, sampled at phase resolution finer
  // than any frame spacing so the estimate is frame-grid independent.
  ImitEnv env(model, motion, EpisodeConfig{}, RewardWeights{});
  const int samples = 256;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.joint_count());
  for (int i = 0; i < samples; ++i) {
    const double phase = static_cast<double>(i) / samples;
    const SimState s = pose_to_state(model, env.reference_pose(phase),
                                     env.reference_velocity(phase));
    mean += s.q.segment(3, model.joint_count());
  }
  return mean / samples;
}

EpisodeData Trainer::run_episode(std::uint64_t episode_index,
                                 bool stochastic) {
  std::mt19937_64 rng(episode_seed(
      seed_, stochastic ? kTrainTag : kEvalTag, episode_index));
  ImitEnv env(model_, motion_, episode_cfg_, weights_);
  const InitSample init = sample_initial(init_dist_, model_, motion_,
                                         episode_cfg_.contact, rng);

  EpisodeData ep;
  ep.init_summary = reduce_state(init.state);
  ep.init_component = init.component;
  ep.init_phase = init.phase;

  Eigen::VectorXd raw = env.reset(init.state, init.phase);
  while (!env.done()) {
    Eigen::VectorXd obs = cfg_.normalize_observations
                              ? normalizer_.normalize(raw)
                              : raw;
    Eigen::VectorXd action =
        stochastic ? policy_.sample(obs, rng) : policy_.mean_action(obs);
    const auto step = env.env_step(action);
    ep.raw_obs.push_back(std::move(raw));
    ep.obs.push_back(std::move(obs));
    ep.log_probs.push_back(policy_.log_prob(ep.obs.back(), action));
    ep.actions.push_back(std::move(action));
    ep.rewards.push_back(step.reward);
    raw = step.obs;
  }
  ep.raw_final_obs = raw;
  ep.final_obs =
      cfg_.normalize_observations ? normalizer_.normalize(raw) : raw;
  ep.terminated = env.fallen();
  return ep;
}

std::vector<EpisodeData> Trainer::collect_batch(int min_samples) {
  std::vector<EpisodeData> episodes;
  int samples = 0;
  while (samples < min_samples) {
    // Launch one wave; keep a prefix with sequential-semantics cutoff so
    // the batch composition does not depend on the thread count.
    const int wave = std::max(1, cfg_.threads);
    std::vector<std::future<EpisodeData>> futures;
    futures.reserve(wave);
    for (int w = 0; w < wave; ++w) {
      const std::uint64_t idx = episode_counter_ + w;
      futures.push_back(std::async(
          cfg_.threads > 1 ? std::launch::async : std::launch::deferred,
          [this, idx] { return run_episode(idx, true); }));
    }
    for (int w = 0; w < wave; ++w) {
      EpisodeData ep = futures[w].get();
      if (samples >= min_samples) break;  // discard speculative overrun
      samples += ep.length();
      ++episode_counter_;
      episodes.push_back(std::move(ep));
    }
  }
  return episodes;
}

void Trainer::score_episode(EpisodeData& ep) const {
  const int n = ep.length();
  ep.values.resize(n);
  for (int t = 0; t < n; ++t) ep.values[t] = value_.forward(ep.obs[t])[0];
  ep.final_value = ep.terminated ? 0.0 : value_.forward(ep.final_obs)[0];
  ep.td_lambda_returns =
      td_lambda_targets(ep.rewards, ep.values, ep.final_value, ep.terminated,
                        cfg_.gamma, cfg_.lambda);
  ep.advantages = gae_advantages(ep.rewards, ep.values, ep.final_value,
                                 ep.terminated, cfg_.gamma, cfg_.lambda);
}

IterationMetrics Trainer::train_iteration() {
  std::vector<EpisodeData> episodes = collect_batch(cfg_.batch_samples);
  for (auto& ep : episodes) score_episode(ep);

  if (cfg_.normalize_advantages) {
    double mean = 0.0, count = 0.0;
    for (const auto& ep : episodes)
      for (double a : ep.advantages) mean += a, count += 1.0;
    mean /= count;
    double var = 0.0;
    for (const auto& ep : episodes)
      for (double a : ep.advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / count) + 1e-8;
    for (auto& ep : episodes)
      for (double& a : ep.advantages) a = (a - mean) / sd;
  }

  std::vector<TransitionRef> all = flatten_batch(episodes);
  std::mt19937_64 shuffle_rng(
      episode_seed(seed_, kShuffleTag, static_cast<std::uint64_t>(iteration_)));

  double value_loss = 0.0, surrogate = 0.0;
  int value_steps = 0, policy_steps = 0;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::shuffle(all.begin(), all.end(), shuffle_rng);
    for (std::size_t at = 0; at < all.size(); at += cfg_.minibatch) {
      const std::size_t end = std::min(all.size(), at + cfg_.minibatch);
      std::vector<TransitionRef> mb(all.begin() + at, all.begin() + end);
      value_loss += value_update(value_, value_opt_, mb, cfg_.value_stepsize);
      ++value_steps;
    }
    std::shuffle(all.begin(), all.end(), shuffle_rng);
    for (std::size_t at = 0; at < all.size(); at += cfg_.minibatch) {
      const std::size_t end = std::min(all.size(), at + cfg_.minibatch);
      std::vector<TransitionRef> mb(all.begin() + at, all.begin() + end);
      surrogate +=
          ppo_update(policy_, policy_opt_, mb, cfg_.ppo_clip,
                     cfg_.policy_stepsize)
              .surrogate;
      ++policy_steps;
    }
  }

  if (cfg_.normalize_observations) {
    for (const auto& ep : episodes) {
      for (const auto& raw : ep.raw_obs) normalizer_.update(raw);
      normalizer_.update(ep.raw_final_obs);
    }
  }

  if (init_dist_.mode == InitMode::ASI) {
    for (const auto& ep : episodes)
      init_buffer_.push_back(
          {ep.init_summary, ep.init_component,
           ep.discounted_return(cfg_.gamma)});
    if (static_cast<int>(init_buffer_.size()) >= cfg_.init_dist_batch) {
      asi_update(init_dist_, init_buffer_, cfg_.init_dist_stepsize);
      init_buffer_.clear();
    }
  }

  const int horizon = ImitEnv(model_, motion_, episode_cfg_, weights_)
                          .horizon_steps();
  IterationMetrics m;
  ++iteration_;
  for (const auto& ep : episodes) {
    total_samples_ += ep.length();
    m.avg_normalized_return += ep.normalized_return(horizon);
    m.avg_episode_len += ep.length();
  }
  m.iteration = iteration_;
  m.total_samples = total_samples_;
  m.avg_normalized_return /= static_cast<double>(episodes.size());
  m.avg_episode_len /= static_cast<double>(episodes.size());
  m.policy_loss = policy_steps ? -surrogate / policy_steps : 0.0;
  m.value_loss = value_steps ? value_loss / value_steps : 0.0;
  return m;
}

EvalStats Trainer::evaluate(int episodes, bool mean_actions) {
  if (episodes < 1) throw std::invalid_argument("need at least one episode");
  const int horizon = ImitEnv(model_, motion_, episode_cfg_, weights_)
                          .horizon_steps();
  EvalStats stats;
  double reward_sum = 0.0;
  std::int64_t steps = 0;
  for (int e = 0; e < episodes; ++e) {
    EpisodeData ep = run_episode(static_cast<std::uint64_t>(e), !mean_actions);
    stats.avg_normalized_return += ep.normalized_return(horizon);
    stats.avg_episode_len += ep.length();
    for (double r : ep.rewards) reward_sum += r;
    steps += ep.length();
  }
  stats.avg_normalized_return /= episodes;
  stats.avg_episode_len /= episodes;
  stats.avg_reward = steps ? reward_sum / static_cast<double>(steps) : 0.0;
  return stats;
}

void Trainer::save_checkpoint(const std::string& path) const {
  Checkpoint ck;
  ck.policy_layers = policy_.net().layer_sizes();
  ck.value_layers = value_.layer_sizes();
  ck.action_std = policy_.action_std();
  ck.iteration = iteration_;
  ck.total_samples = total_samples_;
  ck.episode_counter = episode_counter_;
  ck.normalizer = normalizer_;
  ck.init_dist = init_dist_;
  ck.config = cfg_;
  ck.policy_offset = policy_.output_offset();
  ck.policy_params = policy_.net().params();
  ck.value_params = value_.params();
  sfv::save_checkpoint(ck, path);
}

void Trainer::load_checkpoint(const std::string& path) {
  const Checkpoint ck = sfv::load_checkpoint(path);
  if (ck.policy_layers != policy_.net().layer_sizes() ||
      ck.value_layers != value_.layer_sizes())
    throw std::runtime_error(
        "checkpoint network shapes do not match this trainer");
  policy_.net().set_params(ck.policy_params);
  if (ck.policy_offset.size() > 0) policy_.set_output_offset(ck.policy_offset);
  value_.set_params(ck.value_params);
  normalizer_ = ck.normalizer;
  init_dist_ = ck.init_dist;
  iteration_ = ck.iteration;
  total_samples_ = ck.total_samples;
  episode_counter_ = ck.episode_counter;
  policy_opt_.reset();
  value_opt_.reset();
  init_buffer_.clear();
}

}  // namespace sfv
